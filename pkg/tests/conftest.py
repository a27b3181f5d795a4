from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from latnet import MatrixStencil, NetworkModel

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracles() -> dict:
    return json.loads((DATA / "oracles.json").read_text())


def random_stencil(rng, nu: int, rows: int, cols: int, radius: int = 1,
                   nblocks: int = 3, scale: float = 1.0) -> MatrixStencil:
    blocks = {}
    for _ in range(nblocks):
        off = tuple(int(v) for v in rng.integers(-radius, radius + 1, size=nu))
        blocks[off] = scale * rng.standard_normal((rows, cols))
    return MatrixStencil(nu, rows, cols, blocks)


def random_model(rng, nu: int = 1, n: int = 2, m: int = 1, r: int = 1,
                 shift: float = 0.0, scale: float = 0.5) -> NetworkModel:
    a = random_stencil(rng, nu, n, n, scale=scale)
    if shift:
        a = a + MatrixStencil.identity(nu, n, -shift)
    return NetworkModel(a, random_stencil(rng, nu, n, m, scale=scale),
                        random_stencil(rng, nu, r, n, scale=scale),
                        random_stencil(rng, nu, r, m, nblocks=1, scale=scale))


@st.composite
def stencils(draw, nu=None, rows=None, cols=None, radius: int = 2):
    nu = draw(st.integers(1, 2)) if nu is None else nu
    rows = draw(st.integers(1, 3)) if rows is None else rows
    cols = draw(st.integers(1, 3)) if cols is None else cols
    offsets = draw(st.lists(st.tuples(*[st.integers(-radius, radius)] * nu),
                            max_size=4, unique=True))
    vals = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
    blocks = {off: np.array(draw(st.lists(vals, min_size=rows * cols, max_size=rows * cols)))
              .reshape(rows, cols) for off in offsets}
    return MatrixStencil(nu, rows, cols, blocks)


@st.composite
def torus_points(draw, nu: int):
    ang = st.floats(-np.pi, np.pi, allow_nan=False)
    return np.array([draw(ang) for _ in range(nu)])


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
