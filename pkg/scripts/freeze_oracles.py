"""Regenerate tests/data/oracles.json from routes that do not touch latnet.

Each entry is computed with plain loops, closed forms, or scipy, so the test
suite compares the package against values it could not have produced itself.

    python3 scripts/freeze_oracles.py
"""

from __future__ import annotations

import itertools
import json
from pathlib import Path

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def dense_circulant(blocks: dict, period: int, nu: int, rows: int, cols: int) -> np.ndarray:
    """Block (j, k) = block_{(j - k) mod L}, assembled site by site."""
    sites = list(itertools.product(range(period), repeat=nu))
    index = {s: i for i, s in enumerate(sites)}
    out = np.zeros((len(sites) * rows, len(sites) * cols))
    for j in sites:
        for off, mat in blocks.items():
            k = tuple((jj - o) % period for jj, o in zip(j, off))
            out[index[j] * rows:(index[j] + 1) * rows,
                index[k] * cols:(index[k] + 1) * cols] += mat
    return out


def stencil_json(blocks: dict, nu: int, rows: int, cols: int) -> dict:
    return {"nu": nu, "rows": rows, "cols": cols,
            "blocks": [{"offset": list(k), "matrix": np.asarray(v).tolist()}
                       for k, v in sorted(blocks.items())]}


def laplacian_circulant() -> dict:
    lap = {(-1,): np.array([[1.0]]), (0,): np.array([[-2.0]]), (1,): np.array([[1.0]])}
    eig = np.sort(np.linalg.eigvalsh(dense_circulant(lap, 8, 1, 1, 1)))
    return {"period": 8, "eigenvalues": eig.tolist()}


def free_response() -> dict:
    """x(t) = expm(A t) x0 for a fixed random 2-state chain on L = 8."""
    rng = np.random.default_rng(20240601)
    n, period = 2, 8
    a = {(-1,): 0.3 * rng.standard_normal((n, n)),
         (0,): 0.3 * rng.standard_normal((n, n)) - np.eye(n),
         (1,): 0.3 * rng.standard_normal((n, n))}
    dense = dense_circulant(a, period, 1, n, n)
    x0 = rng.standard_normal(period * n)
    times = [0.5, 1.0, 2.0]
    states = [(expm(dense * t) @ x0).tolist() for t in times]
    return {"a": stencil_json(a, 1, n, n), "period": period, "x0": x0.tolist(),
            "times": times, "states": states}


def chain_lyapunov() -> dict:
    """Scalar chain a=2, c=0.5 and a 2x2 coupled example, solved by scipy."""
    sig = np.linspace(-np.pi, np.pi, 9)[:-1]
    scalar = [float(solve_continuous_lyapunov(np.array([[-2 + np.cos(s)]]), -np.eye(1))[0, 0])
              for s in sig]
    a0 = np.array([[-1.0, 0.4], [-0.2, -1.5]])
    a1 = np.array([[0.1, 0.0], [0.3, 0.2]])
    mats = []
    for s in sig:
        sym = a0 + np.exp(-1j * s) * a1 + np.exp(1j * s) * a1.T
        v = solve_continuous_lyapunov(sym.conj().T, -np.eye(2))
        mats.append({"re": v.real.tolist(), "im": v.imag.tolist()})
    return {"sigmas": sig.tolist(), "scalar": scalar,
            "coupled": {"a": stencil_json({(0,): a0, (1,): a1, (-1,): a1.T}, 1, 2, 2),
                        "v": mats}}


def damped_oscillator() -> dict:
    """F(i w) = 1 / (k - w^2 + i gamma w) for a unit mass, k = 1.1, gamma = 0.5."""
    k, gamma = 1.1, 0.5
    omegas = [0.0, 0.3, 1.0, 1.0488088481701516, 3.0]
    f = [1.0 / (k - w * w + 1j * gamma * w) for w in omegas]
    return {"k": k, "gamma": gamma, "omegas": omegas,
            "re": [z.real for z in f], "im": [z.imag for z in f]}


def main() -> None:
    data = {
        "laplacian_circulant": laplacian_circulant(),
        "free_response": free_response(),
        "lyapunov": chain_lyapunov(),
        "damped_oscillator": damped_oscillator(),
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
