"""Spatio-temporal transfer functions and grid stability verdicts."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, NumericalFailure, ResolventSingular
from .stencil import NetworkModel, TorusGrid

HURWITZ_TOL = 1e-9
RESOLVENT_COND_MAX = 1e12


@dataclass(frozen=True)
class TransferSample:
    omega: float
    sigma: np.ndarray
    value: np.ndarray


@dataclass(frozen=True)
class StabilityReport:
    grid: TorusGrid
    abscissa: float
    worst_sigma: np.ndarray
    hurwitz: bool
    tol_margin: float = HURWITZ_TOL

    def to_json(self) -> dict:
        return {
            "grid": self.grid.to_json(),
            "abscissa": self.abscissa,
            "worst_sigma": [float(x) for x in self.worst_sigma],
            "hurwitz": self.hurwitz,
            "tol_margin": self.tol_margin,
            "note": "grid-based verdict, not a continuum certificate",
        }


def _check_sigma(model: NetworkModel, sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float).reshape(-1)
    if sigma.shape != (model.nu,):
        raise InvalidArgument(f"sigma must have length {model.nu}, got {sigma.size}")
    return sigma


def resolvent_solve(s: complex, a_sym: np.ndarray, rhs: np.ndarray,
                    sigmas: np.ndarray) -> np.ndarray:
    """Solve ``(sI - A(sigma)) X = rhs`` for a stack of symbols.

    Raises :class:`ResolventSingular` at the first node whose condition
    number exceeds ``RESOLVENT_COND_MAX``.
    """
    n = a_sym.shape[-1]
    res = s * np.eye(n) - a_sym
    cond = np.linalg.cond(res)
    bad = ~np.isfinite(cond) | (cond > RESOLVENT_COND_MAX)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ResolventSingular(s, sigmas[i], float(cond[i]))
    return np.linalg.solve(res, rhs)


def transfer_stack(model: NetworkModel, s: complex, sigmas: np.ndarray,
                   symbols=None) -> np.ndarray:
    """``F(s, sigma)`` at every row of ``sigmas``; returns (N, r, m)."""
    a, b, c, d = symbols if symbols is not None else model.symbols(sigmas)
    if not model.b.blocks or not model.c.blocks:
        return d.astype(complex)
    return c @ resolvent_solve(s, a, b, sigmas) + d


def transfer_function(model: NetworkModel, s: complex, sigma) -> np.ndarray:
    """``C(sigma) (sI - A(sigma))^{-1} B(sigma) + D(sigma)`` at one point."""
    sigma = _check_sigma(model, sigma)
    return transfer_stack(model, complex(s), sigma[None, :])[0]


def transfer_sweep(model: NetworkModel, omegas: Iterable[float],
                   grid: TorusGrid) -> list[TransferSample]:
    """Sample ``F(i omega, sigma)`` over an omega list and every grid node."""
    sigmas = grid.nodes()
    syms = model.symbols(sigmas)
    out = []
    for w in omegas:
        vals = transfer_stack(model, 1j * float(w), sigmas, syms)
        out.extend(TransferSample(float(w), sg, v) for sg, v in zip(sigmas, vals))
    return out


def write_transfer_csv(samples: Sequence[TransferSample], path) -> None:
    """Columns: omega, sigma_1..sigma_nu, then re/im of each entry, row-major."""
    if not samples:
        raise InvalidArgument("no samples to write")
    nu = samples[0].sigma.size
    r, m = samples[0].value.shape
    header = ["omega"] + [f"sigma_{i + 1}" for i in range(nu)]
    for i in range(r):
        for j in range(m):
            header += [f"re_{i + 1}_{j + 1}", f"im_{i + 1}_{j + 1}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for smp in samples:
            row = [repr(smp.omega)] + [repr(float(x)) for x in smp.sigma]
            for z in smp.value.reshape(-1):
                row += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(row)


def max_real_eigs(a_sym: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
    """Largest real part of the spectrum of each matrix in the stack."""
    try:
        return np.linalg.eigvals(a_sym).real.max(axis=-1)
    except np.linalg.LinAlgError:
        for i, mat in enumerate(a_sym):
            try:
                np.linalg.eigvals(mat)
            except np.linalg.LinAlgError as exc:
                raise NumericalFailure(f"eigensolver failed: {exc}", sigmas[i]) from exc
        raise


def spectral_abscissa(model: NetworkModel, grid: TorusGrid | None = None) -> StabilityReport:
    """Max over grid nodes of the largest real part of ``spec A(sigma)``."""
    grid = grid or TorusGrid.default(model.nu)
    sigmas = grid.nodes()
    alpha = max_real_eigs(model.a.symbols(sigmas), sigmas)
    i = int(np.argmax(alpha))
    return StabilityReport(grid, float(alpha[i]), sigmas[i].copy(),
                           bool(alpha[i] < -HURWITZ_TOL))
