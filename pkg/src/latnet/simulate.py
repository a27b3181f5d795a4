"""Time-domain simulation on a periodic truncation of the lattice.

The infinite network is replaced by the torus ``(Z / L Z)^nu``: block-Toeplitz
operators become block-circulant matrices, which the DFT diagonalises exactly.
That gives two independent solvers for the same finite system (dense
real-space RK4 and per-frequency RK4), and lets the energy identity
``S - dH/dt = 1/2 <Z, N Z>`` be checked sample by sample.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .certify import StorageSpec, SupplySpec, dissipation_stack
from .errors import (DivergenceError, InvalidArgument, NumericalFailure,
                     PreconditionViolation, UnsupportedForN)
from .phonon import HamiltonianSpec, build_hamiltonian_model
from .stencil import (MatrixStencil, NetworkModel, TorusGrid, check_period,
                      circulant_embed, circulant_frequencies, lattice_sites, operator_norm)

STEP_LIMIT = 0.5

InputSignal = Callable[[float], np.ndarray]


class TruncatedNetwork:
    """A :class:`NetworkModel` on the periodic lattice of period L per axis."""

    def __init__(self, model: NetworkModel, period: int):
        for s in (model.a, model.b, model.c, model.d):
            check_period(s, period)
        self.model = model
        self.period = period
        self.a = circulant_embed(model.a, period)
        self.b = circulant_embed(model.b, period)
        self.c = circulant_embed(model.c, period)
        self.d = circulant_embed(model.d, period)

    @property
    def nu(self) -> int:
        return self.model.nu

    @property
    def n_sites(self) -> int:
        return self.period ** self.nu

    def sites(self) -> np.ndarray:
        return lattice_sites(self.period, self.nu)

    def frequencies(self) -> np.ndarray:
        return circulant_frequencies(self.period, self.nu)

    def embed(self, stencil: MatrixStencil) -> np.ndarray:
        return circulant_embed(stencil, self.period)

    def to_fourier(self, vec: np.ndarray, width: int) -> np.ndarray:
        """DFT ``X(sigma_k) = sum_j exp(-i j.sigma_k) x_j``; returns (..., n_sites, width)."""
        vec = np.asarray(vec)
        lead = vec.shape[:-1]
        cube = vec.reshape(lead + (self.period,) * self.nu + (width,))
        axes = tuple(range(len(lead), len(lead) + self.nu))
        return np.fft.fftn(cube, axes=axes).reshape(lead + (self.n_sites, width))

    def from_fourier(self, spec: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_fourier`, flattened back to (..., n_sites * width)."""
        spec = np.asarray(spec)
        lead, width = spec.shape[:-2], spec.shape[-1]
        cube = spec.reshape(lead + (self.period,) * self.nu + (width,))
        axes = tuple(range(len(lead), len(lead) + self.nu))
        return np.fft.ifftn(cube, axes=axes).reshape(lead + (self.n_sites * width,))

    def fourier_input(self, signal: InputSignal | None) -> InputSignal | None:
        """Per-frequency version of a real-space input signal."""
        if signal is None:
            return None
        m = self.model.m
        return lambda t: self.to_fourier(_eval_input(signal, t, self.n_sites * m), m)


# -- input generators -----------------------------------------------------------

def _eval_input(signal: InputSignal | None, t: float, size: int) -> np.ndarray:
    if signal is None:
        return np.zeros(size)
    u = np.asarray(signal(t), dtype=float).reshape(-1)
    if u.size != size:
        raise InvalidArgument(f"input signal returned {u.size} values, expected {size}")
    return u


def pulse(profile, t_on: float, t_off: float, shape: str = "hann") -> InputSignal:
    """Compactly supported pulse ``envelope(t) * profile`` on ``[t_on, t_off]``.

    ``shape='hann'`` uses a sin^2 envelope (C^1, friendly to RK4);
    ``shape='box'`` is the rectangular window.
    """
    profile = np.asarray(profile, dtype=float).reshape(-1)
    width = t_off - t_on
    if width <= 0:
        raise InvalidArgument("pulse needs t_off > t_on")
    if shape not in ("hann", "box"):
        raise InvalidArgument(f"unknown pulse shape {shape!r}")

    def signal(t):
        if t < t_on or t > t_off:
            return np.zeros_like(profile)
        if shape == "box":
            return profile
        return np.sin(np.pi * (t - t_on) / width) ** 2 * profile

    return signal


def sine(profile, omega: float, phase: float = 0.0, t_off: float | None = None) -> InputSignal:
    profile = np.asarray(profile, dtype=float).reshape(-1)

    def signal(t):
        if t_off is not None and t > t_off:
            return np.zeros_like(profile)
        return np.sin(omega * t + phase) * profile

    return signal


def plane_wave(tn: TruncatedNetwork, k_index, omega: float, direction) -> InputSignal:
    """``u_j(t) = cos(omega t + j.sigma) direction`` with sigma on the circulant grid."""
    sigma = 2.0 * np.pi * np.broadcast_to(np.asarray(k_index, dtype=float), (tn.nu,)) / tn.period
    phase = tn.sites() @ sigma
    direction = np.asarray(direction, dtype=float).reshape(1, -1)
    return lambda t: (np.cos(omega * t + phase)[:, None] * direction).reshape(-1)


def sampled(times, values) -> InputSignal:
    """Piecewise-linear interpolation of sampled inputs (values: (T, size))."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float).reshape(len(times), -1)

    def signal(t):
        i = np.searchsorted(times, t, side="right") - 1
        if i < 0 or t > times[-1]:
            return np.zeros(values.shape[1])
        if i >= len(times) - 1:
            return values[-1]
        w = (t - times[i]) / (times[i + 1] - times[i])
        return (1 - w) * values[i] + w * values[i + 1]

    return signal


# -- traces -----------------------------------------------------------------------

@dataclass
class SimulationTrace:
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    hamiltonian: np.ndarray
    hdot: np.ndarray
    supply: np.ndarray
    n_form: np.ndarray
    work: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        """Dissipation rate ``S - dH/dt`` from real-space quantities."""
        return self.supply - self.hdot

    @property
    def x_norm(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    @property
    def y_norm(self) -> np.ndarray:
        return np.linalg.norm(self.outputs, axis=1)

    @property
    def u_norm(self) -> np.ndarray:
        return np.linalg.norm(self.inputs, axis=1)

    def write_csv(self, path) -> None:
        cols = [self.times, self.x_norm, self.y_norm, self.u_norm,
                self.hamiltonian, self.supply, self.residual]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "x_norm", "y_norm", "u_norm", "H", "S", "residual"])
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])

    def dump_states(self, path) -> None:
        """Raw little-endian float64 state array plus a JSON sidecar ``<path>.json``."""
        arr = np.ascontiguousarray(self.states, dtype="<f8")
        arr.tofile(path)
        meta = {
            "shape": list(arr.shape),
            "dtype": "<f8",
            "order": "C",
            "layout": "time, lattice site (row-major), state component",
            "t0": float(self.times[0]),
            "dt": float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0,
        }
        with open(f"{path}.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)


def _check_step(model: NetworkModel, dt: float, t_end: float) -> int:
    if dt <= 0 or t_end < 0:
        raise InvalidArgument("need dt > 0 and t_end >= 0")
    a_norm = operator_norm(model.a, TorusGrid.default(model.nu))
    if dt * a_norm >= STEP_LIMIT:
        raise InvalidArgument(
            f"step too large for stability: dt*||A|| = {dt * a_norm:.3g} >= {STEP_LIMIT}"
        )
    return int(round(t_end / dt))


def integrate(tn: TruncatedNetwork, x0=None, input_signal: InputSignal | None = None,
              t_end: float = 1.0, dt: float = 1e-3, storage: StorageSpec | None = None,
              supply: SupplySpec | None = None) -> SimulationTrace:
    """Classical RK4 on the block-circulant system, sampled every ``dt``.

    The cumulative work ``W = int S dt`` is integrated alongside the state with
    the same stages.  Quantities that need a storage or supply are NaN when the
    corresponding argument is omitted.
    """
    model = tn.model
    steps = _check_step(model, dt, t_end)
    nx, nu_ = tn.n_sites * model.n, tn.n_sites * model.m
    x = np.zeros(nx) if x0 is None else np.asarray(x0, dtype=float).reshape(-1).copy()
    if x.size != nx:
        raise InvalidArgument(f"x0 must have {nx} entries")
    if supply is not None and supply.degree > 0:
        raise UnsupportedForN("time-domain supply needs a static G")
    g = tn.embed(supply.g) if supply is not None else None
    a, b, c, d = tn.a, tn.b, tn.c, tn.d

    def rhs(x, u):
        return a @ x + b @ u

    def rate(x, u):
        return float(u @ (g @ (c @ x + d @ u))) if g is not None else 0.0

    times = dt * np.arange(steps + 1)
    xs = np.empty((steps + 1, nx))
    us = np.empty((steps + 1, nu_))
    work = np.zeros(steps + 1)
    xs[0] = x
    us[0] = _eval_input(input_signal, 0.0, nu_)
    w = 0.0
    for i in range(steps):
        t = times[i]
        u0 = us[i]
        uh = _eval_input(input_signal, t + 0.5 * dt, nu_)
        u1 = _eval_input(input_signal, t + dt, nu_)
        k1 = rhs(x, u0)
        x2 = x + 0.5 * dt * k1
        k2 = rhs(x2, uh)
        x3 = x + 0.5 * dt * k2
        k3 = rhs(x3, uh)
        x4 = x + dt * k3
        k4 = rhs(x4, u1)
        if g is not None:
            w += dt / 6.0 * (rate(x, u0) + 2 * rate(x2, uh) + 2 * rate(x3, uh) + rate(x4, u1))
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(times[i + 1])
        xs[i + 1] = x
        us[i + 1] = u1
        work[i + 1] = w
    return _finish_trace(tn, times, xs, us, work if g is not None else np.full(steps + 1, np.nan),
                         storage, supply, g)


def _finish_trace(tn, times, xs, us, work, storage, supply, g) -> SimulationTrace:
    model = tn.model
    ys = xs @ tn.c.T + us @ tn.d.T
    nan = np.full(len(times), np.nan)
    hamiltonian = hdot = s_rate = n_form = nan
    if g is not None:
        s_rate = np.einsum("ti,ti->t", us, ys @ g.T)
    if storage is not None:
        v = tn.embed(storage.v)
        xdot = xs @ tn.a.T + us @ tn.b.T
        hamiltonian = 0.5 * np.einsum("ti,ti->t", xs, xs @ v.T)
        hdot = 0.5 * np.einsum("ti,ti->t", xs, xdot @ (v + v.T).T)
        if supply is not None:
            sig = tn.frequencies()
            nmat = dissipation_stack(model, storage, supply, sig)
            z = np.concatenate([tn.to_fourier(xs, model.n), tn.to_fourier(us, model.m)], axis=-1)
            quad = np.einsum("tki,kij,tkj->t", z.conj(), nmat, z).real
            n_form = quad / (2.0 * tn.n_sites)
    return SimulationTrace(times, xs, us, ys, hamiltonian, hdot, s_rate, n_form, work)


@dataclass
class SpectralTrace:
    times: np.ndarray
    sigmas: np.ndarray
    states: np.ndarray    # (T, n_nodes, n) complex
    inputs: np.ndarray    # (T, n_nodes, m) complex
    outputs: np.ndarray   # (T, n_nodes, r) complex


def spectral_integrate(model: NetworkModel, period: int, x0_hat=None,
                       u_hat: InputSignal | None = None, t_end: float = 1.0,
                       dt: float = 1e-3) -> SpectralTrace:
    """RK4 on ``dX/dt = A(sigma) X + B(sigma) U`` independently at each ``sigma = 2 pi k / L``.

    ``x0_hat`` has shape (L^nu, n) and ``u_hat(t)`` returns (L^nu, m), both in
    the frequency order of :func:`circulant_frequencies`.
    """
    steps = _check_step(model, dt, t_end)
    for s in (model.a, model.b, model.c, model.d):
        check_period(s, period)
    sig = circulant_frequencies(period, model.nu)
    k = len(sig)
    a, b, c, d = model.symbols(sig)
    x = np.zeros((k, model.n), complex) if x0_hat is None else np.array(x0_hat, dtype=complex)
    if x.shape != (k, model.n):
        raise InvalidArgument(f"x0_hat must have shape {(k, model.n)}")

    def uh(t):
        if u_hat is None:
            return np.zeros((k, model.m), complex)
        return np.asarray(u_hat(t), dtype=complex).reshape(k, model.m)

    def rhs(x, u):
        return np.einsum("kij,kj->ki", a, x) + np.einsum("kij,kj->ki", b, u)

    times = dt * np.arange(steps + 1)
    xs = np.empty((steps + 1, k, model.n), complex)
    us = np.empty((steps + 1, k, model.m), complex)
    xs[0], us[0] = x, uh(0.0)
    for i in range(steps):
        t = times[i]
        u0, um, u1 = us[i], uh(t + 0.5 * dt), uh(t + dt)
        k1 = rhs(x, u0)
        k2 = rhs(x + 0.5 * dt * k1, um)
        k3 = rhs(x + 0.5 * dt * k2, um)
        k4 = rhs(x + dt * k3, u1)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(times[i + 1])
        xs[i + 1], us[i + 1] = x, u1
    ys = np.einsum("kij,tkj->tki", c, xs) + np.einsum("kij,tkj->tki", d, us)
    return SpectralTrace(times, sig, xs, us, ys)


# -- phonon plane waves ---------------------------------------------------------------

@dataclass(frozen=True)
class PhononWaveReport:
    residual: float
    omega: float
    sigma: np.ndarray
    eigen_residual: float
    trace: SimulationTrace | None = field(default=None, repr=False)


def phonon_eigenpair(model: NetworkModel, sigma, branch: int = 0, tol: float = 1e-9):
    """Eigenpair ``(i omega, z)`` of A(sigma) with omega >= 0, ordered by omega.

    Raises :class:`PreconditionViolation` when the selected eigenvalue has a
    real part beyond ``tol (1 + |s|)``, i.e. the mode is not a lossless phonon.
    """
    a = model.a.symbol(sigma)
    vals, vecs = np.linalg.eig(a)
    order = [i for i in np.argsort(vals.imag) if vals[i].imag >= -tol * (1 + abs(vals[i]))]
    if branch >= len(order):
        raise InvalidArgument(f"branch {branch} out of range ({len(order)} available)")
    i = order[branch]
    s, z = vals[i], vecs[:, i] / np.linalg.norm(vecs[:, i])
    if abs(s.real) > tol * (1.0 + abs(s)):
        raise PreconditionViolation(
            f"eigenvalue {s:.6g} is not purely imaginary; plane-wave check needs a lossless system"
        )
    eig_res = float(np.linalg.norm(a @ z - s * z))
    if eig_res > tol * (1.0 + np.linalg.norm(a, 2)):
        raise NumericalFailure(f"eigenpair residual {eig_res:.3e} too large", np.asarray(sigma))
    return float(s.imag), z, eig_res


def phonon_wave_check(system, period: int, k_index, branch: int = 0,
                      amplitude: float = 1.0, t_end: float = 10.0,
                      dt: float = 1e-3) -> PhononWaveReport:
    """Compare RK4 against the analytic plane wave ``Re(exp(i omega t + i k.sigma) z)``.

    ``system`` is a :class:`HamiltonianSpec` or any :class:`NetworkModel`.
    The residual is ``max_t ||x_sim(t) - x_exact(t)||_2 / amplitude``.
    """
    model = build_hamiltonian_model(system) if isinstance(system, HamiltonianSpec) else system
    tn = TruncatedNetwork(model, period)
    k_vec = np.broadcast_to(np.asarray(k_index, dtype=float), (model.nu,))
    sigma = 2.0 * np.pi * k_vec / period
    omega, z, eig_res = phonon_eigenpair(model, sigma, branch)
    phase = np.exp(1j * (tn.sites() @ sigma))

    def exact(t):
        return amplitude * (np.exp(1j * omega * t) * phase[:, None] * z[None, :]).real.reshape(-1)

    trace = integrate(tn, exact(0.0), None, t_end, dt)
    if amplitude == 0:
        residual = float(np.abs(trace.states).max())
    else:
        err = max(np.linalg.norm(x - exact(t)) for t, x in zip(trace.times, trace.states))
        residual = float(err / abs(amplitude))
    return PhononWaveReport(residual, omega, sigma, eig_res, trace)
