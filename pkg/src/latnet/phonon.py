"""Dispersion relations of isolated Hamiltonian lattice networks.

State per site is ``x = (q, p)`` with Hamiltonian
``1/2 sum_j (p_j^T M^{-1} p_j + q_j^T sum_k K_{j-k} q_k)``.  For a positive
semidefinite stiffness the generator has purely imaginary spectrum
``+-i sqrt(lambda)``, lambda ranging over the eigenvalues of ``K(sigma) M^{-1}``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NumericalFailure
from .stencil import MatrixStencil, NetworkModel, TorusGrid

SIMPLICITY_GAP = 1e-6


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    mass: np.ndarray
    stiffness: MatrixStencil

    def __post_init__(self):
        mass = np.atleast_2d(np.asarray(self.mass, dtype=float))
        object.__setattr__(self, "mass", mass)
        dof = mass.shape[0]
        if mass.shape != (dof, dof) or not np.allclose(mass, mass.T, rtol=0, atol=1e-14 * np.abs(mass).max()):
            raise InvalidArgument("mass matrix must be square and symmetric")
        try:
            np.linalg.cholesky(mass)
        except np.linalg.LinAlgError as exc:
            raise InvalidArgument("mass matrix must be positive definite") from exc
        if self.stiffness.shape != (dof, dof):
            raise InvalidArgument(f"stiffness blocks must be {dof}x{dof}")
        scale = 1.0 + max((np.abs(b).max() for b in self.stiffness.blocks.values()), default=0.0)
        if not self.stiffness.is_block_symmetric(atol=1e-12 * scale):
            raise InvalidArgument("stiffness must satisfy K_{-l} = K_l^T")

    @property
    def dof(self) -> int:
        return self.mass.shape[0]

    @property
    def n(self) -> int:
        return 2 * self.dof

    @property
    def nu(self) -> int:
        return self.stiffness.dim_nu

    def mass_inv_sqrt(self) -> np.ndarray:
        w, u = np.linalg.eigh(self.mass)
        return (u / np.sqrt(w)) @ u.T

    def stiffness_symbols(self, sigmas) -> np.ndarray:
        k = self.stiffness.symbols(sigmas)
        return 0.5 * (k + np.conj(np.swapaxes(k, -1, -2)))


def build_hamiltonian_model(spec: HamiltonianSpec, b: MatrixStencil | None = None,
                            c: MatrixStencil | None = None,
                            d: MatrixStencil | None = None) -> NetworkModel:
    """Generator ``A_l = J V_l``: ``[[0, delta_l0 M^{-1}], [-K_l, 0]]``.

    Missing B, C, D default to zero stencils with one input/output per degree
    of freedom.
    """
    nu, dof, n = spec.nu, spec.dof, spec.n
    a = spec.stiffness.scaled(-1.0).kron_embed(n, n, dof, 0)
    a = a + MatrixStencil.constant(np.linalg.inv(spec.mass), nu).kron_embed(n, n, 0, dof)
    return NetworkModel.from_stencils(a, b, c, d, m=dof, r=dof)


def hamiltonian_storage(spec: HamiltonianSpec) -> MatrixStencil:
    """Energy stencil ``V_l = diag(K_l, delta_l0 M^{-1})``."""
    n, dof = spec.n, spec.dof
    return (spec.stiffness.kron_embed(n, n, 0, 0)
            + MatrixStencil.constant(np.linalg.inv(spec.mass), spec.nu).kron_embed(n, n, dof, dof))


@dataclass(frozen=True)
class DispersionSurface:
    grid: TorusGrid
    sigmas: np.ndarray
    branches: np.ndarray      # (N, dof), ascending per node
    psd_flags: np.ndarray     # (N,)

    def write_csv(self, path) -> None:
        nu, dof = self.sigmas.shape[1], self.branches.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"sigma_{i + 1}" for i in range(nu)]
                       + [f"omega_{i + 1}" for i in range(dof)] + ["psd_flag"])
            for sg, om, ok in zip(self.sigmas, self.branches, self.psd_flags):
                w.writerow([repr(float(x)) for x in sg] + [repr(float(x)) for x in om]
                           + [int(ok)])


def _frequency_squares(spec: HamiltonianSpec, sigmas: np.ndarray):
    """Eigenvalues of ``M^{-1/2} K(sigma) M^{-1/2}`` (ascending) and ``||K(sigma)||``."""
    k = spec.stiffness_symbols(sigmas)
    mh = spec.mass_inv_sqrt()
    try:
        lam = np.linalg.eigvalsh(mh @ k @ mh)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"dispersion eigensolve failed: {exc}") from exc
    knorm = np.linalg.svd(k, compute_uv=False)[:, 0]
    return lam, knorm


def dispersion(spec: HamiltonianSpec, grid: TorusGrid | None = None,
               tol: float | None = None) -> DispersionSurface:
    """Phonon frequencies ``omega_i(sigma) = sqrt(lambda_i)`` on a grid.

    Eigenvalues in ``[-tol, 0)`` are round-off and clamped to zero; anything
    below ``-tol`` marks the node as not PSD (its branch is still clamped).
    The default tolerance is ``1e-10 (1 + ||K(sigma)||)`` per node.
    """
    grid = grid or TorusGrid.default(spec.nu)
    sigmas = grid.nodes()
    lam, knorm = _frequency_squares(spec, sigmas)
    node_tol = 1e-10 * (1.0 + knorm) if tol is None else np.full(len(sigmas), tol)
    psd = lam[:, 0] >= -node_tol
    return DispersionSurface(grid, sigmas, np.sqrt(np.clip(lam, 0.0, None)), psd)


@dataclass(frozen=True)
class LongWaveReport:
    gamma: np.ndarray           # (nu, nu, dof, dof)
    longwave_speed: float
    sum_zero_residual: float
    second_moment: float
    worst_direction: np.ndarray


def sphere_directions(nu: int, samples: int = 256) -> np.ndarray:
    """Unit vectors: the pair +-1 for nu=1, uniform angles for nu=2, Fibonacci points otherwise."""
    if nu == 1:
        return np.array([[1.0], [-1.0]])
    if nu == 2:
        t = 2.0 * np.pi * np.arange(samples) / samples
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    if nu == 3:
        i = np.arange(samples) + 0.5
        z = 1.0 - 2.0 * i / samples
        phi = np.pi * (1.0 + 5 ** 0.5) * i
        rho = np.sqrt(1.0 - z * z)
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    pts = np.random.default_rng(0).normal(size=(samples, nu))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def gamma_tensor(stiffness: MatrixStencil) -> np.ndarray:
    """Hessian of K(sigma) at the origin: ``Gamma_jk = -sum_l l_j l_k K_l``."""
    nu, dof = stiffness.dim_nu, stiffness.rows
    gamma = np.zeros((nu, nu, dof, dof))
    for off, blk in stiffness.blocks.items():
        ell = np.asarray(off, dtype=float)
        gamma -= np.einsum("j,k,ab->jkab", ell, ell, blk)
    return gamma


def longwave_analysis(spec: HamiltonianSpec, sphere_samples: int = 256) -> LongWaveReport:
    """Quadratic behaviour of K(sigma) near sigma = 0 and the long-wave phase speed.

    The speed is ``max_theta sqrt(1/2 lambda_max(sum theta_j theta_k Gamma_jk M^{-1}))``
    over sampled unit directions theta.
    """
    gamma = gamma_tensor(spec.stiffness)
    mh = spec.mass_inv_sqrt()
    dirs = sphere_directions(spec.nu, sphere_samples)
    quad = np.einsum("tj,tk,jkab->tab", dirs, dirs, gamma)
    lam_max = np.linalg.eigvalsh(mh @ quad @ mh)[:, -1]
    speeds = np.sqrt(np.clip(0.5 * lam_max, 0.0, None))
    i = int(np.argmax(speeds))
    second = sum(float(np.dot(off, off)) * np.linalg.norm(blk, 2)
                 for off, blk in spec.stiffness.blocks.items())
    return LongWaveReport(
        gamma=gamma,
        longwave_speed=float(speeds[i]),
        sum_zero_residual=float(np.linalg.norm(spec.stiffness.block_sum(), 2)),
        second_moment=float(second),
        worst_direction=dirs[i].copy(),
    )


@dataclass(frozen=True)
class PhaseVelocity:
    value: float
    witness_sigma: np.ndarray | None   # None when the sigma -> 0 limit dominates
    grid_value: float
    longwave_speed: float
    hypotheses_met: bool
    detail: str = ""


def phase_velocity_sup(spec: HamiltonianSpec, grid: TorusGrid | None = None,
                       tol: float = 1e-12) -> PhaseVelocity:
    """Sup of ``omega / |sigma|`` over nonzero nodes, joined with the long-wave limit.

    The boundedness result needs ``sum_l K_l = 0`` and a PSD stiffness; when
    either fails the numbers are still returned with ``hypotheses_met=False``.
    """
    grid = grid or TorusGrid.default(spec.nu)
    surf = dispersion(spec, grid)
    lw = longwave_analysis(spec)
    radius = np.linalg.norm(surf.sigmas, axis=1)
    nz = radius > 0
    ratio = surf.branches[nz, -1] / radius[nz]
    j = int(np.argmax(ratio)) if ratio.size else None
    grid_value = float(ratio[j]) if ratio.size else 0.0
    problems = []
    if lw.sum_zero_residual >= tol:
        problems.append(f"sum of stiffness blocks has norm {lw.sum_zero_residual:.3e}")
    if not surf.psd_flags.all():
        problems.append(f"stiffness symbol indefinite at {int((~surf.psd_flags).sum())} nodes")
    if grid_value >= lw.longwave_speed and j is not None:
        value, witness = grid_value, surf.sigmas[nz][j].copy()
    else:
        value, witness = lw.longwave_speed, None
    return PhaseVelocity(value, witness, grid_value, lw.longwave_speed, not problems,
                         "hypotheses-not-met: " + "; ".join(problems) if problems else "")


@dataclass(frozen=True)
class NotDifferentiable:
    """Marker returned by :func:`group_velocity` at degenerate or zero branches."""

    reason: str

    def __bool__(self):
        return False


def _omega_at(spec: HamiltonianSpec, sigma: np.ndarray):
    lam, knorm = _frequency_squares(spec, sigma[None, :])
    return lam[0], knorm[0]


def group_velocity(spec: HamiltonianSpec, sigma, branch_index: int,
                   h_fd: float = 1e-5):
    """Central-difference gradient of ``omega_branch`` at sigma.

    Returns a :class:`NotDifferentiable` marker when the branch is degenerate
    (relative eigenvalue gap below 1e-6) or sits at zero frequency.
    """
    sigma = np.asarray(sigma, dtype=float).reshape(-1)
    if sigma.shape != (spec.nu,):
        raise InvalidArgument(f"sigma must have length {spec.nu}")
    if not 0 <= branch_index < spec.dof:
        raise InvalidArgument(f"branch_index must be in [0, {spec.dof})")
    lam, knorm = _omega_at(spec, sigma)
    scale = max(1.0, float(np.abs(lam).max()))
    if lam[branch_index] <= 1e-10 * (1.0 + knorm):
        return NotDifferentiable("zero-frequency branch (square-root kink)")
    gaps = np.abs(np.delete(lam, branch_index) - lam[branch_index])
    if gaps.size and gaps.min() <= SIMPLICITY_GAP * scale:
        return NotDifferentiable("degenerate branch (multiplicity > 1)")
    grad = np.empty(spec.nu)
    for j in range(spec.nu):
        e = np.zeros(spec.nu)
        e[j] = h_fd
        up = np.sqrt(max(_omega_at(spec, sigma + e)[0][branch_index], 0.0))
        dn = np.sqrt(max(_omega_at(spec, sigma - e)[0][branch_index], 0.0))
        grad[j] = (up - dn) / (2.0 * h_fd)
    return grad
