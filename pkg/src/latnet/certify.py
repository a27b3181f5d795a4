"""Energy-balance certificates for translation-invariant networks.

Every certificate reduces to checking that some Hermitian matrix built from
the symbols is positive semidefinite at sampled torus points (and, for the
frequency-domain tests, sampled temporal frequencies):

* dissipativity: the dissipation matrix ``N(sigma)`` of a storage ``V`` and a
  supply ``G``;
* passivity: ``E(omega, sigma) = F^* G^* + G F`` for the transfer function F;
* positive realness: ``F + F^*`` (identity supply);
* negative imaginariness: ``i (F - F^*)`` over nonnegative omega.

Reports carry the worst sampled point as a witness.  All verdicts are grid
verdicts; nothing here is a continuum proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgument, NumericalFailure, PreconditionViolation, UnsupportedForN
from .spectral import resolvent_solve, spectral_abscissa, transfer_function
from .stencil import MatrixStencil, NetworkModel, TorusGrid

PROPERTIES = ("dissipative", "passive", "positive_real", "negative_imaginary")
PBH_RANK_TOL = 1e-8
DEFAULT_REL_TOL = 1e-9


# -- supply and storage ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SupplySpec:
    """Supply rate ``<u, G y>`` with ``G_l(s) = g_l + sum_d s^d higher[d-1]_l``.

    The plain (static) supply has ``higher == ()``.
    """

    g: MatrixStencil
    higher: tuple[MatrixStencil, ...] = ()

    def __post_init__(self):
        for h in self.higher:
            if h.dim_nu != self.g.dim_nu or h.shape != self.g.shape:
                raise InvalidArgument("polynomial supply coefficients must share shape and nu")

    @classmethod
    def identity(cls, nu: int, m: int) -> "SupplySpec":
        return cls(MatrixStencil.identity(nu, m))

    @classmethod
    def derivative(cls, nu: int, m: int) -> "SupplySpec":
        """``G y = dy/dt``, whose Fourier-Laplace symbol is ``s I``."""
        return cls(MatrixStencil.zeros(nu, m, m), (MatrixStencil.identity(nu, m),))

    @property
    def degree(self) -> int:
        return len(self.higher)

    @property
    def shape(self) -> tuple[int, int]:
        return self.g.shape

    def symbols(self, s: complex, sigmas) -> np.ndarray:
        out = self.g.symbols(sigmas)
        for d, h in enumerate(self.higher, start=1):
            out = out + (s ** d) * h.symbols(sigmas)
        return out


def supply_symbol(spec: SupplySpec, s: complex, sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float).reshape(1, -1)
    return spec.symbols(complex(s), sigma)[0]


@dataclass(frozen=True, eq=False)
class StorageSpec:
    """Quadratic storage ``H = 1/2 <x, V x>`` from a block-symmetric stencil."""

    v: MatrixStencil

    def __post_init__(self):
        scale = 1.0 + max((np.abs(b).max() for b in self.v.blocks.values()), default=0.0)
        if not self.v.is_block_symmetric(atol=1e-12 * scale):
            raise InvalidArgument("storage stencil must satisfy V_{-l} = V_l^T")

    @property
    def n(self) -> int:
        return self.v.rows

    def symbols(self, sigmas) -> np.ndarray:
        return _hermitian(self.v.symbols(sigmas))


@dataclass(frozen=True, eq=False)
class StorageTable:
    """Per-node storage symbols on a grid, as produced by :func:`solve_storage`."""

    grid: TorusGrid
    sigmas: np.ndarray
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    def symbols(self, sigmas) -> np.ndarray:
        sigmas = np.asarray(sigmas, dtype=float)
        if sigmas.shape != self.sigmas.shape or not np.allclose(sigmas, self.sigmas):
            raise InvalidArgument("storage table is only defined on its own grid nodes")
        return self.values


def _hermitian(stack: np.ndarray) -> np.ndarray:
    return 0.5 * (stack + np.conj(np.swapaxes(stack, -1, -2)))


def _h(stack: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(stack, -1, -2))


# -- reports -------------------------------------------------------------------

@dataclass(frozen=True)
class OmegaSweep:
    """Sampled temporal frequencies plus an optional omega -> infinity limit."""

    omegas: np.ndarray
    include_infinity: bool = True
    description: str = "custom"

    @classmethod
    def default(cls, omega_max: float = 1e3, omega_min: float = 1e-2,
                points: int = 60) -> "OmegaSweep":
        pos = np.logspace(math.log10(omega_min), math.log10(omega_max), points)
        omegas = np.concatenate([-pos[::-1], [0.0], pos])
        desc = f"{{0}} U +-logspace({omega_min:g}, {omega_max:g}, {points})"
        return cls(omegas, True, desc)

    def nonnegative(self) -> "OmegaSweep":
        return OmegaSweep(self.omegas[self.omegas >= 0.0], self.include_infinity,
                          self.description + " restricted to omega >= 0")

    def to_json(self) -> dict:
        w = self.omegas
        return {
            "description": self.description,
            "count": int(w.size),
            "min": float(w.min()) if w.size else None,
            "max": float(w.max()) if w.size else None,
            "include_infinity": self.include_infinity,
        }


@dataclass(frozen=True)
class SideCondition:
    name: str
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "pass": self.passed, "detail": self.detail}


@dataclass(frozen=True)
class CertificationReport:
    property: str
    verdict: bool
    margin: float
    witness: dict | None
    grid: TorusGrid
    tol: float
    omega_sweep: OmegaSweep | None = None
    side_conditions: list[SideCondition] = field(default_factory=list)
    reason: str = ""

    def side(self, name: str) -> SideCondition:
        return next(c for c in self.side_conditions if c.name == name)

    def to_json(self) -> dict:
        wit = None
        if self.witness is not None:
            wit = {"sigma": [float(x) for x in self.witness["sigma"]],
                   "lambda_min": float(self.witness["lambda_min"])}
            if "omega" in self.witness:
                om = self.witness["omega"]
                wit["omega"] = "inf" if math.isinf(om) else float(om)
        return {
            "property": self.property,
            "verdict": self.verdict,
            "margin": None if math.isnan(self.margin) else float(self.margin),
            "tol": float(self.tol),
            "witness": wit,
            "grid": {"nu": self.grid.dim_nu, "points_per_axis": self.grid.points_per_axis},
            "omega_sweep": self.omega_sweep.to_json() if self.omega_sweep else None,
            "side_conditions": [c.to_json() for c in self.side_conditions],
            "reason": self.reason,
        }


@dataclass(frozen=True)
class StabilityMargin:
    mu: float
    v_norm: float
    condition_number: float
    bound_factor: float

    def to_json(self) -> dict:
        return {"mu": self.mu, "v_norm": self.v_norm,
                "condition_number": self.condition_number,
                "bound_factor": self.bound_factor}


@dataclass(frozen=True)
class StorageSolution:
    table: StorageTable
    margin: StabilityMargin
    h_bounds: np.ndarray  # (N, 2): lower/upper factors of H(sigma) / |X(sigma)|^2


# -- dissipation matrix ---------------------------------------------------------

def _dissipation_stack(syms, v, g) -> np.ndarray:
    a, b, c, d = syms
    top = np.concatenate([-(_h(a) @ v) - v @ a, _h(c) @ _h(g) - v @ b], axis=-1)
    bot = np.concatenate([g @ c - _h(b) @ v, g @ d + _h(d) @ _h(g)], axis=-1)
    return _hermitian(np.concatenate([top, bot], axis=-2))


def _check_static(supply: SupplySpec):
    if supply.degree > 0:
        raise UnsupportedForN(
            "the dissipation matrix is defined only for a static (degree-0) supply"
        )


def _check_shapes(model: NetworkModel, storage, supply: SupplySpec):
    if storage is not None and storage.n != model.n:
        raise InvalidArgument(f"storage has order {storage.n}, model state dimension is {model.n}")
    if supply.shape != (model.m, model.r):
        raise InvalidArgument(f"supply must be {model.m}x{model.r}, got {supply.shape}")


def dissipation_matrix(model: NetworkModel, storage: StorageSpec, supply: SupplySpec,
                       sigma) -> np.ndarray:
    """Hermitian matrix ``N(sigma)`` of order n+m with ``S - dH/dt = 1/2 Z^* N Z``."""
    _check_static(supply)
    _check_shapes(model, storage, supply)
    sig = np.asarray(sigma, dtype=float).reshape(1, -1)
    if sig.shape[1] != model.nu:
        raise InvalidArgument(f"sigma must have length {model.nu}")
    return _dissipation_stack(model.symbols(sig), storage.symbols(sig),
                              supply.g.symbols(sig))[0]


def dissipation_stack(model: NetworkModel, storage, supply: SupplySpec,
                      sigmas: np.ndarray) -> np.ndarray:
    _check_static(supply)
    _check_shapes(model, storage, supply)
    return _dissipation_stack(model.symbols(sigmas), storage.symbols(sigmas),
                              supply.g.symbols(sigmas))


def _eigvalsh(stack: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(stack)
    except np.linalg.LinAlgError as exc:
        for i, mat in enumerate(stack):
            try:
                np.linalg.eigvalsh(mat)
            except np.linalg.LinAlgError:
                raise NumericalFailure(f"Hermitian eigensolver failed: {exc}",
                                       sigmas[i]) from exc
        raise


def _default_tol(norm_max: float) -> float:
    return DEFAULT_REL_TOL * (1.0 + norm_max)


def pbh_uncontrollable_nodes(a_sym: np.ndarray, b_sym: np.ndarray) -> np.ndarray:
    """Boolean mask of nodes where ``rank [sI - A, B] < n`` for some eigenvalue s."""
    n_nodes, n, _ = a_sym.shape
    eigs = np.linalg.eigvals(a_sym)
    eye = np.eye(n)
    bad = np.zeros(n_nodes, dtype=bool)
    for k in range(n):
        pencil = eigs[:, k, None, None] * eye - a_sym
        mat = np.concatenate([pencil, b_sym.astype(complex)], axis=-1)
        sv = np.linalg.svd(mat, compute_uv=False)
        rank = (sv > PBH_RANK_TOL * sv[:, :1]).sum(axis=-1)
        bad |= rank < n
    return bad


def _pbh_side_condition(model: NetworkModel, syms, sigmas) -> SideCondition:
    bad = pbh_uncontrollable_nodes(syms[0], syms[1])
    if not bad.any():
        return SideCondition("controllability", True,
                             f"PBH rank test passed at all {len(sigmas)} nodes")
    first = sigmas[int(np.argmax(bad))]
    return SideCondition(
        "controllability", False,
        f"PBH rank test failed at {int(bad.sum())} nodes, first sigma="
        f"{[round(float(x), 6) for x in first]}; verdict is sufficient-only",
    )


def check_dissipativity(model: NetworkModel, storage, supply: SupplySpec,
                        grid: TorusGrid | None = None,
                        tol: float | None = None) -> CertificationReport:
    """Grid test of ``N(sigma) >= 0``.

    ``storage`` is a :class:`StorageSpec` or a :class:`StorageTable` built on
    the same grid.  Controllability of ``(A(sigma), B(sigma))`` is reported as
    a side condition but does not gate the verdict: PSD-ness of N is always
    sufficient, and controllability only matters for necessity.
    """
    grid = grid or TorusGrid.default(model.nu)
    sigmas = grid.nodes()
    syms = model.symbols(sigmas)
    _check_static(supply)
    _check_shapes(model, storage, supply)
    nmat = _dissipation_stack(syms, storage.symbols(sigmas), supply.g.symbols(sigmas))
    lam = _eigvalsh(nmat, sigmas)
    lam_min = lam[:, 0]
    if tol is None:
        tol = _default_tol(float(np.abs(lam).max()))
    i = int(np.argmin(lam_min))
    margin = float(lam_min[i])
    return CertificationReport(
        property="dissipative",
        verdict=margin >= -tol,
        margin=margin,
        witness={"sigma": sigmas[i].copy(), "lambda_min": margin},
        grid=grid,
        tol=tol,
        side_conditions=[_pbh_side_condition(model, syms, sigmas)],
    )


# -- frequency-domain certificates ------------------------------------------------

def passivity_matrix(model: NetworkModel, supply: SupplySpec, omega: float,
                     sigma) -> np.ndarray:
    """``E(omega, sigma) = F^* G^* + G F`` with F at ``s = i omega``."""
    if supply.shape != (model.m, model.r):
        raise InvalidArgument(f"supply must be {model.m}x{model.r}, got {supply.shape}")
    f = transfer_function(model, 1j * omega, sigma)
    g = supply_symbol(supply, 1j * omega, sigma)
    return _hermitian((f.conj().T @ g.conj().T + g @ f)[None])[0]


HermitianBuilder = Callable[[float, np.ndarray], np.ndarray]


def _sweep(builder: HermitianBuilder, limit: np.ndarray | None, sigmas: np.ndarray,
           sweep: OmegaSweep):
    """Minimum eigenvalue of builder(omega) over omega x nodes (and the limit)."""
    best = (math.inf, None, None)
    norm_max = 0.0
    cases = [(float(w), None) for w in sweep.omegas]
    if limit is not None:
        cases.append((math.inf, limit))
    for w, mats in cases:
        if mats is None:
            mats = builder(w)
        lam = _eigvalsh(mats, sigmas)
        norm_max = max(norm_max, float(np.abs(lam).max()))
        i = int(np.argmin(lam[:, 0]))
        if lam[i, 0] < best[0]:
            best = (float(lam[i, 0]), w, sigmas[i].copy())
    return best, norm_max


def _hurwitz_gate(model: NetworkModel, grid: TorusGrid, prop: str, sweep: OmegaSweep):
    stab = spectral_abscissa(model, grid)
    cond = SideCondition(
        "hurwitz", stab.hurwitz,
        f"spectral abscissa {stab.abscissa:.6g} at sigma="
        f"{[round(float(x), 6) for x in stab.worst_sigma]}",
    )
    if stab.hurwitz:
        return cond, None
    return cond, CertificationReport(
        property=prop, verdict=False, margin=math.nan, witness=None, grid=grid,
        tol=math.nan, omega_sweep=sweep, side_conditions=[cond],
        reason="hurwitz side-condition failed",
    )


def _finish(prop, best, norm_max, tol, grid, sweep, sides) -> CertificationReport:
    margin, w, sigma = best
    if tol is None:
        tol = _default_tol(norm_max)
    return CertificationReport(
        property=prop,
        verdict=margin >= -tol,
        margin=margin,
        witness={"omega": w, "sigma": sigma, "lambda_min": margin},
        grid=grid,
        tol=tol,
        omega_sweep=sweep,
        side_conditions=sides,
    )


def check_passivity(model: NetworkModel, supply: SupplySpec,
                    grid: TorusGrid | None = None,
                    omega_sweep: OmegaSweep | None = None,
                    tol: float | None = None,
                    _property: str = "passive") -> CertificationReport:
    """Grid test of ``E(omega, sigma) >= 0``; requires A(sigma) Hurwitz on the grid.

    For a static supply the omega -> infinity limit ``G D + D^* G^*`` is checked
    as an extra sample; for a polynomial supply the limit is skipped because
    ``G(i omega)`` is unbounded.
    """
    grid = grid or TorusGrid.default(model.nu)
    sweep = omega_sweep or OmegaSweep.default()
    if supply.shape != (model.m, model.r):
        raise InvalidArgument(f"supply must be {model.m}x{model.r}, got {supply.shape}")
    hurwitz, failed = _hurwitz_gate(model, grid, _property, sweep)
    if failed is not None:
        return failed
    sigmas = grid.nodes()
    syms = model.symbols(sigmas)
    a, b, c, d = syms
    proper = bool(model.b.blocks) and bool(model.c.blocks)

    def build(w):
        s = 1j * w
        f = c @ resolvent_solve(s, a, b, sigmas) + d if proper else d.astype(complex)
        g = supply.symbols(s, sigmas)
        return _hermitian(_h(f) @ _h(g) + g @ f)

    limit = None
    if sweep.include_infinity and supply.degree == 0:
        g0 = supply.g.symbols(sigmas)
        limit = _hermitian(g0 @ d + _h(d) @ _h(g0))
    best, norm_max = _sweep(build, limit, sigmas, sweep)
    return _finish(_property, best, norm_max, tol, grid, sweep, [hurwitz])


def _require_square(model: NetworkModel):
    if model.r != model.m:
        raise InvalidArgument(
            f"property requires as many outputs as inputs (r={model.r}, m={model.m})"
        )


def check_positive_real(model: NetworkModel, grid: TorusGrid | None = None,
                        omega_sweep: OmegaSweep | None = None,
                        tol: float | None = None) -> CertificationReport:
    """``F(i omega, sigma) + F^* >= 0``: passivity with the identity supply."""
    _require_square(model)
    return check_passivity(model, SupplySpec.identity(model.nu, model.m), grid,
                           omega_sweep, tol, _property="positive_real")


def check_negative_imaginary(model: NetworkModel, grid: TorusGrid | None = None,
                             omega_sweep: OmegaSweep | None = None,
                             tol: float | None = None) -> CertificationReport:
    """Grid test of ``(F - F^*)/i <= 0`` for omega >= 0.

    The margin is the smallest eigenvalue of ``i (F - F^*)``, so the sign
    convention matches the other reports: verdict iff margin >= -tol.
    """
    _require_square(model)
    grid = grid or TorusGrid.default(model.nu)
    sweep = (omega_sweep or OmegaSweep.default()).nonnegative()
    hurwitz, failed = _hurwitz_gate(model, grid, "negative_imaginary", sweep)
    if failed is not None:
        return failed
    sigmas = grid.nodes()
    a, b, c, d = model.symbols(sigmas)
    proper = bool(model.b.blocks) and bool(model.c.blocks)

    def build(w):
        f = c @ resolvent_solve(1j * w, a, b, sigmas) + d if proper else d.astype(complex)
        return _hermitian(1j * (f - _h(f)))

    limit = _hermitian(1j * (d - _h(d))) if sweep.include_infinity else None
    best, norm_max = _sweep(build, limit, sigmas, sweep)
    return _finish("negative_imaginary", best, norm_max, tol, grid, sweep, [hurwitz])


# -- Lyapunov storage ---------------------------------------------------------------

def lyapunov_stack(a_sym: np.ndarray, q_sym: np.ndarray) -> np.ndarray:
    """Solve ``A^* V + V A = -Q`` node by node via the Kronecker form.

    With row-major vectorisation, ``vec(A^* V + V A) = (A^* (x) I + I (x) A^T) vec V``.
    """
    n_nodes, n, _ = a_sym.shape
    eye = np.eye(n)
    kron = (np.einsum("nik,jl->nijkl", _h(a_sym), eye)
            + np.einsum("ik,nlj->nijkl", eye, a_sym)).reshape(n_nodes, n * n, n * n)
    rhs = -np.asarray(q_sym).reshape(n_nodes, n * n)
    sol = np.linalg.solve(kron, rhs[..., None])[..., 0]
    return sol.reshape(n_nodes, n, n)


def _q_symbols(q, model: NetworkModel, sigmas: np.ndarray) -> np.ndarray:
    n = model.n
    if q is None:
        return np.broadcast_to(np.eye(n, dtype=complex), (len(sigmas), n, n))
    if isinstance(q, MatrixStencil):
        return q.symbols(sigmas)
    if callable(q):
        return np.stack([np.asarray(q(s), dtype=complex) for s in sigmas])
    mat = np.asarray(q, dtype=complex)
    if mat.shape != (n, n):
        raise InvalidArgument(f"Q must be {n}x{n}")
    return np.broadcast_to(mat, (len(sigmas), n, n))


def solve_storage(model: NetworkModel, q=None,
                  grid: TorusGrid | None = None) -> StorageSolution:
    """Per-node Lyapunov storage and the resulting quadratic-stability margin.

    ``q`` selects the right-hand side ``Q(sigma)``: ``None`` for the identity,
    a constant matrix, a :class:`MatrixStencil`, or a callable of sigma.
    """
    grid = grid or TorusGrid.default(model.nu)
    stab = spectral_abscissa(model, grid)
    if not stab.hurwitz:
        raise PreconditionViolation(
            f"storage synthesis needs A(sigma) Hurwitz; abscissa {stab.abscissa:.3g} "
            f"at sigma={list(map(float, stab.worst_sigma))}"
        )
    sigmas = grid.nodes()
    a_sym = model.a.symbols(sigmas)
    try:
        v = _hermitian(lyapunov_stack(a_sym, _q_symbols(q, model, sigmas)))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Lyapunov solve failed: {exc}") from exc
    lam = _eigvalsh(v, sigmas)
    if lam[:, 0].min() <= 0.0:
        i = int(np.argmin(lam[:, 0]))
        raise NumericalFailure("Lyapunov solution is not positive definite", sigmas[i])
    mu = float(lam[:, 0].min())
    v_norm = float(lam[:, -1].max())
    kappa = v_norm / mu
    return StorageSolution(
        table=StorageTable(grid, sigmas, v),
        margin=StabilityMargin(mu, v_norm, kappa, kappa),
        h_bounds=0.5 * np.stack([lam[:, 0], lam[:, -1]], axis=1),
    )


def check_report_invariants(report: CertificationReport) -> Sequence[str]:
    """Return a list of violated report invariants (empty when consistent)."""
    problems = []
    if report.property not in PROPERTIES:
        problems.append(f"unknown property {report.property}")
    hurwitz = [c for c in report.side_conditions if c.name == "hurwitz"]
    if hurwitz and not hurwitz[0].passed and report.verdict:
        problems.append("hurwitz side-condition failed but verdict is true")
    if not math.isnan(report.margin):
        if report.verdict != (report.margin >= -report.tol):
            problems.append("verdict disagrees with margin >= -tol")
        if report.witness is None or report.witness["lambda_min"] != report.margin:
            problems.append("witness does not attain the margin")
    return problems
