"""Builders for standard lattice systems: plates, spring-mass chains and their
damped, actuated variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .phonon import HamiltonianSpec, build_hamiltonian_model
from .stencil import MatrixStencil, NetworkModel


@dataclass(frozen=True)
class PlateParams:
    rho: float = 1.0
    beta: float = 2.0
    h: float = 1.0

    def __post_init__(self):
        if min(self.rho, self.beta, self.h) <= 0:
            raise InvalidArgument("plate parameters rho, beta, h must be positive")


@dataclass(frozen=True)
class ChainParams:
    mass: float = 1.0
    spring: float = 1.0
    damping: float = 0.0

    def __post_init__(self):
        if self.mass <= 0 or self.spring <= 0 or self.damping < 0:
            raise InvalidArgument("chain needs mass > 0, spring > 0, damping >= 0")


def laplacian_5pt(h: float = 1.0) -> MatrixStencil:
    """Five-point discrete Laplacian on Z^2 with spacing h."""
    c = 1.0 / h ** 2
    return MatrixStencil.from_dict({
        (0, 0): -4.0 * c, (1, 0): c, (-1, 0): c, (0, 1): c, (0, -1): c,
    })


def plate_spec(params: PlateParams) -> HamiltonianSpec:
    """Finite-difference Kirchhoff-Love plate: mass rho, stiffness (beta/2) L^2."""
    lap = laplacian_5pt(params.h)
    return HamiltonianSpec(np.array([[params.rho]]),
                           lap.matmul(lap).scaled(0.5 * params.beta).pruned())


def chain_spec(params: ChainParams) -> HamiltonianSpec:
    """Monatomic nearest-neighbour chain, ``K = {0: 2k, +-1: -k}``."""
    k = params.spring
    return HamiltonianSpec(np.array([[params.mass]]),
                           MatrixStencil.from_dict({-1: -k, 0: 2.0 * k, 1: -k}))


def pinned(spec: HamiltonianSpec, eps: float = 0.1) -> HamiltonianSpec:
    """Add ``eps I`` to the on-site stiffness so that K(0) becomes positive definite."""
    return HamiltonianSpec(spec.mass,
                           spec.stiffness + MatrixStencil.identity(spec.nu, spec.dof, eps))


def _io_stencils(spec: HamiltonianSpec, actuation, sensing: str):
    nu, n, dof = spec.nu, spec.n, spec.dof
    act = np.eye(dof) if actuation is None else np.atleast_2d(np.asarray(actuation, dtype=float))
    if act.shape[0] != dof:
        raise InvalidArgument(f"actuation matrix must have {dof} rows")
    b = MatrixStencil.constant(act, nu).kron_embed(n, act.shape[1], dof, 0)
    # collocated sensing: the output matrix is the transpose of the force map
    if sensing == "velocity":
        sense = act.T @ np.linalg.inv(spec.mass)
        c = MatrixStencil.constant(sense, nu).kron_embed(act.shape[1], n, 0, dof)
    elif sensing == "position":
        c = MatrixStencil.constant(act.T, nu).kron_embed(act.shape[1], n, 0, 0)
    else:
        raise InvalidArgument(f"sensing must be 'velocity' or 'position', got {sensing!r}")
    return b, c


def collocated(spec: HamiltonianSpec, sensing: str = "velocity", actuation=None,
               gamma: float = 0.0) -> NetworkModel:
    """Force input into p at l=0, collocated velocity or position readout, D = 0.

    ``gamma`` adds the damping term ``-gamma M^{-1} p`` to the momentum equation.
    """
    b, c = _io_stencils(spec, actuation, sensing)
    model = build_hamiltonian_model(spec, b, c)
    if gamma:
        damp = MatrixStencil.constant(-gamma * np.linalg.inv(spec.mass), spec.nu)
        model = NetworkModel(model.a + damp.kron_embed(spec.n, spec.n, spec.dof, spec.dof),
                             model.b, model.c, model.d)
    return model


def damped_actuated(spec: HamiltonianSpec, gamma: float, actuation=None,
                    sensing: str = "velocity") -> NetworkModel:
    if gamma <= 0:
        raise InvalidArgument("damped_actuated needs gamma > 0")
    return collocated(spec, sensing, actuation, gamma)


def scalar_chain(a: float, c: float) -> NetworkModel:
    """First-order diffusive chain ``xdot_j = -a x_j + c (x_{j-1} + x_{j+1}) + u_j``, y = x."""
    one = MatrixStencil.identity(1, 1)
    return NetworkModel(MatrixStencil.from_dict({-1: c, 0: -a, 1: c}), one, one,
                        MatrixStencil.zeros(1, 1, 1))


def feedthrough_only(d, nu: int = 1) -> NetworkModel:
    """Static model ``y = D u`` with a decoupled stable dummy state (A = -I, B = C = 0)."""
    d = MatrixStencil.constant(d, nu) if not isinstance(d, MatrixStencil) else d
    return NetworkModel.from_stencils(MatrixStencil.identity(d.dim_nu, 1, -1.0),
                                      d=d, m=d.cols, r=d.rows)
