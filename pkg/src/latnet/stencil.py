"""Finite matrix stencils on the integer lattice and their Fourier symbols.

A stencil maps lattice offsets ``l`` to real matrix blocks.  Its symbol is the
trigonometric polynomial ``sum_l exp(-i l.sigma) block_l`` on the torus
``[-pi, pi)^nu``.  Block-Toeplitz operators built from stencils act on the
Fourier side as multiplication by the symbol, so most of the analysis in this
package reduces to small dense linear algebra at torus points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InvalidArgument

Offset = tuple[int, ...]


def _as_offset(key, nu: int | None) -> Offset:
    if isinstance(key, (int, np.integer)):
        off = (int(key),)
    else:
        off = tuple(int(k) for k in key)
    if nu is not None and len(off) != nu:
        raise InvalidArgument(f"offset {off} does not have length nu={nu}")
    return off


@dataclass(frozen=True, eq=False)
class MatrixStencil:
    """Finitely supported map from offsets in Z^nu to real ``rows x cols`` blocks.

    Absent offsets are zero blocks.  Instances are immutable; arithmetic
    returns new stencils.
    """

    dim_nu: int
    rows: int
    cols: int
    blocks: Mapping[Offset, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim_nu < 1 or self.rows < 1 or self.cols < 1:
            raise InvalidArgument(
                f"stencil dimensions must be positive, got nu={self.dim_nu}, "
                f"shape=({self.rows}, {self.cols})"
            )
        clean = {}
        for key, mat in self.blocks.items():
            off = _as_offset(key, self.dim_nu)
            arr = np.array(mat, dtype=float)
            if arr.ndim == 0:
                arr = arr.reshape(1, 1)
            if arr.shape != (self.rows, self.cols):
                raise InvalidArgument(
                    f"block at offset {off} has shape {arr.shape}, "
                    f"expected ({self.rows}, {self.cols})"
                )
            if off in clean:
                raise InvalidArgument(f"duplicate offset {off}")
            arr.setflags(write=False)
            clean[off] = arr
        object.__setattr__(self, "blocks", dict(sorted(clean.items())))

    # construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, blocks: Mapping, nu: int | None = None) -> "MatrixStencil":
        """Build from ``{offset: matrix}``; integer keys are allowed when nu=1.

        The block shape is read off the first entry, so the mapping must be
        non-empty (use :meth:`zeros` for the empty stencil).
        """
        if not blocks:
            raise InvalidArgument("from_dict needs at least one block; use zeros()")
        items = [(_as_offset(k, nu), np.atleast_2d(np.asarray(v, dtype=float)))
                 for k, v in blocks.items()]
        nu = len(items[0][0]) if nu is None else nu
        rows, cols = items[0][1].shape
        return cls(nu, rows, cols, dict(items))

    @classmethod
    def zeros(cls, nu: int, rows: int, cols: int) -> "MatrixStencil":
        return cls(nu, rows, cols, {})

    @classmethod
    def constant(cls, matrix, nu: int) -> "MatrixStencil":
        """Stencil with a single block at the origin."""
        mat = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(nu, mat.shape[0], mat.shape[1], {(0,) * nu: mat})

    @classmethod
    def identity(cls, nu: int, n: int, scale: float = 1.0) -> "MatrixStencil":
        return cls.constant(scale * np.eye(n), nu)

    # basic structure ----------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def offsets(self) -> np.ndarray:
        """Integer array of shape (n_blocks, nu)."""
        if not self.blocks:
            return np.zeros((0, self.dim_nu), dtype=int)
        return np.array(list(self.blocks), dtype=int)

    def block(self, offset) -> np.ndarray:
        off = _as_offset(offset, self.dim_nu)
        if off in self.blocks:
            return self.blocks[off]
        return np.zeros(self.shape)

    def max_offset(self) -> np.ndarray:
        """Largest |l_i| over the support, per axis."""
        if not self.blocks:
            return np.zeros(self.dim_nu, dtype=int)
        return np.abs(self.offsets).max(axis=0)

    def pruned(self) -> "MatrixStencil":
        """Drop exactly-zero blocks."""
        return MatrixStencil(self.dim_nu, self.rows, self.cols,
                             {k: v for k, v in self.blocks.items() if np.any(v)})

    # algebra ------------------------------------------------------------

    def _check_compatible(self, other: "MatrixStencil"):
        if other.dim_nu != self.dim_nu or other.shape != self.shape:
            raise InvalidArgument(
                f"incompatible stencils: nu {self.dim_nu} vs {other.dim_nu}, "
                f"shape {self.shape} vs {other.shape}"
            )

    def __add__(self, other: "MatrixStencil") -> "MatrixStencil":
        self._check_compatible(other)
        out = {k: v.copy() for k, v in self.blocks.items()}
        for k, v in other.blocks.items():
            out[k] = out[k] + v if k in out else v.copy()
        return MatrixStencil(self.dim_nu, self.rows, self.cols, out)

    def __neg__(self) -> "MatrixStencil":
        return self.scaled(-1.0)

    def __sub__(self, other: "MatrixStencil") -> "MatrixStencil":
        return self + (-other)

    def scaled(self, alpha: float) -> "MatrixStencil":
        return MatrixStencil(self.dim_nu, self.rows, self.cols,
                             {k: alpha * v for k, v in self.blocks.items()})

    def __mul__(self, alpha: float) -> "MatrixStencil":
        return self.scaled(alpha)

    __rmul__ = __mul__

    def adjoint(self) -> "MatrixStencil":
        """Stencil of the transposed operator: ``l -> -l`` and blocks transposed.

        Its symbol is the conjugate transpose of this stencil's symbol.
        """
        return MatrixStencil(self.dim_nu, self.cols, self.rows,
                             {tuple(-o for o in k): v.T for k, v in self.blocks.items()})

    def matmul(self, other: "MatrixStencil") -> "MatrixStencil":
        """Operator product, i.e. block convolution ``sum_j S_{l-j} T_j``."""
        if other.dim_nu != self.dim_nu or self.cols != other.rows:
            raise InvalidArgument(
                f"cannot compose stencils of shapes {self.shape} and {other.shape}"
            )
        out: dict[Offset, np.ndarray] = {}
        for (k1, v1), (k2, v2) in itertools.product(self.blocks.items(),
                                                     other.blocks.items()):
            k = tuple(a + b for a, b in zip(k1, k2))
            out[k] = out[k] + v1 @ v2 if k in out else v1 @ v2
        return MatrixStencil(self.dim_nu, self.rows, other.cols, out)

    def kron_embed(self, rows: int, cols: int, row0: int, col0: int) -> "MatrixStencil":
        """Place every block into a larger zero block at (row0, col0)."""
        out = {}
        for k, v in self.blocks.items():
            big = np.zeros((rows, cols))
            big[row0:row0 + self.rows, col0:col0 + self.cols] = v
            out[k] = big
        return MatrixStencil(self.dim_nu, rows, cols, out)

    def block_sum(self) -> np.ndarray:
        """``sum_l block_l``, the symbol at sigma = 0."""
        total = np.zeros(self.shape)
        for v in self.blocks.values():
            total = total + v
        return total

    def is_block_symmetric(self, atol: float = 0.0) -> bool:
        """True when ``block_{-l} == block_l^T`` for every offset."""
        if self.rows != self.cols:
            return False
        adj = self.adjoint()
        keys = set(self.blocks) | set(adj.blocks)
        return all(np.allclose(self.block(k), adj.block(k), rtol=0.0, atol=atol)
                   for k in keys)

    # Fourier side -------------------------------------------------------

    def symbol(self, sigma) -> np.ndarray:
        """Evaluate ``sum_l exp(-i l.sigma) block_l`` at one torus point."""
        sigma = np.asarray(sigma, dtype=float).reshape(-1)
        if sigma.shape != (self.dim_nu,):
            raise InvalidArgument(
                f"sigma has length {sigma.size}, stencil lattice dimension is {self.dim_nu}"
            )
        return self.symbols(sigma[None, :])[0]

    def symbols(self, sigmas) -> np.ndarray:
        """Vectorised symbol evaluation; ``sigmas`` has shape (N, nu)."""
        sigmas = np.asarray(sigmas, dtype=float)
        if sigmas.ndim != 2 or sigmas.shape[1] != self.dim_nu:
            raise InvalidArgument(
                f"sigmas must have shape (N, {self.dim_nu}), got {sigmas.shape}"
            )
        if not self.blocks:
            return np.zeros((sigmas.shape[0], self.rows, self.cols), dtype=complex)
        phases = np.exp(-1j * (sigmas @ self.offsets.T))
        stack = np.stack(list(self.blocks.values()))
        return np.einsum("nk,kij->nij", phases, stack)

    # serialisation ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "nu": self.dim_nu,
            "rows": self.rows,
            "cols": self.cols,
            "blocks": [{"offset": list(k), "matrix": v.tolist()}
                       for k, v in self.blocks.items()],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "MatrixStencil":
        try:
            blocks = {tuple(b["offset"]): b["matrix"] for b in obj.get("blocks", [])}
            return cls(int(obj["nu"]), int(obj["rows"]), int(obj["cols"]), blocks)
        except (KeyError, TypeError) as exc:
            raise InvalidArgument(f"malformed stencil JSON: {exc}") from exc

    def __repr__(self) -> str:
        return (f"MatrixStencil(nu={self.dim_nu}, shape={self.shape}, "
                f"offsets={list(self.blocks)})")


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """The four stencils of ``xdot = A x + B u``, ``y = C x + D u``."""

    a: MatrixStencil
    b: MatrixStencil
    c: MatrixStencil
    d: MatrixStencil

    def __post_init__(self):
        nus = {s.dim_nu for s in (self.a, self.b, self.c, self.d)}
        if len(nus) != 1:
            raise InvalidArgument(f"stencils disagree on lattice dimension: {sorted(nus)}")
        n, m, r = self.a.rows, self.b.cols, self.c.rows
        expected = {"a": (n, n), "b": (n, m), "c": (r, n), "d": (r, m)}
        for name, shape in expected.items():
            got = getattr(self, name).shape
            if got != shape:
                raise InvalidArgument(f"stencil {name} has shape {got}, expected {shape}")

    @property
    def nu(self) -> int:
        return self.a.dim_nu

    @property
    def n(self) -> int:
        return self.a.rows

    @property
    def m(self) -> int:
        return self.b.cols

    @property
    def r(self) -> int:
        return self.c.rows

    @classmethod
    def from_stencils(cls, a, b=None, c=None, d=None, m: int | None = None,
                      r: int | None = None) -> "NetworkModel":
        """Fill missing stencils with zeros of the right shape."""
        nu, n = a.dim_nu, a.rows
        m = m if m is not None else (b.cols if b is not None else d.cols if d is not None else 1)
        r = r if r is not None else (c.rows if c is not None else d.rows if d is not None else 1)
        return cls(
            a,
            b if b is not None else MatrixStencil.zeros(nu, n, m),
            c if c is not None else MatrixStencil.zeros(nu, r, n),
            d if d is not None else MatrixStencil.zeros(nu, r, m),
        )

    def symbols(self, sigmas):
        """Return the stacked symbols (A, B, C, D) at points ``sigmas`` (N, nu)."""
        return tuple(s.symbols(sigmas) for s in (self.a, self.b, self.c, self.d))

    def max_offset(self) -> np.ndarray:
        return np.max([s.max_offset() for s in (self.a, self.b, self.c, self.d)], axis=0)


@dataclass(frozen=True)
class TorusGrid:
    """Uniform P^nu sampling of the torus with nodes ``-pi + 2 pi k / P``.

    Both ``-pi`` and (for even P) ``0`` are nodes.
    """

    dim_nu: int
    points_per_axis: int

    def __post_init__(self):
        if self.dim_nu < 1:
            raise InvalidArgument("grid dimension must be positive")
        if self.points_per_axis < 2:
            raise InvalidArgument("points_per_axis must be at least 2")

    @classmethod
    def default(cls, nu: int) -> "TorusGrid":
        return cls(nu, 64 if nu <= 2 else 16)

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dim_nu

    def axis(self) -> np.ndarray:
        p = self.points_per_axis
        return -np.pi + 2.0 * np.pi * np.arange(p) / p

    def nodes(self) -> np.ndarray:
        """All nodes, shape (P^nu, nu), last axis varying fastest."""
        ax = self.axis()
        mesh = np.meshgrid(*([ax] * self.dim_nu), indexing="ij")
        return np.stack([g.reshape(-1) for g in mesh], axis=1)

    def to_json(self) -> dict:
        return {"nu": self.dim_nu, "points_per_axis": self.points_per_axis}


def symbol_eval(stencil: MatrixStencil, sigma) -> np.ndarray:
    return stencil.symbol(sigma)


def spectral_norms(symbols: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a (N, p, q) stack."""
    return np.linalg.svd(symbols, compute_uv=False)[:, 0]


def operator_norm(stencil: MatrixStencil, grid: TorusGrid | None = None) -> float:
    """Grid approximation of the L2-induced norm ``ess sup ||symbol(sigma)||_2``.

    The value is a lower bound of the true supremum; it is exact whenever the
    maximiser is a grid node (constant symbols, nearest-neighbour stencils
    with extrema at 0 or pi).
    """
    grid = grid or TorusGrid.default(stencil.dim_nu)
    if grid.dim_nu != stencil.dim_nu:
        raise InvalidArgument("grid and stencil lattice dimensions differ")
    if not stencil.blocks:
        return 0.0
    return float(spectral_norms(stencil.symbols(grid.nodes())).max())


def lattice_sites(period: int, nu: int) -> np.ndarray:
    """Sites of the periodic lattice {0..L-1}^nu in row-major order."""
    mesh = np.meshgrid(*([np.arange(period)] * nu), indexing="ij")
    return np.stack([g.reshape(-1) for g in mesh], axis=1)


def circulant_frequencies(period: int, nu: int) -> np.ndarray:
    """Frequencies ``2 pi k / L`` in the same order as ``np.fft.fftn`` output."""
    ax = 2.0 * np.pi * np.arange(period) / period
    mesh = np.meshgrid(*([ax] * nu), indexing="ij")
    return np.stack([g.reshape(-1) for g in mesh], axis=1)


def check_period(stencil: MatrixStencil, period: int) -> None:
    """Raise unless ``period > 2 |l_i|`` for every support offset and axis."""
    if period < 1:
        raise InvalidArgument(f"period must be positive, got {period}")
    for off in stencil.blocks:
        if any(2 * abs(o) >= period for o in off):
            raise InvalidArgument(
                f"period L={period} too small: offset {off} wraps around "
                f"(need L > 2*max|l_i|)"
            )


def circulant_embed(stencil: MatrixStencil, period: int) -> np.ndarray:
    """Dense block-circulant matrix of the stencil on the periodic lattice.

    Block (j, k) equals ``block_{(j - k) mod L}`` with sites ordered as in
    :func:`lattice_sites`.
    """
    check_period(stencil, period)
    nu, L = stencil.dim_nu, period
    sites = lattice_sites(L, nu)
    n_sites = sites.shape[0]
    strides = L ** np.arange(nu - 1, -1, -1)
    out = np.zeros((n_sites * stencil.rows, n_sites * stencil.cols))
    blocks = out.reshape(n_sites, stencil.rows, n_sites, stencil.cols)
    for off, mat in stencil.blocks.items():
        j = ((sites + np.asarray(off)) % L) @ strides
        blocks[j, :, np.arange(n_sites), :] += mat
    return out
