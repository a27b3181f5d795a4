from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from conftest import random_stencil, stencils, torus_points
from latnet import MatrixStencil, NetworkModel, TorusGrid, circulant_embed, operator_norm, symbol_eval
from latnet.errors import InvalidArgument
from latnet.stencil import check_period, circulant_frequencies

LAPLACIAN = MatrixStencil.from_dict({-1: 1.0, 0: -2.0, 1: 1.0})


def matched_gap(a, b) -> float:
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    i, j = linear_sum_assignment(cost)
    return float(cost[i, j].max())


# -- construction -------------------------------------------------------------------

def test_blocks_must_share_shape():
    with pytest.raises(InvalidArgument):
        MatrixStencil(1, 2, 2, {(0,): np.eye(2), (1,): np.eye(3)})


def test_offset_length_checked():
    with pytest.raises(InvalidArgument):
        MatrixStencil(2, 1, 1, {(0,): np.eye(1)})


def test_model_shape_compatibility():
    a = MatrixStencil.identity(1, 2)
    with pytest.raises(InvalidArgument):
        NetworkModel(a, MatrixStencil.zeros(1, 3, 1), MatrixStencil.zeros(1, 1, 2),
                     MatrixStencil.zeros(1, 1, 1))
    with pytest.raises(InvalidArgument):
        NetworkModel(a, MatrixStencil.zeros(2, 2, 1), MatrixStencil.zeros(1, 1, 2),
                     MatrixStencil.zeros(1, 1, 1))


def test_torus_grid_nodes():
    grid = TorusGrid(2, 4)
    nodes = grid.nodes()
    assert nodes.shape == (16, 2)
    assert np.all(nodes >= -np.pi) and np.all(nodes < np.pi)
    assert np.allclose(grid.axis(), [-np.pi, -np.pi / 2, 0.0, np.pi / 2])
    assert any(np.allclose(n, 0) for n in nodes)
    with pytest.raises(InvalidArgument):
        TorusGrid(1, 1)


def test_default_grid_sizes():
    assert TorusGrid.default(1).points_per_axis == 64
    assert TorusGrid.default(2).points_per_axis == 64
    assert TorusGrid.default(3).points_per_axis == 16


# -- symbols -------------------------------------------------------------------------

def test_empty_stencil_symbol_is_zero():
    z = MatrixStencil.zeros(2, 2, 3)
    assert np.array_equal(symbol_eval(z, [0.3, -1.1]), np.zeros((2, 3)))


def test_single_block_symbol_is_constant():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    s = MatrixStencil.constant(m, 1)
    assert np.allclose(symbol_eval(s, [1.234]), m, atol=0)


def test_laplacian_symbol_values():
    assert symbol_eval(LAPLACIAN, [np.pi])[0, 0] == pytest.approx(-4.0, abs=1e-15)
    assert symbol_eval(LAPLACIAN, [0.0])[0, 0] == pytest.approx(0.0, abs=1e-15)


def test_symbol_sign_convention():
    # a single shift at +1 contributes exp(-i sigma)
    s = MatrixStencil.from_dict({1: 1.0})
    assert symbol_eval(s, [0.7])[0, 0] == pytest.approx(np.exp(-0.7j))


def test_symbol_dimension_mismatch():
    with pytest.raises(InvalidArgument):
        symbol_eval(LAPLACIAN, [0.1, 0.2])


@given(stencils(), st.data())
@settings(max_examples=60, deadline=None)
def test_conjugate_symmetry(stencil, data):
    sigma = data.draw(torus_points(stencil.dim_nu))
    assert np.allclose(symbol_eval(stencil, -sigma), symbol_eval(stencil, sigma).conj(),
                       atol=1e-12)


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_symbol_linearity(data):
    s1 = data.draw(stencils())
    s2 = data.draw(stencils(nu=s1.dim_nu, rows=s1.rows, cols=s1.cols))
    sigma = data.draw(torus_points(s1.dim_nu))
    assert np.allclose(symbol_eval(s1 + s2, sigma),
                       symbol_eval(s1, sigma) + symbol_eval(s2, sigma), atol=1e-11)


@given(st.data())
@settings(max_examples=40, deadline=None)
def test_convolution_multiplies_symbols(data):
    s1 = data.draw(stencils(rows=2, cols=3))
    s2 = data.draw(stencils(nu=s1.dim_nu, rows=3, cols=2))
    sigma = data.draw(torus_points(s1.dim_nu))
    assert np.allclose(symbol_eval(s1.matmul(s2), sigma),
                       symbol_eval(s1, sigma) @ symbol_eval(s2, sigma), atol=1e-9)


@given(stencils(), st.data())
@settings(max_examples=40, deadline=None)
def test_adjoint_symbol_is_conjugate_transpose(stencil, data):
    sigma = data.draw(torus_points(stencil.dim_nu))
    assert np.allclose(symbol_eval(stencil.adjoint(), sigma),
                       symbol_eval(stencil, sigma).conj().T, atol=1e-12)


def test_vectorised_symbols_match_pointwise():
    rng = np.random.default_rng(3)
    s = random_stencil(rng, 2, 2, 3, radius=2, nblocks=5)
    nodes = TorusGrid(2, 8).nodes()
    stack = s.symbols(nodes)
    for sigma, val in zip(nodes, stack):
        assert np.allclose(val, symbol_eval(s, sigma), atol=1e-13)


# -- norms ----------------------------------------------------------------------------

def test_operator_norm_examples():
    assert operator_norm(MatrixStencil.identity(1, 3)) == 1.0
    assert operator_norm(MatrixStencil.zeros(2, 2, 2)) == 0.0
    assert operator_norm(LAPLACIAN, TorusGrid(1, 64)) == pytest.approx(4.0, abs=1e-14)


@given(st.floats(-50, 50, allow_nan=False), st.integers(1, 3), st.integers(1, 4))
def test_operator_norm_of_scaled_identity(alpha, nu, n):
    norm = operator_norm(MatrixStencil.identity(nu, n, alpha), TorusGrid(nu, 4))
    assert norm == pytest.approx(abs(alpha), rel=1e-14, abs=0)


@given(stencils(radius=3), st.integers(2, 12))
@settings(max_examples=40, deadline=None)
def test_operator_norm_monotone_under_nested_refinement(stencil, p):
    coarse = operator_norm(stencil, TorusGrid(stencil.dim_nu, p))
    fine = operator_norm(stencil, TorusGrid(stencil.dim_nu, 2 * p))
    assert fine >= coarse - 1e-12 * (1 + coarse)


# -- circulant embedding ------------------------------------------------------------------

def test_circulant_identity():
    assert np.array_equal(circulant_embed(MatrixStencil.identity(1, 1), 3), np.eye(3))


def test_circulant_laplacian_eigenvalues(oracles):
    ref = oracles["laplacian_circulant"]
    eig = np.sort(np.linalg.eigvalsh(circulant_embed(LAPLACIAN, ref["period"])))
    assert np.allclose(eig, ref["eigenvalues"], atol=1e-12)
    closed = np.sort(2 * np.cos(2 * np.pi * np.arange(8) / 8) - 2)
    assert np.allclose(eig, closed, atol=1e-12)


def test_circulant_row_sums_equal_block_sum():
    blk = np.array([[1.0, 2.0], [-3.0, 0.5]])
    s = MatrixStencil(2, 2, 2, {(1, -1): blk})
    mat = circulant_embed(s, 4)
    sums = mat.reshape(16, 2, 16, 2).sum(axis=2)
    assert np.allclose(sums, blk[None].repeat(16, 0))


def test_circulant_block_layout():
    s = MatrixStencil.from_dict({1: 5.0, 0: 1.0})
    mat = circulant_embed(s, 4)
    # (j, k) block is block_{(j - k) mod L}
    assert mat[1, 0] == 5.0 and mat[0, 3] == 5.0 and mat[0, 1] == 0.0


def test_circulant_matches_loop_oracle(oracles):
    ref = oracles["free_response"]
    a = MatrixStencil.from_json(ref["a"])
    period = ref["period"]
    mat = circulant_embed(a, period)
    n = a.rows
    for j in range(period):
        for k in range(period):
            d = (j - k) % period
            off = d if d <= period // 2 else d - period
            assert np.array_equal(mat[j * n:(j + 1) * n, k * n:(k + 1) * n], a.block((off,)))


def test_period_too_small_names_offset():
    s = MatrixStencil.from_dict({(2, 0): 1.0, (0, 0): 1.0})
    with pytest.raises(InvalidArgument, match=r"\(2, 0\)"):
        circulant_embed(s, 4)
    check_period(s, 5)


@pytest.mark.parametrize("nu,n,period", [(1, 1, 8), (1, 3, 12), (2, 2, 8)])
def test_circulant_spectrum_is_union_of_symbol_spectra(nu, n, period):
    rng = np.random.default_rng(nu * 100 + n * 10 + period)
    s = random_stencil(rng, nu, n, n, radius=2, nblocks=4)
    dense = np.linalg.eigvals(circulant_embed(s, period))
    freqs = circulant_frequencies(period, nu)
    per_node = np.concatenate([np.linalg.eigvals(m) for m in s.symbols(freqs)])
    assert matched_gap(dense, per_node) < 1e-8


# -- json ---------------------------------------------------------------------------------

@given(stencils())
@settings(max_examples=30, deadline=None)
def test_json_round_trip(stencil):
    back = MatrixStencil.from_json(stencil.to_json())
    assert back.shape == stencil.shape and back.dim_nu == stencil.dim_nu
    assert set(back.blocks) == set(stencil.blocks)
    for k in stencil.blocks:
        assert np.array_equal(back.blocks[k], stencil.blocks[k])
