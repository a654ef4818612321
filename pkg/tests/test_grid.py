"""Tests for the cell-centred grid, Neumann Laplacian, and linear solver.

The Laplacian is checked against its dense matrix representation (assembled
column by column) with numpy.linalg as the reference: eigendecomposition for
the spectral identities and an LU solve for the conjugate-gradient oracle.
"""

import math

import numpy as np
import pytest

from chrelax import CgNoConvergence, Grid, GridMismatch, InvalidParams


def dense_laplacian(grid):
    """Assemble the Laplacian matrix by applying it to unit vectors."""
    cols = []
    for i in range(grid.ncells):
        e = grid.field()
        e[i] = 1.0
        cols.append(grid.laplacian(e))
    return np.column_stack(cols)


# -- construction -------------------------------------------------------


def test_constructor_rejections():
    with pytest.raises(InvalidParams):
        Grid((4, 4, 4))
    with pytest.raises(InvalidParams):
        Grid(1)
    with pytest.raises(InvalidParams):
        Grid((8, 1))
    with pytest.raises(InvalidParams):
        Grid(8, length=(1.0, 2.0))
    with pytest.raises(InvalidParams):
        Grid(8, length=0.0)


def test_geometry():
    g = Grid(4)
    assert g.dim == 1 and g.ncells == 4
    assert g.h == (0.25,)
    np.testing.assert_allclose(
        g.coordinates()[0], [0.125, 0.375, 0.625, 0.875], rtol=0, atol=0)
    g2 = Grid((4, 6), length=(1.0, 3.0))
    assert g2.dim == 2 and g2.ncells == 24
    assert g2.h == (0.25, 0.5)
    assert g2.cell_volume == pytest.approx(0.125, abs=0)
    x, y = g2.coordinates()
    assert x.shape == y.shape == (24,)
    assert y[0] == 0.25 and y[1] == 0.75  # second axis varies fastest


def test_equality_and_hash():
    assert Grid(8) == Grid(8)
    assert Grid(8) != Grid((8, 8))
    assert Grid(8, length=2.0) != Grid(8)
    assert len({Grid(8), Grid(8), Grid(16)}) == 2


def test_check_rejects_misshaped_fields():
    g = Grid(8)
    with pytest.raises(GridMismatch):
        g.check(np.zeros(7))
    with pytest.raises(GridMismatch):
        g.check([0.0] * 8)
    with pytest.raises(GridMismatch):
        g.laplacian(np.zeros((8, 1)))


# -- quadrature and norms ----------------------------------------------


def test_integrals_closed_form():
    g = Grid(2)
    u = np.array([0.0, 1.0])
    assert g.integrate(u) == pytest.approx(0.5, abs=0)
    assert g.inner(u, u) == pytest.approx(0.5, abs=0)
    assert g.h_norm(u) == pytest.approx(math.sqrt(0.5), rel=1e-15)
    # one interior face, gradient (1 - 0)/h = 2, energy h * 2^2 = 2
    assert g.grad_energy(u) == pytest.approx(2.0, abs=0)
    assert g.v_norm(u) == pytest.approx(math.sqrt(2.5), rel=1e-15)


def test_constant_has_no_gradient_energy():
    for g in (Grid(9), Grid((5, 7), length=(2.0, 1.0))):
        c = g.field(3.7)
        assert g.grad_energy(c) == 0.0
        assert g.integrate(c) == pytest.approx(3.7 * np.prod(g.length), rel=1e-15)
        np.testing.assert_allclose(g.laplacian(c), 0.0, rtol=0, atol=0)


# -- Laplacian structure ------------------------------------------------


@pytest.mark.parametrize("shape", [64, (16, 16), (6, 9)])
def test_summation_by_parts_and_symmetry(shape):
    g = Grid(shape)
    rng = np.random.default_rng(5)
    u = rng.standard_normal(g.ncells)
    v = rng.standard_normal(g.ncells)
    lhs = g.inner(-g.laplacian(u), v)
    rhs = g.face_form(u, v)
    scale = max(abs(lhs), abs(rhs), 1e-30)
    assert abs(lhs - rhs) / scale <= 1e-12
    sym = abs(g.inner(g.laplacian(u), v) - g.inner(u, g.laplacian(v)))
    assert sym / scale <= 1e-12
    # flux telescoping: the operator produces mean-free output
    assert abs(g.integrate(g.laplacian(u))) <= 1e-12 * g.h_norm(u)


def test_laplacian_matrix_is_symmetric_negative_semidefinite():
    for g in (Grid(12), Grid((5, 4))):
        A = dense_laplacian(g)
        np.testing.assert_allclose(A, A.T, rtol=0, atol=1e-12)
        w = np.linalg.eigvalsh(A)
        assert np.max(w) <= 1e-10
        # exactly one zero eigenvalue, the constants
        assert np.sum(np.abs(w) <= 1e-10) == 1


def test_eigenpairs_match_dense_decomposition():
    g = Grid(8)
    h = g.h[0]
    L = g.length[0]
    x = g.coordinates()[0]
    analytic = np.array(
        [-(4.0 / h**2) * math.sin(k * math.pi * h / (2 * L)) ** 2 for k in range(8)])
    dense = np.linalg.eigvalsh(dense_laplacian(g))
    np.testing.assert_allclose(np.sort(analytic), dense, rtol=0, atol=1e-10)
    # each cosine mode is an exact eigenvector of the stencil
    for k in range(8):
        mode = np.cos(k * math.pi * x / L)
        resid = g.laplacian(mode) - analytic[k] * mode
        assert np.max(np.abs(resid)) <= 1e-10 * max(1.0, abs(analytic[k]))


def test_laplacian_diag_matches_dense():
    for g in (Grid(10), Grid((4, 6), length=(1.0, 2.0))):
        np.testing.assert_allclose(
            g.laplacian_diag(), -np.diag(dense_laplacian(g)), rtol=0, atol=1e-13)


# -- conjugate gradients -------------------------------------------------


def helmholtz(grid):
    return lambda u: u - grid.laplacian(u)


def test_cg_matches_dense_lu():
    for g in (Grid(16), Grid((8, 8))):
        rng = np.random.default_rng(7)
        b = rng.standard_normal(g.ncells)
        A = np.eye(g.ncells) - dense_laplacian(g)
        want = np.linalg.solve(A, b)
        got = g.solve_spd(helmholtz(g), b, tol=1e-12)
        np.testing.assert_allclose(got, want, rtol=1e-8, atol=1e-10)
        pre = g.solve_spd(
            helmholtz(g), b, tol=1e-12, diag=1.0 + g.laplacian_diag())
        np.testing.assert_allclose(pre, want, rtol=1e-8, atol=1e-10)


def test_cg_trivial_cases():
    g = Grid(32)
    rng = np.random.default_rng(9)
    b = rng.standard_normal(g.ncells)
    # identity operator returns the right-hand side
    np.testing.assert_allclose(
        g.solve_spd(lambda u: u, b), b, rtol=0, atol=1e-12)
    # zero right-hand side short-circuits to zero
    out = g.solve_spd(helmholtz(g), g.field())
    assert np.all(out == 0.0)
    # constants are eigenvectors of the shifted operator
    c = g.field(4.0)
    np.testing.assert_allclose(
        g.solve_spd(helmholtz(g), c), c, rtol=1e-12, atol=1e-12)


def test_cg_residual_meets_tolerance():
    g = Grid((16, 16))
    rng = np.random.default_rng(21)
    b = rng.standard_normal(g.ncells)
    tol = 1e-10
    x = g.solve_spd(helmholtz(g), b, tol=tol, diag=1.0 + g.laplacian_diag())
    resid = np.linalg.norm(b - helmholtz(g)(x)) / np.linalg.norm(b)
    assert resid <= tol


def test_cg_budget_exhaustion_reports_residual():
    g = Grid(64)
    rng = np.random.default_rng(25)
    b = rng.standard_normal(g.ncells)
    with pytest.raises(CgNoConvergence) as ei:
        g.solve_spd(helmholtz(g), b, tol=1e-12, max_iter=2)
    assert ei.value.iterations == 2
    # the plain residual norm is not monotone in cg, only positive and finite
    assert ei.value.residual > 0.0 and np.isfinite(ei.value.residual)


def test_cg_rejects_indefinite_operator():
    g = Grid(8)
    b = g.field(1.0)
    with pytest.raises(CgNoConvergence) as ei:
        g.solve_spd(lambda u: -u, b)
    assert ei.value.iterations == 0


# -- field I/O ------------------------------------------------------------


def test_dump_load_round_trip(tmp_path):
    for g in (Grid(11), Grid((4, 5))):
        rng = np.random.default_rng(3)
        u = rng.standard_normal(g.ncells)
        path = tmp_path / f"f{g.dim}.csv"
        g.dump_field(u, path)
        back = g.load_field(path)
        # 17 significant digits round-trip doubles exactly
        np.testing.assert_array_equal(back, u)


def test_load_rejects_header_and_size_mismatch(tmp_path):
    g = Grid(8)
    u = g.field(1.0)
    path = tmp_path / "f.csv"
    g.dump_field(u, path)
    with pytest.raises(GridMismatch):
        Grid(16).load_field(path)
    with pytest.raises(GridMismatch):
        Grid((4, 2)).load_field(path)  # 2-d grid expects an x,y,value header
    path.write_text("x,val\n0.5,1.0\n")
    with pytest.raises(GridMismatch):
        g.load_field(path)
