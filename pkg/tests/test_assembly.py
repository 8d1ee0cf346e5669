import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from prstokes.assembly import (assemble_divergence, assemble_mass, assemble_operators,
                               assemble_reconstruction, assemble_rhs, assemble_stiffness,
                               cell_divergence_integrals, dump_matrix, rhs_degree)
from prstokes.errors import CapabilityError, UsageError
from prstokes.fespace import ElementKind, FeFunction, build_dofmap, interpolate
from prstokes.mesh import build_topology, lshape_mesh
from prstokes.quadrature import physical_weights, triangle_rule

K = ElementKind
PAIRS = [(K.BR, K.BDM1), (K.CR, K.RT0), (K.BR, K.RT0), (K.CR, K.BDM1)]


def _is_canonical(M):
    for i in range(M.shape[0]):
        cols = M.indices[M.indptr[i]:M.indptr[i + 1]]
        if np.any(np.diff(cols) <= 0):
            return False
    return not np.any(np.abs(M.data) <= 1e-300)


@pytest.mark.parametrize("kind", [K.BR, K.CR, K.P1])
@pytest.mark.parametrize("level", [0, 2])
def test_stiffness_symmetric_psd(kind, level):
    dm = build_dofmap(lshape_mesh(level), kind)
    A = assemble_stiffness(dm)
    assert isinstance(A, sp.csr_matrix) and _is_canonical(A)
    assert abs(A - A.T).max() <= 1e-13 * abs(A).max()
    Aff = A[dm.free_dofs][:, dm.free_dofs].toarray()
    assert np.linalg.eigvalsh(Aff).min() > 0


def test_p1_local_stiffness_row_sums_vanish():
    m = build_topology([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    A = assemble_stiffness(build_dofmap(m, K.P1)).toarray()
    np.testing.assert_allclose(A.sum(axis=1), 0.0, atol=1e-15)
    np.testing.assert_allclose(A, [[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]], atol=1e-15)


@pytest.mark.parametrize("kind", [K.BR, K.CR])
def test_translations_in_kernel(kind):
    dm = build_dofmap(lshape_mesh(1), kind)
    A = assemble_stiffness(dm)
    B = assemble_divergence(dm, build_dofmap(dm.mesh, K.P0))
    for c in ([1.0, 0.0], [0.0, 1.0]):
        u = interpolate(dm, lambda p: np.tile(c, (len(p), 1))).coefficients
        assert np.abs(A @ u).max() <= 1e-13
        assert np.abs(B @ u).max() <= 1e-14


def test_stiffness_linear_in_nu():
    dm = build_dofmap(lshape_mesh(1), K.BR)
    A1, A2 = assemble_stiffness(dm, 1.0), assemble_stiffness(dm, 2.0)
    assert abs(A2 - 2 * A1).max() <= 1e-14 * abs(A1).max()
    with pytest.raises(UsageError):
        assemble_stiffness(dm, 0.0)


@pytest.mark.parametrize("kind", [K.BR, K.CR])
def test_divergence_of_x_is_twice_area(kind):
    m = lshape_mesh(1)
    dm = build_dofmap(m, kind)
    B = assemble_divergence(dm, build_dofmap(m, K.P0))
    u = interpolate(dm, lambda p: p.copy()).coefficients
    np.testing.assert_allclose(B @ u, 2 * m.areas, atol=1e-14)


@pytest.mark.parametrize("kind", [K.BR, K.CR])
def test_zero_trace_fields_have_zero_total_divergence(kind, rng):
    dm = build_dofmap(lshape_mesh(2), kind)
    B = assemble_divergence(dm, build_dofmap(dm.mesh, K.P0))
    u = rng.normal(size=dm.n_dofs)
    u[dm.dirichlet_dofs] = 0.0
    assert abs(np.sum(B @ u)) <= 1e-12 * np.abs(u).sum()


def test_divergence_requires_p0():
    m = lshape_mesh(0)
    with pytest.raises(CapabilityError):
        assemble_divergence(build_dofmap(m, K.BR), build_dofmap(m, K.P1))


@pytest.mark.parametrize("vk, tk", PAIRS)
@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_reconstruction_commutes_with_divergence(vk, tk, level, rng):
    """div(I_h v_h) = pi_h div_h v_h on every triangle."""
    m = lshape_mesh(level)
    v = build_dofmap(m, vk)
    R, target = assemble_reconstruction(v, tk)
    assert _is_canonical(R)
    V = rng.normal(size=(v.n_dofs, 100))
    div_v = np.einsum("ti,tij->tj", cell_divergence_integrals(v), V[v.cell_dofs])
    W = R @ V
    div_w = np.einsum("ti,tij->tj", cell_divergence_integrals(target), W[target.cell_dofs])
    assert np.abs(div_v - div_w).max() <= 1e-12 * np.abs(div_v).max()


@pytest.mark.parametrize("vk, tk", PAIRS)
def test_reconstruction_exact_on_affine_fields(vk, tk):
    """A global affine field lies in both velocity spaces and in RT0/BDM1's
    interpolation range in the same way: I_h v = Pi_hdiv v."""
    m = lshape_mesh(1)
    v = build_dofmap(m, vk)
    R, target = assemble_reconstruction(v, tk)
    f = lambda p: p @ np.array([[0.3, -1.2], [2.0, 0.5]]).T + np.array([1.0, -0.25])
    np.testing.assert_allclose(R @ interpolate(v, f).coefficients,
                               interpolate(target, f).coefficients, atol=1e-13)


def _l2_ratio(v, R, target, coeffs):
    rule = triangle_rule(4)
    w = physical_weights(v.mesh, rule)
    a = FeFunction(v, coeffs)
    b = FeFunction(target, R @ coeffs)
    diff = a.values(rule.points) - b.values(rule.points)
    l2 = np.sqrt(np.einsum("tq,tqc->", w, diff ** 2))
    h1 = np.sqrt(coeffs @ (assemble_stiffness(v) @ coeffs))
    return l2 / (v.mesh.h_max * h1)


@pytest.mark.parametrize("vk, tk", PAIRS)
def test_reconstruction_approximation_ratio_bounded(vk, tk, rng):
    ratios = []
    for level in range(5):
        v = build_dofmap(lshape_mesh(level), vk)
        R, target = assemble_reconstruction(v, tk)
        ratios.append(max(_l2_ratio(v, R, target, rng.normal(size=v.n_dofs))
                          for _ in range(5)))
    growth = np.array(ratios[1:]) / np.array(ratios[:-1])
    assert growth.max() <= 1.1, ratios


def test_reconstruction_capability_errors():
    m = lshape_mesh(0)
    with pytest.raises(CapabilityError):
        assemble_reconstruction(build_dofmap(m, K.P1))
    with pytest.raises(CapabilityError):
        assemble_reconstruction(build_dofmap(m, K.BR), K.CR)
    with pytest.raises(CapabilityError):
        assemble_reconstruction(build_dofmap(m, K.BR), "nonsense")
    _, target = assemble_reconstruction(build_dofmap(m, K.BR))
    assert target.kind is K.BDM1
    _, target = assemble_reconstruction(build_dofmap(m, K.CR))
    assert target.kind is K.RT0


def test_rhs_zero_and_missing_r():
    v = build_dofmap(lshape_mesh(1), K.BR)
    R, target = assemble_reconstruction(v)
    zero = lambda p: np.zeros_like(p)
    assert not assemble_rhs(v, zero).any()
    assert not assemble_rhs(v, zero, "reconstructed", R, target).any()
    with pytest.raises(UsageError):
        assemble_rhs(v, zero, "reconstructed")
    with pytest.raises(UsageError):
        assemble_rhs(v, zero, "other")


def test_rhs_constant_force_single_triangle():
    m = build_topology([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    f = lambda p: np.tile([0.7, -1.3], (len(p), 1))
    cr = build_dofmap(m, K.CR)
    R, rt0 = assemble_reconstruction(cr, K.RT0)
    classical = assemble_rhs(cr, f)
    # int (1 - 2 lambda_i) = |T| / 3
    np.testing.assert_allclose(classical, np.tile([0.7, -1.3], 3) / 6, atol=1e-15)
    # (1 - 2 lambda_0) e_x has unit flux through the edge opposite vertex 0
    # and none elsewhere, so it reconstructs to the RT0 field (x, y);
    # int f . (x, y) = (0.7 - 1.3) / 6
    e0 = m.triangle_to_edges[0, 0]
    rec = assemble_rhs(cr, f, "reconstructed", R, rt0)
    assert rec[2 * e0] == pytest.approx(-0.1, abs=1e-14)
    # int f . v = int_dT (v . n)(f . x) - int div v (f . x) for constant f.
    # BDM1 keeps linear edge moments and the mean divergence, which is all
    # that matters when div v is constant (CR, and the P1 part of BR)
    for vk, n_exact in ((K.CR, 6), (K.BR, 6)):
        v = build_dofmap(m, vk)
        R1, bdm = assemble_reconstruction(v, K.BDM1)
        np.testing.assert_allclose(assemble_rhs(v, f, "reconstructed", R1, bdm)[:n_exact],
                                   assemble_rhs(v, f)[:n_exact], atol=1e-14)


def test_rhs_degree_default():
    assert rhs_degree(K.BR) == 12 and rhs_degree(K.CR) == 12


def test_mass_matrix_of_constants():
    m = lshape_mesh(1)
    rt = build_dofmap(m, K.RT0)
    M = assemble_mass(rt)
    c = interpolate(rt, lambda p: np.tile([1.0, 0.0], (len(p), 1))).coefficients
    assert c @ M @ c == pytest.approx(3.0, rel=1e-13)


def test_assemble_operators_bundle(tmp_path):
    m = lshape_mesh(1)
    v, p = build_dofmap(m, K.BR), build_dofmap(m, K.P0)
    f = lambda x: np.stack([np.sin(x[:, 1]), x[:, 0] ** 2], axis=1)
    ops = assemble_operators(v, p, 0.5, f)
    assert ops.A.shape == (v.n_dofs, v.n_dofs) and ops.B.shape == (p.n_dofs, v.n_dofs)
    assert ops.R.shape == (ops.hdiv.n_dofs, v.n_dofs)
    assert ops.M_hdiv.shape == (ops.hdiv.n_dofs,) * 2
    np.testing.assert_allclose(ops.rhs_reconstructed, ops.R.T @ (
        assemble_rhs(ops.hdiv, f, "classical")), rtol=1e-14, atol=1e-15)
    path = tmp_path / "A.mtx"
    dump_matrix(path, ops.A)
    back = scipy.io.mmread(str(path)).tocsr()
    assert abs(back - ops.A).max() == 0
