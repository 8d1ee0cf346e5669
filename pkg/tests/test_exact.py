import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from prstokes.analysis import ring_gradient_norms
from prstokes.errors import SingularityError
from prstokes.exact import OMEGA, TABULATED_GAMMA, SingularSolution, corner_exponent, polar
from prstokes.mesh import lshape_mesh
from prstokes.quadrature import physical_points, physical_weights, triangle_rule


def random_interior_points(rng, n, r_min=0.15):
    pts = []
    while len(pts) < n:
        x, y = rng.uniform(-0.98, 0.98, 2)
        if (x > 0 and y < 0) or np.hypot(x, y) < r_min:
            continue
        if x > -0.02 and y < 0.02 and (x > 0.02 or y < -0.02):
            continue                    # keep the FD stencil off the removed quadrant
        pts.append((x, y))
    return np.array(pts)


def test_gamma_matches_independent_eigenvalue_equation():
    # for omega = 3 pi / 2 (sin omega = -1) the corner eigenvalue equation
    # sin(gamma omega) = -gamma sin(omega) reads sin(gamma omega) = gamma
    oracle = brentq(lambda g: np.sin(g * OMEGA) - g, 0.5, 0.6, xtol=1e-16)
    assert corner_exponent() == pytest.approx(oracle, abs=1e-14)
    assert 0.5 < corner_exponent() < 0.55
    assert TABULATED_GAMMA == pytest.approx(oracle, abs=1e-6)


def test_no_slip_on_both_legs():
    ex = SingularSolution()
    for phi in (0.0, OMEGA):
        for d in (0, 1):
            assert abs(ex.psi(phi, d)) <= 1e-12
    x = np.linspace(1e-3, 1, 7)
    leg0 = np.stack([x, np.zeros_like(x)], axis=1)
    leg1 = np.stack([np.zeros_like(x), -x], axis=1)
    assert np.abs(ex.velocity(leg0)).max() <= 1e-12
    assert np.abs(ex.velocity(leg1)).max() <= 1e-12


def test_tabulated_gamma_is_only_approximately_a_root():
    ex = SingularSolution(gamma=TABULATED_GAMMA)
    assert 1e-8 < abs(ex.psi(OMEGA)) < 1e-5


def test_angle_convention():
    r, phi = polar(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]))
    np.testing.assert_allclose(phi, [0, np.pi / 2, np.pi, 1.5 * np.pi])
    np.testing.assert_allclose(r, 1.0)


def test_gradient_against_central_differences():
    ex = SingularSolution()
    p, h = np.array([-0.5, 0.5]), 1e-6
    G = ex.velocity_gradient(p[None])[0]
    fd = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd[:, j] = (ex.velocity((p + e)[None])[0] - ex.velocity((p - e)[None])[0]) / (2 * h)
    np.testing.assert_allclose(G, fd, rtol=1e-6, atol=1e-6 * np.abs(G).max())


def test_stokes_residual_by_finite_differences(rng):
    nu = 0.37
    ex = SingularSolution(nu)
    pts = random_interior_points(rng, 100)
    h = 1e-4
    ex_, ey_ = np.array([h, 0.0]), np.array([0.0, h])
    v = ex.velocity
    lap = (v(pts + ex_) + v(pts - ex_) + v(pts + ey_) + v(pts - ey_) - 4 * v(pts)) / h ** 2
    gp = np.stack([(ex.pressure0(pts + ex_) - ex.pressure0(pts - ex_)) / (2 * h),
                   (ex.pressure0(pts + ey_) - ex.pressure0(pts - ey_)) / (2 * h)], axis=1)
    residual = -nu * lap + gp
    assert np.abs(residual).max() <= 1e-4


def test_pressure_linear_in_nu(rng):
    pts = random_interior_points(rng, 20)
    p1 = SingularSolution(1.0).pressure0(pts)
    np.testing.assert_allclose(SingularSolution(1e-2).pressure0(pts), 1e-2 * p1, rtol=1e-14)


def test_forcing_values():
    f = SingularSolution.forcing(np.array([[0.5, 0.5]]))[0]
    want = 0.5 * np.pi * np.cos(0.25 * np.pi)
    np.testing.assert_allclose(f, [want, want], rtol=1e-15)
    assert not SingularSolution.forcing_divergence_free_part(np.ones((4, 2))).any()


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_forcing_is_gradient_of_p_plus(x, y):
    h = 1e-5
    q = SingularSolution.pressure_plus
    p = np.array([[x, y]])
    fd = np.array([(q(p + [h, 0]) - q(p - [h, 0]))[0], (q(p + [0, h]) - q(p - [0, h]))[0]]) / (2 * h)
    np.testing.assert_allclose(SingularSolution.forcing(p)[0], fd, atol=1e-8)


def test_divergence_free_per_triangle(exact):
    mesh = lshape_mesh(2)
    rule = triangle_rule(10)
    x = physical_points(mesh, rule)
    w = physical_weights(mesh, rule)
    div = exact.divergence(x.reshape(-1, 2)).reshape(w.shape)
    assert np.abs(np.einsum("tq,tq->t", w, div)).max() <= 1e-10


def test_corner_is_refused(exact):
    origin = np.zeros((1, 2))
    np.testing.assert_allclose(exact.velocity(origin), 0.0)
    with pytest.raises(SingularityError):
        exact.velocity_gradient(origin)
    with pytest.raises(SingularityError):
        exact.pressure0(origin)


def test_ring_norms_scale_like_r_gamma(exact):
    norms = ring_gradient_norms(exact, ks=range(2, 7))
    g = exact.gamma
    ratios = [n / norms[0] * 2.0 ** (g * k) for k, n in enumerate(norms)]
    np.testing.assert_allclose(ratios, 1.0, rtol=0.1)
