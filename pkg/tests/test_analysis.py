import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from prstokes.analysis import (ConvergenceRecord, ErrorReport, divergence_norm, eoc,
                               h1_seminorm_error, l2_error, projector_distance, ratio)
from prstokes.errors import UsageError
from prstokes.fespace import ElementKind, FeFunction, build_dofmap, interpolate
from prstokes.mesh import lshape_mesh
from prstokes.solver import StokesDiscretization
from prstokes.study import StudyConfig, run_study

A = np.array([[1.5, -0.25], [0.75, 2.0]])
linear = lambda p: p @ A.T + np.array([0.5, -1.0])
linear_grad = lambda p: np.broadcast_to(A, p.shape[:-1] + (2, 2))


@pytest.fixture(scope="module")
def study():
    return run_study(StudyConfig(levels=4))


@pytest.mark.parametrize("kind", [ElementKind.BR, ElementKind.CR])
def test_interpolant_of_linear_field_has_no_error(kind):
    dm = build_dofmap(lshape_mesh(1), kind)
    v = interpolate(dm, linear)
    assert h1_seminorm_error(v, linear_grad) <= 1e-12
    assert l2_error(v, linear) <= 1e-12


def test_zero_field_zero_error():
    dm = build_dofmap(lshape_mesh(0), ElementKind.BR)
    zero = FeFunction(dm)
    assert h1_seminorm_error(zero, lambda p: np.zeros(p.shape[:-1] + (2, 2))) == 0.0
    assert projector_distance(zero, zero) == 0.0


def test_projector_distance_needs_same_dofmap():
    a = FeFunction(build_dofmap(lshape_mesh(0), ElementKind.BR))
    b = FeFunction(build_dofmap(lshape_mesh(0), ElementKind.CR))
    with pytest.raises(UsageError):
        projector_distance(a, b)


def test_divergence_norm_of_position_field():
    m = lshape_mesh(1)
    v = interpolate(build_dofmap(m, ElementKind.CR), lambda p: p.copy())
    assert divergence_norm(v) == pytest.approx(2 * math.sqrt(3.0), rel=1e-13)


def test_eoc_examples():
    assert eoc([1, 0.5, 0.25]) == pytest.approx([1.0, 1.0])
    assert eoc([1, 2 ** -0.54]) == pytest.approx([0.54])
    assert eoc([1.0, 0.0, 0.5]) == [None, None]
    assert eoc([-1.0, 0.5]) == [None]
    assert eoc([float("nan"), 0.5]) == [None]
    assert eoc([1.0]) == []
    assert eoc([1.0, 0.25], h=[0.1, 0.05]) == pytest.approx([2.0])
    with pytest.raises(UsageError):
        eoc([1.0, 0.5], h=[1.0])


@given(st.floats(0.1, 3.0), st.floats(1e-6, 1e3), st.integers(2, 6))
def test_eoc_recovers_power_law(rate, c, n):
    errors = [c * 2.0 ** (-rate * k) for k in range(n)]
    assert eoc(errors) == pytest.approx([rate] * (n - 1), rel=1e-9)


def test_ratio_helper():
    assert ratio(4.0, 2.0) == 2.0
    assert math.isnan(ratio(1.0, 0.0))


def test_record_orders():
    rec = ConvergenceRecord("bernardi-raugel", "classical", 1.0)
    for e in (1.0, 0.5, 0.25):
        rec.reports.append(ErrorReport(e, e / 10, e, 0.0, 10, 1.0))
    assert rec.h1_orders == pytest.approx([1, 1])
    assert rec.projector_orders == pytest.approx([1, 1])
    assert rec.to_dict()["reports"][0]["h1_error"] == 1.0


@pytest.mark.parametrize("level", [1, 2, 3])
def test_pythagoras_for_conforming_br(level, exact):
    d = StokesDiscretization(lshape_mesh(level), "br")
    s = d.stokes_projector(exact.velocity, exact.velocity_gradient, rhs="gradient")
    v = d.solve(1.0, exact.forcing, "classical", exact.velocity).velocity
    h1 = h1_seminorm_error(v, exact.velocity_gradient)
    best = h1_seminorm_error(s, exact.velocity_gradient)
    dist = projector_distance(v, s, d.A)
    assert h1 ** 2 >= dist ** 2 - 1e-10 * h1 ** 2
    assert h1 ** 2 == pytest.approx(best ** 2 + dist ** 2, rel=1e-8)


def test_pressure_robust_distance_nu_independent(study):
    for level_idx in range(4):
        vals = [study.record(nu, "pressure-robust").reports[level_idx].projector_distance
                for nu in (1.0, 1e-2, 1e-4)]
        assert max(vals) - min(vals) <= 1e-9


def test_classical_distance_scales_with_inverse_nu(study):
    for i in range(4):
        d1 = study.record(1.0, "classical").reports[i].projector_distance
        d4 = study.record(1e-4, "classical").reports[i].projector_distance
        assert d4 / d1 == pytest.approx(1e4, rel=1e-3)


def test_small_nu_error_dominated_by_projector_distance(study):
    r = study.record(1e-4, "classical").reports[-1]
    assert 0.8 <= r.h1_error / r.projector_distance <= 1.2


def test_classical_distance_order_tends_to_one(study):
    orders = study.record(1.0, "classical").projector_orders
    assert orders == sorted(orders)
    assert 0.85 <= orders[-1] <= 1.05


def test_error_reports_are_consistent(study):
    rec = study.record(1.0, "pressure-robust")
    dofs = [r.dofs for r in rec.reports]
    assert dofs == [194, 722, 2786, 10946]
    assert all(r.divergence_norm <= 1e-10 * r.h1_error for r in rec.reports)
    h = [r.h_max for r in rec.reports]
    assert np.allclose(np.array(h[:-1]) / np.array(h[1:]), 2.0)
