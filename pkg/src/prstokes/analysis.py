"""Error norms, projector distances and experimental orders of convergence."""

from dataclasses import asdict, dataclass, field
import math

import numpy as np
from scipy.special import roots_legendre

from .assembly import assemble_stiffness, cell_divergence_integrals
from .errors import UsageError
from .quadrature import physical_points, physical_weights, triangle_rule

ERROR_DEGREE = 10


@dataclass
class ErrorReport:
    """Velocity error quantities of one discrete solution on one mesh."""

    h1_error: float
    projector_distance: float
    l2_error: float
    divergence_norm: float
    dofs: int
    h_max: float
    level: int = None

    def to_dict(self):
        return asdict(self)


@dataclass
class ConvergenceRecord:
    """Reports of one (element, mode, nu) case over a sequence of levels."""

    element: str
    mode: str
    nu: float
    reports: list = field(default_factory=list)

    def column(self, name):
        return [getattr(r, name) for r in self.reports]

    @property
    def h1_orders(self):
        return eoc(self.column("h1_error"))

    @property
    def projector_orders(self):
        return eoc(self.column("projector_distance"))

    def to_dict(self):
        return {"element": self.element, "mode": self.mode, "nu": self.nu,
                "reports": [r.to_dict() for r in self.reports],
                "h1_orders": self.h1_orders,
                "projector_orders": self.projector_orders}


def _gradient_misfit(v_h, exact_gradient, degree):
    mesh = v_h.dofmap.mesh
    rule = triangle_rule(degree)
    x = physical_points(mesh, rule)
    w = physical_weights(mesh, rule)
    G = np.asarray(exact_gradient(x.reshape(-1, 2)), dtype=float)
    G = G.reshape(w.shape + (2, 2))
    return w, G - v_h.gradients(rule.points)


def h1_seminorm_error(v_h, exact_gradient, degree=ERROR_DEGREE):
    """Broken H1 seminorm ``||grad v - grad_h v_h||`` by quadrature.

    ``exact_gradient`` maps points (n, 2) to Jacobians (n, 2, 2) with
    ``G[:, i, j] = d v_i / d x_j``.
    """
    w, diff = _gradient_misfit(v_h, exact_gradient, degree)
    return float(np.sqrt(np.einsum("tq,tqij->", w, diff ** 2)))


def l2_error(v_h, exact, degree=ERROR_DEGREE):
    mesh = v_h.dofmap.mesh
    rule = triangle_rule(degree)
    x = physical_points(mesh, rule)
    w = physical_weights(mesh, rule)
    ex = np.asarray(exact(x.reshape(-1, 2)), dtype=float).reshape(w.shape + (-1,))
    diff = ex - v_h.values(rule.points)
    return float(np.sqrt(np.einsum("tq,tqc->", w, diff ** 2)))


def projector_distance(v_h, s_h, stiffness=None):
    """``||grad_h (v_h - s_h)||`` via the unit-viscosity stiffness form.

    Parameters
    ----------
    v_h, s_h : FeFunction
        Must live on the same dof map.
    stiffness : sparse matrix, optional
        Precomputed unit-viscosity stiffness of that dof map.
    """
    if not v_h.dofmap.same_as(s_h.dofmap):
        raise UsageError("projector distance needs functions on the same dof map")
    A = assemble_stiffness(v_h.dofmap, 1.0) if stiffness is None else stiffness
    d = v_h.coefficients - s_h.coefficients
    return float(np.sqrt(max(d @ (A @ d), 0.0)))


def divergence_norm(v_h):
    """L2 norm of the piecewise-constant projection of ``div_h v_h``."""
    mesh = v_h.dofmap.mesh
    local = cell_divergence_integrals(v_h.dofmap)
    integral = np.einsum("ti,ti->t", local, v_h.cell_coefficients())
    return float(np.sqrt(np.sum(integral ** 2 / mesh.areas)))


def error_report(v_h, s_h, exact_velocity, exact_gradient, level=None,
                 degree=ERROR_DEGREE, stiffness=None):
    mesh = v_h.dofmap.mesh
    return ErrorReport(
        h1_error=h1_seminorm_error(v_h, exact_gradient, degree),
        projector_distance=projector_distance(v_h, s_h, stiffness),
        l2_error=l2_error(v_h, exact_velocity, degree),
        divergence_norm=divergence_norm(v_h),
        dofs=v_h.dofmap.n_dofs + mesh.n_triangles,
        h_max=float(mesh.h_max),
        level=level)


def eoc(errors, h=None):
    """Experimental orders ``log(e_L / e_L+1) / log(h_L / h_L+1)``.

    Without ``h`` the mesh size halves from one entry to the next. Entries
    whose error pair is not strictly positive (or not finite) are ``None``.
    """
    errors = list(errors)
    if h is None:
        h = [2.0 ** -i for i in range(len(errors))]
    if len(h) != len(errors):
        raise UsageError("errors and mesh sizes differ in length")
    orders = []
    for (e0, e1), (h0, h1) in zip(zip(errors, errors[1:]), zip(h, h[1:])):
        ok = all(isinstance(v, (int, float, np.floating)) and math.isfinite(v) and v > 0
                 for v in (e0, e1))
        orders.append(math.log(e0 / e1) / math.log(h0 / h1) if ok else None)
    return orders


def ratio(numerator, denominator):
    """Ratio of two diagnostics, ``nan`` when the denominator vanishes."""
    return numerator / denominator if denominator else float("nan")


def ring_gradient_norms(solution, ks=range(2, 7), n_radial=12, n_angular=96):
    """``||grad v||`` on the sector rings ``2**-(k+1) <= r <= 2**-k``.

    The integral is done in polar coordinates with Gauss-Legendre rules in
    ``r`` and in ``phi`` over [0, 3 pi / 2]. For ``v = r**gamma F(phi)`` the
    norm scales like ``2**(-k gamma)``.
    """
    tr, wr = roots_legendre(n_radial)
    tp, wp = roots_legendre(n_angular)
    phi = 0.5 * solution.omega * (tp + 1.0)
    wphi = 0.5 * solution.omega * wp
    out = []
    for k in ks:
        a, b = 2.0 ** -(k + 1), 2.0 ** -k
        r = a + 0.5 * (b - a) * (tr + 1.0)
        R, P = np.meshgrid(r, phi, indexing="ij")
        W = np.outer(0.5 * (b - a) * wr, wphi) * R
        pts = np.stack([R * np.cos(P), R * np.sin(P)], axis=-1)
        G = solution.velocity_gradient(pts.reshape(-1, 2)).reshape(R.shape + (2, 2))
        out.append(float(np.sqrt(np.einsum("ab,abij->", W, G ** 2))))
    return out
