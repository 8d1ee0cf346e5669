"""Saddle-point solves: Stokes systems, the discrete Stokes projector and the
discrete Helmholtz-Hodge decomposition.

Dirichlet DOFs are eliminated; the pressure mean is fixed by one
area-weighted Lagrange multiplier appended to the pressure block, giving the
symmetric indefinite matrix::

    [  A_ff  -B_f^T   0 ]
    [ -B_f     0      a ]
    [   0      a^T    0 ]
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (assemble_divergence, assemble_reconstruction,
                       assemble_rhs, assemble_stiffness, rhs_degree, VELOCITY_KINDS)
from .errors import CapabilityError, SolverError, UsageError
from .fespace import (EDGE_POINTS, ElementKind, FeFunction, build_dofmap,
                      interpolate_boundary, local_basis)
from .quadrature import physical_points, physical_weights, triangle_rule

RESIDUAL_TOL = 1e-10
# Projector data use the same rule as the error norms, so that Galerkin
# orthogonality (and with it Pythagoras) holds for the quadrature inner product.
PROJECTOR_DEGREE = 10

ELEMENT_ALIASES = {
    "bernardi-raugel": ElementKind.BR, "br": ElementKind.BR,
    "crouzeix-raviart": ElementKind.CR, "cr": ElementKind.CR,
}


def element_kind(element):
    if isinstance(element, ElementKind):
        kind = element
    else:
        kind = ELEMENT_ALIASES.get(str(element).lower())
        if kind is None:
            try:
                kind = ElementKind(element)
            except ValueError:
                raise CapabilityError(f"unknown element {element!r}") from None
    if kind not in VELOCITY_KINDS:
        raise CapabilityError(f"{kind.value} is not a Stokes velocity element")
    return kind


class _Factorization:
    """LU factorization of a sparse matrix with one refinement step."""

    def __init__(self, K):
        self.K = sp.csc_matrix(K)
        try:
            self.lu = spla.splu(self.K)
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}") from None

    def solve(self, rhs):
        x = self.lu.solve(rhs)
        r = rhs - self.K @ x
        x = x + self.lu.solve(r)
        r = rhs - self.K @ x
        scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
        rel = np.linalg.norm(r) / scale if np.linalg.norm(rhs) > 0 else np.linalg.norm(r)
        if not np.all(np.isfinite(x)) or rel > RESIDUAL_TOL:
            raise SolverError(f"linear solve residual {rel:.3e} exceeds {RESIDUAL_TOL:g}")
        return x, rel


class SaddlePointFactor:
    """Reduced saddle-point matrix for fixed A, B and Dirichlet DOF set.

    The bordered matrix above is kept for residual checks, but it is not
    factored directly: its dense multiplier row and column wreck the fill-in
    of the sparse LU. Summing the pressure rows shows that the multiplier is
    fixed by the data alone,
    ``lam = (1^T B_d u_d - 1^T g) / sum(a)``, because the columns of ``B_f``
    sum to zero (interior basis functions carry no net flux). With ``lam``
    known the pressure block is consistent, so one pressure unknown is
    pinned, the rest solved by LU, and the pressure shifted to zero mean.
    """

    def __init__(self, A, B, dirichlet_dofs, pressure_weights):
        A, B = sp.csr_matrix(A), sp.csr_matrix(B)
        n = A.shape[0]
        mask = np.ones(n, dtype=bool)
        mask[np.asarray(dirichlet_dofs, dtype=np.int64)] = False
        self.free = np.flatnonzero(mask)
        self.fixed = np.flatnonzero(~mask)
        self.A, self.B = A, B
        self.A_ff = A[self.free][:, self.free]
        self.A_fd = A[self.free][:, self.fixed]
        self.B_f = B[:, self.free]
        self.B_d = B[:, self.fixed]
        self.weights = np.asarray(pressure_weights, dtype=float)
        a = sp.csr_matrix(self.weights[:, None])
        self.K = sp.bmat([[self.A_ff, -self.B_f.T, None],
                          [-self.B_f, None, a],
                          [None, a.T, None]], format="csr")
        self.n_free, self.n_p = len(self.free), B.shape[0]
        keep = np.ones(self.n_free + self.n_p, dtype=bool)
        keep[self.n_free] = False                      # pin the first pressure
        self._keep = keep
        self.factor = _Factorization(self.K[:-1][:, :-1][keep][:, keep])

    def solve(self, rhs_velocity, rhs_pressure, dirichlet_values, velocity_scale=1.0):
        """Solve with ``velocity_scale`` multiplying the free-block right-hand side.

        Returns the full velocity vector, the pressure, the multiplier and the
        relative residual of the bordered system.
        """
        ud = np.asarray(dirichlet_values, dtype=float)[self.fixed]
        g = np.asarray(rhs_pressure, dtype=float)
        rhs = np.concatenate([
            velocity_scale * np.asarray(rhs_velocity)[self.free] - self.A_fd @ ud,
            -g + self.B_d @ ud,
            [0.0]])
        lam = (np.sum(self.B_d @ ud) - np.sum(g)) / np.sum(self.weights)
        reduced = rhs[:-1].copy()
        reduced[self.n_free:] -= self.weights * lam
        y, _ = self.factor.solve(reduced[self._keep])
        x = np.zeros(len(rhs))
        x[:-1][self._keep] = y
        p = x[self.n_free:-1]
        p -= (self.weights @ p) / np.sum(self.weights)
        x[-1] = lam
        scale = np.linalg.norm(rhs)
        res = np.linalg.norm(rhs - self.K @ x)
        rel = res / scale if scale > 0 else res
        if not np.all(np.isfinite(x)) or rel > RESIDUAL_TOL:
            raise SolverError(f"linear solve residual {rel:.3e} exceeds {RESIDUAL_TOL:g}")
        u = np.zeros(self.A.shape[0])
        u[self.free] = x[:self.n_free]
        u[self.fixed] = ud
        return u, x[self.n_free:self.n_free + self.n_p].copy(), lam, rel


@dataclass
class SaddleSystem:
    """Stokes saddle-point data: ``A`` is already scaled by the viscosity."""

    A: sp.csr_matrix
    B: sp.csr_matrix
    rhs_velocity: np.ndarray
    dirichlet_values: np.ndarray
    velocity: object
    pressure: object
    rhs_pressure: np.ndarray = None
    nu: float = 1.0
    mode: str = "classical"
    level: int = None

    def __post_init__(self):
        if self.rhs_pressure is None:
            self.rhs_pressure = np.zeros(self.B.shape[0])


@dataclass
class StokesSolution:
    velocity: FeFunction
    pressure: FeFunction
    mode: str
    element: ElementKind
    nu: float
    level: int = None
    residual: float = 0.0
    multiplier: float = 0.0
    info: dict = field(default_factory=dict)


def solve(system):
    """Solve a :class:`SaddleSystem` by sparse direct factorization."""
    fac = SaddlePointFactor(system.A, system.B, system.velocity.dirichlet_dofs,
                            system.pressure.mesh.areas)
    u, p, lam, rel = fac.solve(system.rhs_velocity, system.rhs_pressure,
                               system.dirichlet_values)
    return StokesSolution(FeFunction(system.velocity, u), FeFunction(system.pressure, p),
                          system.mode, system.velocity.kind, system.nu, system.level,
                          residual=rel, multiplier=lam)


class StokesDiscretization:
    """Spaces, operators and one unit-viscosity factorization for one mesh.

    Solves for several viscosities reuse the factorization: with ``A`` the
    unit-viscosity stiffness, ``(nu A, B)`` with data ``b`` has the velocity of
    ``(A, B)`` with data ``b / nu`` and pressure scaled by ``nu``.
    """

    def __init__(self, mesh, element, reconstruction="auto", degree=None, level=None):
        self.mesh = mesh
        self.element = element_kind(element)
        self.level = level
        self.velocity = build_dofmap(mesh, self.element)
        self.pressure = build_dofmap(mesh, ElementKind.P0)
        self.degree = rhs_degree(self.element) if degree is None else int(degree)
        self.A = assemble_stiffness(self.velocity, 1.0)
        self.B = assemble_divergence(self.velocity, self.pressure)
        self.R, self.hdiv = assemble_reconstruction(self.velocity, reconstruction)
        self._factor = None

    @property
    def n_dofs(self):
        return self.velocity.n_dofs + self.pressure.n_dofs

    @property
    def factor(self):
        if self._factor is None:
            self._factor = SaddlePointFactor(self.A, self.B, self.velocity.dirichlet_dofs,
                                             self.mesh.areas)
        return self._factor

    def rhs(self, f, mode):
        if mode == "classical":
            return assemble_rhs(self.velocity, f, "classical", degree=self.degree)
        if mode in ("pressure-robust", "reconstructed"):
            return assemble_rhs(self.velocity, f, "reconstructed", self.R, self.hdiv,
                                degree=self.degree)
        raise UsageError(f"unknown mode {mode!r}")

    def boundary_values(self, boundary, edge_points=EDGE_POINTS):
        if boundary is None:
            return np.zeros(self.velocity.n_dofs)
        return interpolate_boundary(boundary, self.velocity, edge_points).coefficients

    def _solution(self, u, p, lam, rel, mode, nu):
        return StokesSolution(FeFunction(self.velocity, u), FeFunction(self.pressure, p),
                              mode, self.element, nu, self.level, residual=rel,
                              multiplier=lam)

    def solve(self, nu, f, mode="classical", boundary=None, rhs=None):
        """Discrete Stokes solution for viscosity ``nu`` and forcing ``f``.

        ``mode`` is ``"classical"`` (test with ``phi_i``) or
        ``"pressure-robust"`` (test with the reconstruction ``I_h phi_i``).
        """
        if nu <= 0:
            raise UsageError("viscosity must be positive")
        b = self.rhs(f, mode) if rhs is None else rhs
        ud = self.boundary_values(boundary)
        u, p1, lam, rel = self.factor.solve(b, np.zeros(self.pressure.n_dofs), ud,
                                            velocity_scale=1.0 / nu)
        return self._solution(u, nu * p1, nu * lam, rel, mode, nu)

    def stokes_projector(self, velocity, gradient=None, rhs="gradient",
                         laplacian_divfree=None, edge_points=EDGE_POINTS, degree=None):
        """Discrete Stokes projector of an exact velocity.

        ``rhs="gradient"`` uses the defining data ``(grad v, grad_h phi_i)``.
        ``rhs="hodge"`` uses ``(P(-lap v), I_h phi_i)``, where
        ``laplacian_divfree`` evaluates the divergence-free part of
        ``-lap v`` (zero when omitted). Both agree for homogeneous boundary
        data; with inhomogeneous data only the second is free of the
        pressure part of ``-lap v``.
        """
        if rhs == "gradient":
            if gradient is None:
                raise UsageError("gradient projector needs the exact velocity gradient")
            b = gradient_load(self.velocity, gradient,
                              degree=degree or PROJECTOR_DEGREE)
        elif rhs == "hodge":
            if laplacian_divfree is None:
                b = np.zeros(self.velocity.n_dofs)
            else:
                b = self.rhs(laplacian_divfree, "pressure-robust")
        else:
            raise UsageError(f"unknown projector data {rhs!r}")
        ud = self.boundary_values(velocity, edge_points)
        u, p, lam, rel = self.factor.solve(b, np.zeros(self.pressure.n_dofs), ud)
        sol = self._solution(u, p, lam, rel, f"projector-{rhs}", 1.0)
        return sol.velocity


def gradient_load(dofmap, gradient, degree=10):
    """``b_i = int grad v : grad_h phi_i`` for an exact Jacobian ``gradient``."""
    rule = triangle_rule(degree)
    x = physical_points(dofmap.mesh, rule)
    w = physical_weights(dofmap.mesh, rule)
    G = np.asarray(gradient(x.reshape(-1, 2)), dtype=float).reshape(w.shape + (2, 2))
    _, grads = local_basis(dofmap, rule.points)
    local = np.einsum("tq,tqcd,tqicd->ti", w, G, grads)
    return np.bincount(dofmap.cell_dofs.ravel(), weights=local.ravel(),
                       minlength=dofmap.n_dofs)


def solve_stokes(mesh, element, nu, f, mode="classical", boundary=None,
                 reconstruction="auto", degree=None):
    disc = StokesDiscretization(mesh, element, reconstruction, degree)
    return disc.solve(nu, f, mode, boundary)


def solve_stokes_projector(mesh, element, velocity, gradient, rhs="gradient",
                           laplacian_divfree=None, reconstruction="auto", edge_points=EDGE_POINTS):
    disc = StokesDiscretization(mesh, element, reconstruction)
    return disc.stokes_projector(velocity, gradient, rhs, laplacian_divfree, edge_points)


@dataclass
class HelmholtzResult:
    alpha: FeFunction
    remainder_norm: float
    f_norm: float


def helmholtz_projector(mesh, f, degree=10):
    """Discrete Helmholtz-Hodge split ``f = grad alpha_h + remainder``.

    ``alpha_h`` is the zero-mean P1 solution of the Neumann problem
    ``(grad alpha_h, grad q) = (f, grad q)``; the L2 norm of the remainder
    bounds the norm of the divergence-free part of ``f`` from above.
    """
    dm = build_dofmap(mesh, ElementKind.P1)
    rule = triangle_rule(degree)
    x = physical_points(mesh, rule)
    w = physical_weights(mesh, rule)
    fx = np.asarray(f(x.reshape(-1, 2)), dtype=float).reshape(w.shape + (2,))
    G = mesh.barycentric_gradients
    local = np.einsum("tq,tqd,tid->ti", w, fx, G)
    b = np.bincount(dm.cell_dofs.ravel(), weights=local.ravel(), minlength=dm.n_dofs)
    K = assemble_stiffness(dm, 1.0, degree=1)
    m = np.bincount(mesh.triangles.ravel(), weights=np.repeat(mesh.areas / 3, 3),
                    minlength=dm.n_dofs)
    M = sp.bmat([[K, sp.csr_matrix(m[:, None])], [sp.csr_matrix(m[None, :]), None]])
    sol, _ = _Factorization(M).solve(np.concatenate([b, [0.0]]))
    alpha = FeFunction(dm, sol[:-1])
    ga = np.einsum("ti,tid->td", alpha.cell_coefficients(), G)
    rem = np.einsum("tq,tqd->", w, (fx - ga[:, None, :]) ** 2)
    fn = np.einsum("tq,tqd->", w, fx ** 2)
    return HelmholtzResult(alpha, float(np.sqrt(rem)), float(np.sqrt(fn)))


