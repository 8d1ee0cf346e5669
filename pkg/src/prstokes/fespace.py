"""Finite element spaces on triangles: bases, DOF maps and interpolation.

Supported kinds: scalar P1 Lagrange and P0, vector Bernardi-Raugel and
Crouzeix-Raviart velocities, and the H(div) spaces RT0 and BDM1.

Basis functions are first built with the local orientation of each triangle
(outward normals, counterclockwise edge direction) and then multiplied by
``DofMap.cell_signs`` so that they agree with the global edge orientation of
the mesh.
"""

from collections import namedtuple
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, UsageError
from .mesh import build_topology
from .quadrature import gauss_line, physical_points, physical_weights, triangle_rule


class ElementKind(str, Enum):
    P1 = "P1Lagrange"
    BR = "BernardiRaugel"
    CR = "CrouzeixRaviart"
    P0 = "P0"
    RT0 = "RT0"
    BDM1 = "BDM1"

    @property
    def n_local(self):
        return _N_LOCAL[self]

    @property
    def value_dim(self):
        return 1 if self in (ElementKind.P1, ElementKind.P0) else 2

    @property
    def is_hdiv(self):
        return self in (ElementKind.RT0, ElementKind.BDM1)


_N_LOCAL = {ElementKind.P1: 3, ElementKind.BR: 9, ElementKind.CR: 6,
            ElementKind.P0: 1, ElementKind.RT0: 3, ElementKind.BDM1: 6}

_NEXT = np.array([1, 2, 0])
_PREV = np.array([2, 0, 1])


@dataclass(frozen=True, eq=False)
class DofMap:
    """Global numbering of the degrees of freedom of one space on one mesh."""

    mesh: object
    kind: ElementKind
    n_dofs: int
    cell_dofs: np.ndarray
    cell_signs: np.ndarray
    dirichlet_dofs: np.ndarray

    @property
    def free_dofs(self):
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.dirichlet_dofs] = False
        return np.flatnonzero(mask)

    def same_as(self, other):
        return (self.kind == other.kind and self.n_dofs == other.n_dofs
                and np.array_equal(self.cell_dofs, other.cell_dofs)
                and np.array_equal(self.cell_signs, other.cell_signs)
                and np.array_equal(self.dirichlet_dofs, other.dirichlet_dofs))


@dataclass
class FeFunction:
    dofmap: DofMap
    coefficients: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.coefficients is None:
            self.coefficients = np.zeros(self.dofmap.n_dofs)
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.dofmap.n_dofs,):
            raise UsageError(f"expected {self.dofmap.n_dofs} coefficients, "
                             f"got {self.coefficients.shape}")

    def cell_coefficients(self):
        return self.coefficients[self.dofmap.cell_dofs]

    def values(self, bary):
        """Values at barycentric points of every triangle, (nt, nq, ncomp)."""
        vals, _ = local_basis(self.dofmap, bary)
        return np.einsum("tqic,ti->tqc", vals, self.cell_coefficients())

    def gradients(self, bary):
        """Broken gradients, (nt, nq, ncomp, 2)."""
        _, grads = local_basis(self.dofmap, bary)
        return np.einsum("tqicd,ti->tqcd", grads, self.cell_coefficients())

    def __sub__(self, other):
        _check_same(self.dofmap, other.dofmap)
        return FeFunction(self.dofmap, self.coefficients - other.coefficients)

    def __add__(self, other):
        _check_same(self.dofmap, other.dofmap)
        return FeFunction(self.dofmap, self.coefficients + other.coefficients)


def _check_same(a, b):
    if a is not b and not a.same_as(b):
        raise UsageError("functions live on different DOF maps")


def build_dofmap(mesh, kind):
    """Number DOFs: vertex DOFs (x then y), then edge DOFs, then cell DOFs."""
    kind = ElementKind(kind)
    nv, ne, nt = mesh.n_vertices, mesh.n_edges, mesh.n_triangles
    tri, t2e = mesh.triangles, mesh.triangle_to_edges
    ones3 = np.ones((nt, 3))
    bverts, bedges = mesh.boundary_vertices, mesh.boundary_edges
    if kind is ElementKind.P1:
        dofs, signs, n, dirichlet = tri, ones3, nv, bverts
    elif kind is ElementKind.P0:
        dofs = np.arange(nt)[:, None]
        signs, n, dirichlet = np.ones((nt, 1)), nt, np.array([], dtype=np.int64)
    elif kind is ElementKind.BR:
        vdofs = np.stack([2 * tri, 2 * tri + 1], axis=2).reshape(nt, 6)
        dofs = np.hstack([vdofs, 2 * nv + t2e])
        signs = np.hstack([np.ones((nt, 6)), mesh.triangle_edge_signs])
        n = 2 * nv + ne
        dirichlet = np.concatenate([np.stack([2 * bverts, 2 * bverts + 1], 1).ravel(),
                                    2 * nv + bedges])
    elif kind is ElementKind.CR:
        dofs = np.stack([2 * t2e, 2 * t2e + 1], axis=2).reshape(nt, 6)
        signs = np.ones((nt, 6))
        n = 2 * ne
        dirichlet = np.stack([2 * bedges, 2 * bedges + 1], 1).ravel()
    elif kind is ElementKind.RT0:
        dofs, signs, n, dirichlet = t2e, mesh.triangle_edge_signs.copy(), ne, bedges
    else:
        dofs = np.stack([2 * t2e, 2 * t2e + 1], axis=2).reshape(nt, 6)
        s = mesh.triangle_edge_signs
        signs = np.stack([s, s * mesh.local_edge_direction_signs], axis=2).reshape(nt, 6)
        n = 2 * ne
        dirichlet = np.stack([2 * bedges, 2 * bedges + 1], 1).ravel()
    dofs = np.ascontiguousarray(dofs, dtype=np.int64)
    signs = np.ascontiguousarray(signs, dtype=float)
    dirichlet = np.sort(np.asarray(dirichlet, dtype=np.int64))
    for arr in (dofs, signs, dirichlet):
        arr.setflags(write=False)
    return DofMap(mesh, kind, int(n), dofs, signs, dirichlet)


# -- local bases ---------------------------------------------------------------

def _bdm1_coefficients(mesh):
    """Coefficients of the local BDM1 dual basis in the span of lambda_a e_c.

    Local DOFs on edge i: int n_i . v and int n_i . v (lambda_k - lambda_j),
    with j, k the start and end of the edge.
    """
    nt = mesh.n_triangles
    n = mesh.local_normals                      # (nt, 3, 2)
    L = mesh.local_edge_lengths                 # (nt, 3)
    D = np.zeros((nt, 6, 6))
    for i in range(3):
        j, k = _NEXT[i], _PREV[i]
        # edge integrals of lambda_a against 1 and (lambda_k - lambda_j)
        m0 = np.zeros(3)
        m1 = np.zeros(3)
        m0[[j, k]] = 0.5
        m1[j], m1[k] = -1 / 6, 1 / 6
        for a in range(3):
            for c in range(2):
                col = 2 * a + c
                D[:, 2 * i, col] = L[:, i] * n[:, i, c] * m0[a]
                D[:, 2 * i + 1, col] = L[:, i] * n[:, i, c] * m1[a]
    return np.linalg.inv(D)                     # (nt, 6 basis (a,c), 6 dofs)


def _local_basis_unsigned(mesh, kind, bary):
    bary = np.atleast_2d(np.asarray(bary, dtype=float))
    nt, nq = mesh.n_triangles, len(bary)
    G = mesh.barycentric_gradients              # (nt, 3, 2)
    eye = np.eye(2)
    if kind is ElementKind.P1:
        vals = np.broadcast_to(bary[None, :, :, None], (nt, nq, 3, 1))
        grads = np.broadcast_to(G[:, None, :, None, :], (nt, nq, 3, 1, 2))
    elif kind is ElementKind.P0:
        vals = np.ones((nt, nq, 1, 1))
        grads = np.zeros((nt, nq, 1, 1, 2))
    elif kind is ElementKind.BR:
        vals = np.zeros((nt, nq, 9, 2))
        grads = np.zeros((nt, nq, 9, 2, 2))
        for a in range(3):
            for c in range(2):
                vals[:, :, 2 * a + c, c] = bary[None, :, a]
                grads[:, :, 2 * a + c, c, :] = G[:, None, a, :]
        n = mesh.local_normals
        for i in range(3):
            j, k = _NEXT[i], _PREV[i]
            b = 6.0 * bary[:, j] * bary[:, k]                       # (nq,)
            db = 6.0 * (bary[None, :, j, None] * G[:, None, k, :]
                        + bary[None, :, k, None] * G[:, None, j, :])  # (nt, nq, 2)
            vals[:, :, 6 + i, :] = b[None, :, None] * n[:, None, i, :]
            grads[:, :, 6 + i, :, :] = n[:, None, i, :, None] * db[:, :, None, :]
    elif kind is ElementKind.CR:
        vals = np.zeros((nt, nq, 6, 2))
        grads = np.zeros((nt, nq, 6, 2, 2))
        for i in range(3):
            for c in range(2):
                vals[:, :, 2 * i + c, c] = 1.0 - 2.0 * bary[None, :, i]
                grads[:, :, 2 * i + c, c, :] = -2.0 * G[:, None, i, :]
    elif kind is ElementKind.RT0:
        x = np.einsum("qa,tad->tqd", bary, mesh.coords)
        scale = 1.0 / (2.0 * mesh.areas)
        vals = (x[:, :, None, :] - mesh.coords[:, None, :, :]) * scale[:, None, None, None]
        grads = np.broadcast_to(scale[:, None, None, None, None] * eye,
                                (nt, nq, 3, 2, 2))
    else:
        C = _bdm1_coefficients(mesh).reshape(nt, 3, 2, 6)          # (t, a, c, m)
        vals = np.einsum("qa,tacm->tqmc", bary, C)
        grads = np.einsum("tad,tacm->tmcd", G, C)[:, None]
        grads = np.broadcast_to(grads, (nt, nq, 6, 2, 2))
    return vals, grads


def local_basis(dofmap, bary):
    """Signed local basis values and gradients at barycentric points.

    Returns
    -------
    values : ndarray, shape (nt, nq, n_local, value_dim)
    grads : ndarray, shape (nt, nq, n_local, value_dim, 2)
    """
    vals, grads = _local_basis_unsigned(dofmap.mesh, dofmap.kind, bary)
    s = dofmap.cell_signs[:, None, :]
    return vals * s[..., None], grads * s[..., None, None]


BasisEval = namedtuple("BasisEval", "values gradients divergence")


def eval_basis(kind, vertices, point):
    """Evaluate the local basis of one triangle at a reference point.

    ``point`` is given in reference coordinates (xi, eta) of the triangle
    (0,0), (1,0), (0,1). Normals use the triangle's own outward orientation.
    """
    kind = ElementKind(kind)
    xi, eta = np.asarray(point, dtype=float)
    tol = 1e-12
    if xi < -tol or eta < -tol or xi + eta > 1 + tol:
        raise DomainError(f"point {(xi, eta)} outside the reference triangle")
    mesh = build_topology(vertices, [[0, 1, 2]])
    bary = np.array([[1.0 - xi - eta, xi, eta]])
    vals, grads = _local_basis_unsigned(mesh, kind, bary)
    vals, grads = vals[0, 0], grads[0, 0]
    div = np.trace(grads, axis1=1, axis2=2) if kind.value_dim == 2 else None
    if kind.value_dim == 1:
        vals, grads = vals[:, 0], grads[:, 0, :]
    return BasisEval(vals, grads, div)


# -- interpolation ---------------------------------------------------------------

# Gauss points per edge for edge means; 8 points integrate degree 15 exactly,
# which keeps edge means of smooth fields at round-off on coarse meshes.
EDGE_POINTS = 8


def _edge_samples(mesh, func, edge_points):
    t, w = gauss_line(edge_points)
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    pts = a[:, None, :] * (1 - t)[None, :, None] + b[:, None, :] * t[None, :, None]
    vals = np.asarray(func(pts.reshape(-1, 2)), dtype=float)
    return t, w, vals.reshape(len(mesh.edges), len(t), -1)


def interpolate(dofmap, func, edge_points=EDGE_POINTS, degree=10):
    """Canonical interpolant of ``func`` (maps (n, 2) points to values).

    BR: vertex values plus bubble coefficients matching the mean normal flux
    on every edge. CR: edge means. RT0/BDM1: normal moments against P0/P1 on
    edges. P1: vertex values. P0: cell means.
    """
    mesh, kind = dofmap.mesh, dofmap.kind
    coeff = np.zeros(dofmap.n_dofs)
    if kind is ElementKind.P0:
        return project_p0(mesh, func, degree=degree)
    if kind is ElementKind.P1:
        coeff[:] = np.asarray(func(mesh.vertices), dtype=float).reshape(-1)
        return FeFunction(dofmap, coeff)
    t, w, ev = _edge_samples(mesh, func, edge_points)
    if kind is ElementKind.CR:
        coeff[:] = np.einsum("q,eqc->ec", w, ev).ravel()
        return FeFunction(dofmap, coeff)
    nE = mesh.edge_normals
    flux = np.einsum("q,eqc,ec->e", w, ev, nE)             # mean normal flux
    if kind is ElementKind.BR:
        vv = np.asarray(func(mesh.vertices), dtype=float)
        nv = mesh.n_vertices
        coeff[:2 * nv] = vv.ravel()
        p1_flux = 0.5 * np.einsum("ec,ec->e", vv[mesh.edges[:, 0]] + vv[mesh.edges[:, 1]], nE)
        coeff[2 * nv:] = flux - p1_flux
        return FeFunction(dofmap, coeff)
    L = mesh.edge_lengths
    if kind is ElementKind.RT0:
        coeff[:] = L * flux
    else:
        q = 2.0 * t - 1.0
        coeff[0::2] = L * flux
        coeff[1::2] = L * np.einsum("q,q,eqc,ec->e", w, q, ev, nE)
    return FeFunction(dofmap, coeff)


def interpolate_boundary(func, dofmap, edge_points=EDGE_POINTS):
    """Interpolant restricted to the Dirichlet DOFs (other coefficients zero)."""
    full = interpolate(dofmap, func, edge_points=edge_points)
    out = np.zeros(dofmap.n_dofs)
    out[dofmap.dirichlet_dofs] = full.coefficients[dofmap.dirichlet_dofs]
    return FeFunction(dofmap, out)


def project_p0(mesh, func, zero_mean=False, degree=10):
    """L2 projection onto piecewise constants (cell means of ``func``)."""
    rule = triangle_rule(degree)
    x = physical_points(mesh, rule)
    w = physical_weights(mesh, rule)
    vals = np.asarray(func(x.reshape(-1, 2)), dtype=float).reshape(w.shape)
    means = np.einsum("tq,tq->t", w, vals) / mesh.areas
    if zero_mean:
        means = means - means @ mesh.areas / mesh.areas.sum()
    return FeFunction(build_dofmap(mesh, ElementKind.P0), means)
