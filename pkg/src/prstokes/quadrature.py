"""Quadrature rules on the reference triangle (0,0), (1,0), (0,1) and on edges."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import CapabilityError, GeometryError

MAX_DEGREE = 20


@dataclass(frozen=True)
class QuadRule:
    """Reference-triangle rule; weights sum to the reference area 1/2.

    Attributes
    ----------
    points : ndarray, shape (nq, 3)
        Barycentric coordinates.
    weights : ndarray, shape (nq,)
    exactness_degree : int
    """

    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    @property
    def reference_points(self):
        """Cartesian reference coordinates, shape (nq, 2)."""
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)


def _freeze(points, weights, degree):
    points = np.ascontiguousarray(points, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(points, weights, degree)


def _collapsed_rule(degree):
    # Gauss-Jacobi in the collapsed direction absorbs the (1 - s) Jacobian
    n = degree // 2 + 1
    tj, wj = roots_jacobi(n, 1.0, 0.0)
    tl, wl = roots_legendre(n)
    s = 0.5 * (1.0 + tj)
    r = 0.5 * (1.0 + tl)
    S, R = np.meshgrid(s, r, indexing="ij")
    W = np.outer(wj / 4.0, wl / 2.0)
    x = ((1.0 - S) * R).ravel()
    y = S.ravel()
    bary = np.stack([1.0 - x - y, x, y], axis=1)
    return bary, W.ravel()


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Rule exact for polynomials of total degree ``<= degree``.

    Degrees 1 and 2 are the symmetric centroid and edge-midpoint rules;
    higher degrees use a collapsed Gauss-Jacobi x Gauss-Legendre product.
    """
    if not isinstance(degree, (int, np.integer)) or not 1 <= degree <= MAX_DEGREE:
        raise CapabilityError(f"unsupported quadrature degree {degree!r} "
                              f"(1..{MAX_DEGREE})")
    degree = int(degree)
    if degree == 1:
        return _freeze([[1 / 3, 1 / 3, 1 / 3]], [0.5], 1)
    if degree == 2:
        return _freeze([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]],
                       [1 / 6] * 3, 2)
    bary, w = _collapsed_rule(degree)
    return _freeze(bary, w, degree)


def map_rule(rule, vertices):
    """Push a rule forward to the triangle with the given (3, 2) vertices.

    Returns physical points (nq, 2) and weights summing to the triangle area.
    """
    vertices = np.asarray(vertices, dtype=float)
    e1 = vertices[1] - vertices[0]
    e2 = vertices[2] - vertices[0]
    det = e1[0] * e2[1] - e1[1] * e2[0]
    diam2 = max(e1 @ e1, e2 @ e2, (e2 - e1) @ (e2 - e1))
    if abs(det) <= 2e-14 * diam2:
        raise GeometryError("degenerate triangle")
    return rule.points @ vertices, rule.weights * abs(det)


def physical_points(mesh, rule):
    """Quadrature points of ``rule`` on every triangle, shape (nt, nq, 2)."""
    return np.einsum("qa,tad->tqd", rule.points, mesh.coords)


def physical_weights(mesh, rule):
    """Quadrature weights on every triangle, shape (nt, nq)."""
    return 2.0 * mesh.areas[:, None] * rule.weights[None, :]


@lru_cache(maxsize=None)
def gauss_line(n):
    """``n``-point Gauss-Legendre rule on [0, 1] (points, weights summing to 1)."""
    t, w = roots_legendre(n)
    return 0.5 * (t + 1.0), 0.5 * w
