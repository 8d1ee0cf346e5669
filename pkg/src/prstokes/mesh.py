"""Conforming triangular meshes: construction, red refinement and file I/O.

Local numbering convention used throughout the package: local edge ``i`` of
a triangle is the edge opposite local vertex ``i`` and runs counterclockwise
from vertex ``(i + 1) % 3`` to vertex ``(i + 2) % 3``.
"""

from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import GeometryError, MeshParseError, TopologyError

DEGENERACY_TOL = 1e-14

# (start, end) local vertices of local edge i
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


class Mesh:
    """Immutable conforming triangulation with edge topology.

    Attributes
    ----------
    vertices : ndarray, shape (nv, 2)
    triangles : ndarray, shape (nt, 3)
        Counterclockwise vertex indices.
    edges : ndarray, shape (ne, 2)
        Vertex pairs with ``edges[:, 0] < edges[:, 1]``.
    triangle_to_edges : ndarray, shape (nt, 3)
        Global index of local edge ``i``.
    triangle_edge_signs : ndarray, shape (nt, 3)
        +1 where the global edge normal is the triangle's outward normal.
    edge_triangles : ndarray, shape (ne, 2)
        Adjacent triangles, lower index first, ``-1`` for a missing neighbour.
    """

    def __init__(self, vertices, triangles, edges, triangle_to_edges,
                 triangle_edge_signs, edge_triangles):
        self.vertices = vertices
        self.triangles = triangles
        self.edges = edges
        self.triangle_to_edges = triangle_to_edges
        self.triangle_edge_signs = triangle_edge_signs
        self.edge_triangles = edge_triangles
        for arr in (vertices, triangles, edges, triangle_to_edges,
                    triangle_edge_signs, edge_triangles):
            arr.setflags(write=False)

    def __repr__(self):
        return (f"Mesh(nv={self.n_vertices}, ne={self.n_edges}, "
                f"nt={self.n_triangles}, h_max={self.h_max:.4g})")

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def boundary_edge_mask(self):
        return self.edge_triangles[:, 1] < 0

    @cached_property
    def boundary_edges(self):
        return np.flatnonzero(self.boundary_edge_mask)

    @cached_property
    def boundary_vertices(self):
        return np.unique(self.edges[self.boundary_edges])

    @cached_property
    def boundary_vertex_mask(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = True
        return mask

    # -- geometry ---------------------------------------------------------

    @cached_property
    def coords(self):
        """Triangle vertex coordinates, shape (nt, 3, 2)."""
        return self.vertices[self.triangles]

    @cached_property
    def jacobians(self):
        """Affine map ``x = x0 + J @ xi`` per triangle, shape (nt, 2, 2)."""
        c = self.coords
        return np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]], axis=2)

    @cached_property
    def areas(self):
        return 0.5 * np.linalg.det(self.jacobians)

    @cached_property
    def barycentric_gradients(self):
        """Gradients of the barycentric coordinates, shape (nt, 3, 2)."""
        jinv = np.linalg.inv(self.jacobians)
        g1, g2 = jinv[:, 0, :], jinv[:, 1, :]
        return np.stack([-g1 - g2, g1, g2], axis=1)

    @cached_property
    def local_edge_vectors(self):
        c = self.coords
        return c[:, LOCAL_EDGES[:, 1]] - c[:, LOCAL_EDGES[:, 0]]

    @cached_property
    def local_edge_lengths(self):
        return np.linalg.norm(self.local_edge_vectors, axis=2)

    @cached_property
    def local_normals(self):
        """Outward unit normals of the local edges, shape (nt, 3, 2)."""
        t = self.local_edge_vectors
        n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
        return n / self.local_edge_lengths[..., None]

    @cached_property
    def edge_lengths(self):
        return np.linalg.norm(self.vertices[self.edges[:, 1]]
                              - self.vertices[self.edges[:, 0]], axis=1)

    @cached_property
    def edge_normals(self):
        """Global unit normal of every edge, shape (ne, 2)."""
        t = self.edge_triangles[:, 0]
        loc = np.argmax(self.triangle_to_edges[t] == np.arange(self.n_edges)[:, None],
                        axis=1)
        return self.local_normals[t, loc]

    @cached_property
    def local_edge_direction_signs(self):
        """+1 where local edge direction runs from lower to higher vertex index."""
        tri = self.triangles
        start = tri[:, LOCAL_EDGES[:, 0]]
        end = tri[:, LOCAL_EDGES[:, 1]]
        return np.where(start < end, 1.0, -1.0)

    @cached_property
    def h_max(self):
        return float(self.local_edge_lengths.max())

    @property
    def area(self):
        return float(self.areas.sum())

    @property
    def boundary_length(self):
        return float(self.edge_lengths[self.boundary_edges].sum())


def _fix_orientation(vertices, triangles):
    c = vertices[triangles]
    e1 = c[:, 1] - c[:, 0]
    e2 = c[:, 2] - c[:, 0]
    signed = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    diam2 = np.max(np.stack([np.sum(e1**2, 1), np.sum(e2**2, 1),
                             np.sum((e2 - e1)**2, 1)]), axis=0)
    bad = np.abs(signed) <= DEGENERACY_TOL * diam2
    if np.any(bad):
        raise GeometryError(f"degenerate triangle {int(np.flatnonzero(bad)[0])}")
    triangles = triangles.copy()
    flip = signed < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    return triangles


def build_topology(vertices, triangles):
    """Build a :class:`Mesh` from raw coordinates and connectivity.

    Clockwise triangles are reoriented. Edges are numbered in lexicographic
    order of their sorted vertex pairs.
    """
    vertices = np.array(vertices, dtype=float).reshape(-1, 2)
    triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    nv = len(vertices)
    if len(triangles) == 0:
        raise TopologyError("mesh has no triangles")
    if triangles.min() < 0 or triangles.max() >= nv:
        raise TopologyError("triangle references a nonexistent vertex")
    if np.any(triangles[:, 0] == triangles[:, 1]) or np.any(
            triangles[:, 1] == triangles[:, 2]) or np.any(triangles[:, 0] == triangles[:, 2]):
        raise GeometryError("triangle with repeated vertex")
    triangles = _fix_orientation(vertices, triangles)
    nt = len(triangles)

    local = triangles[:, LOCAL_EDGES]                  # (nt, 3, 2)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True,
                                       return_counts=True)
    inverse = inverse.reshape(-1)
    if np.any(counts > 2):
        e = int(np.flatnonzero(counts > 2)[0])
        raise TopologyError(f"non-manifold edge {tuple(edges[e])} shared by "
                            f"{counts[e]} triangles")
    tri2edge = inverse.reshape(nt, 3)

    edge_tris = -np.ones((len(edges), 2), dtype=np.int64)
    owners = np.repeat(np.arange(nt), 3)
    # triangles come in increasing order, so the first occurrence is the lower one
    order = np.argsort(inverse, kind="stable")
    sorted_edges = inverse[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = sorted_edges[1:] != sorted_edges[:-1]
    edge_tris[sorted_edges[first], 0] = owners[order[first]]
    edge_tris[sorted_edges[~first], 1] = owners[order[~first]]

    # ccw neighbours traverse a shared edge in opposite directions; equal
    # directions mean overlapping (e.g. repeated) triangles
    forward = (local[:, :, 0] < local[:, :, 1]).reshape(-1)
    fwd_count = np.bincount(inverse, weights=forward, minlength=len(edges))
    folded = (counts == 2) & (fwd_count != 1)
    if np.any(folded):
        e = int(np.flatnonzero(folded)[0])
        raise TopologyError(f"non-manifold edge {tuple(edges[e])}: adjacent "
                            "triangles overlap")

    signs = np.where(edge_tris[tri2edge, 0] == np.arange(nt)[:, None], 1.0, -1.0)
    return Mesh(vertices, triangles, edges, tri2edge, signs, edge_tris)


def make_lshape_mesh():
    """Level-0 criss-cross mesh of ``(-1, 1)^2 minus (0, 1) x (-1, 0)``.

    Three unit squares, each cut into four triangles through its centre.
    """
    grid = [(-1, -1), (0, -1), (-1, 0), (0, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
    index = {p: i for i, p in enumerate(grid)}
    vertices = [list(p) for p in grid]
    triangles = []
    for x0, y0 in [(-1, 0), (0, 0), (-1, -1)]:
        corners = [(x0, y0), (x0 + 1, y0), (x0 + 1, y0 + 1), (x0, y0 + 1)]
        c = len(vertices)
        vertices.append([x0 + 0.5, y0 + 0.5])
        for a, b in zip(corners, corners[1:] + corners[:1]):
            triangles.append([index[a], index[b], c])
    return build_topology(vertices, triangles)


def red_refine(mesh, times=1):
    """Uniform red refinement: each triangle splits into four via edge midpoints.

    The midpoint of edge ``e`` becomes vertex ``nv + e``.
    """
    for _ in range(times):
        nv = mesh.n_vertices
        mid = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
        vertices = np.vstack([mesh.vertices, mid])
        t = mesh.triangles
        m = nv + mesh.triangle_to_edges
        children = np.stack([
            np.stack([t[:, 0], m[:, 2], m[:, 1]], axis=1),
            np.stack([m[:, 2], t[:, 1], m[:, 0]], axis=1),
            np.stack([m[:, 1], m[:, 0], t[:, 2]], axis=1),
            np.stack([m[:, 0], m[:, 1], m[:, 2]], axis=1),
        ], axis=1).reshape(-1, 3)
        mesh = build_topology(vertices, children)
    return mesh


def lshape_mesh(level):
    """Builtin L-shape mesh after ``level`` red refinements."""
    return red_refine(make_lshape_mesh(), level)


def check_invariants(mesh, euler_characteristic=1):
    """Raise if a mesh violates conformity, orientation or Euler's relation."""
    counts = np.bincount(mesh.triangle_to_edges.ravel(), minlength=mesh.n_edges)
    if np.any((counts < 1) | (counts > 2)):
        raise TopologyError("edge adjacent to neither one nor two triangles")
    if np.any(mesh.areas <= 0):
        raise GeometryError("negatively oriented triangle")
    chi = mesh.n_vertices - mesh.n_edges + mesh.n_triangles
    if euler_characteristic is not None and chi != euler_characteristic:
        raise TopologyError(f"Euler characteristic {chi} != {euler_characteristic}")


def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def load_mesh(path):
    """Read a mesh in the ``nv nt`` / ``x y`` / ``i j k`` ASCII format."""
    text = Path(path).read_text()
    lines = _data_lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MeshParseError("empty mesh file", line=1) from None
    if len(header) != 2:
        raise MeshParseError("header must be 'nv nt'", line=lineno)
    try:
        nv, nt = int(header[0]), int(header[1])
    except ValueError:
        raise MeshParseError("header must hold two integers", line=lineno) from None
    vertices, triangles = [], []
    for want, ncol, conv, store in ((nv, 2, float, vertices), (nt, 3, int, triangles)):
        for _ in range(want):
            try:
                lineno, tokens = next(lines)
            except StopIteration:
                raise MeshParseError("unexpected end of file",
                                     line=text.count("\n") + 1) from None
            if len(tokens) != ncol:
                raise MeshParseError(f"expected {ncol} values, got {len(tokens)}",
                                     line=lineno)
            try:
                store.append([conv(tok) for tok in tokens])
            except ValueError:
                raise MeshParseError(f"cannot parse {' '.join(tokens)!r}",
                                     line=lineno) from None
    extra = next(lines, None)
    if extra is not None:
        raise MeshParseError("trailing data after triangles", line=extra[0])
    return build_topology(vertices, triangles)


def save_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
