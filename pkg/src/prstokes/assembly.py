"""Sparse assembly of the Stokes operators and of the H(div) reconstruction.

All matrices are returned as canonical ``scipy.sparse.csr_matrix`` objects
(sorted column indices, explicit zeros removed).
"""

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import CapabilityError, UsageError
from .fespace import ElementKind, build_dofmap, local_basis
from .quadrature import gauss_line, physical_points, physical_weights, triangle_rule

VELOCITY_KINDS = (ElementKind.BR, ElementKind.CR)
DEFAULT_RECONSTRUCTION = {ElementKind.BR: ElementKind.BDM1,
                          ElementKind.CR: ElementKind.RT0}


RHS_MIN_DEGREE = 12


def rhs_degree(kind):
    """Default load-vector quadrature degree, ``max(2k + 2, 12)``.

    The floor of 12 is what it takes for the pressure-robust velocity on the
    corner benchmark to sit at round-off already on the coarsest mesh; at
    degree 6 the load quadrature error is still ~5e-9 there.
    """
    k = 2 if ElementKind(kind) is ElementKind.BR else 1
    return max(2 * k + 2, RHS_MIN_DEGREE)


def _csr(rows, cols, vals, shape):
    m = sp.coo_matrix((np.ravel(vals), (np.ravel(rows), np.ravel(cols))),
                      shape=shape).tocsr()
    m.sum_duplicates()
    m.data[np.abs(m.data) <= 1e-300] = 0.0
    m.eliminate_zeros()
    m.sort_indices()
    return m


def _cell_pairs(dofs_a, dofs_b):
    rows = np.broadcast_to(dofs_a[:, :, None], dofs_a.shape + (dofs_b.shape[1],))
    cols = np.broadcast_to(dofs_b[:, None, :], rows.shape)
    return rows, cols


def assemble_stiffness(dofmap, nu=1.0, degree=2):
    """``nu * sum_T int_T grad phi_j : grad phi_i`` (broken gradients)."""
    if nu <= 0:
        raise UsageError("viscosity must be positive")
    rule = triangle_rule(degree)
    _, grads = local_basis(dofmap, rule.points)
    w = physical_weights(dofmap.mesh, rule)
    local = nu * np.einsum("tq,tqicd,tqjcd->tij", w, grads, grads)
    rows, cols = _cell_pairs(dofmap.cell_dofs, dofmap.cell_dofs)
    return _csr(rows, cols, local, (dofmap.n_dofs,) * 2)


def assemble_mass(dofmap, degree=4):
    rule = triangle_rule(degree)
    vals, _ = local_basis(dofmap, rule.points)
    w = physical_weights(dofmap.mesh, rule)
    local = np.einsum("tq,tqic,tqjc->tij", w, vals, vals)
    rows, cols = _cell_pairs(dofmap.cell_dofs, dofmap.cell_dofs)
    return _csr(rows, cols, local, (dofmap.n_dofs,) * 2)


def cell_divergence_integrals(dofmap, degree=2):
    """``int_T div phi_i`` for every triangle and local basis function."""
    rule = triangle_rule(degree)
    _, grads = local_basis(dofmap, rule.points)
    w = physical_weights(dofmap.mesh, rule)
    return np.einsum("tq,tqicc->ti", w, grads)


def assemble_divergence(velocity, pressure, degree=2):
    """Coupling ``B[q, w] = (div_h w, q)`` for a P0 pressure space."""
    if pressure.kind is not ElementKind.P0:
        raise CapabilityError("pressure space must be P0")
    local = cell_divergence_integrals(velocity, degree)[:, None, :]
    rows, cols = _cell_pairs(pressure.cell_dofs, velocity.cell_dofs)
    return _csr(rows, cols, local, (pressure.n_dofs, velocity.n_dofs))


def assemble_load(dofmap, f, degree):
    """Load vector ``int f . phi_i``; ``f`` maps (n, 2) points to (n, ncomp)."""
    rule = triangle_rule(degree)
    mesh = dofmap.mesh
    x = physical_points(mesh, rule)
    w = physical_weights(mesh, rule)
    fx = np.asarray(f(x.reshape(-1, 2)), dtype=float).reshape(w.shape + (-1,))
    vals, _ = local_basis(dofmap, rule.points)
    local = np.einsum("tq,tqc,tqic->ti", w, fx, vals)
    return np.bincount(dofmap.cell_dofs.ravel(), weights=local.ravel(),
                       minlength=dofmap.n_dofs)


def assemble_reconstruction(velocity, target="auto", edge_points=3):
    """Matrix of the H(div) interpolation of the velocity basis.

    Column ``j`` holds the RT0 or BDM1 degrees of freedom of ``I_h phi_j``:
    normal moments against P0 (RT0) or P1 (BDM1) on every edge. Traces of
    nonconforming functions enter through the average of the two sides.

    Returns
    -------
    R : csr_matrix, shape (target.n_dofs, velocity.n_dofs)
    target : DofMap
    """
    if velocity.kind not in VELOCITY_KINDS:
        raise CapabilityError(f"no reconstruction for {velocity.kind.value}")
    if isinstance(target, str) and target == "auto":
        target = DEFAULT_RECONSTRUCTION[velocity.kind]
    if not hasattr(target, "cell_dofs"):
        try:
            kind = ElementKind(target)
        except ValueError:
            raise CapabilityError(f"unknown reconstruction space {target!r}") from None
        if not kind.is_hdiv:
            raise CapabilityError(f"{kind.value} is not an H(div) space")
        target = build_dofmap(velocity.mesh, kind)
    elif not target.kind.is_hdiv:
        raise CapabilityError(f"{target.kind.value} is not an H(div) space")

    mesh = velocity.mesh
    nt = mesh.n_triangles
    s, w = gauss_line(edge_points)
    n_mom = 1 if target.kind is ElementKind.RT0 else 2
    t2e = mesh.triangle_to_edges
    weight = np.where(mesh.boundary_edge_mask[t2e], 1.0, 0.5)          # (nt, 3)
    rows, cols, vals = [], [], []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        bary = np.zeros((len(s), 3))
        bary[:, j], bary[:, k] = 1.0 - s, s
        phi, _ = local_basis(velocity, bary)                           # (nt, nq, nloc, 2)
        n_glob = mesh.local_normals[:, i, :] * mesh.triangle_edge_signs[:, i, None]
        flux = np.einsum("tqic,tc->tqi", phi, n_glob)
        scale = (mesh.local_edge_lengths[:, i] * weight[:, i])[:, None]
        e = t2e[:, i]
        m0 = scale * np.einsum("q,tqi->ti", w, flux)
        if n_mom == 1:
            rows.append(np.broadcast_to(e[:, None], m0.shape))
            vals.append(m0)
            cols.append(velocity.cell_dofs)
        else:
            q = (2.0 * s - 1.0)[None, :] * mesh.local_edge_direction_signs[:, i, None]
            m1 = scale * np.einsum("q,tq,tqi->ti", w, q, flux)
            rows += [np.broadcast_to(2 * e[:, None], m0.shape),
                     np.broadcast_to(2 * e[:, None] + 1, m1.shape)]
            vals += [m0, m1]
            cols += [velocity.cell_dofs, velocity.cell_dofs]
    R = _csr(np.concatenate([r.ravel() for r in rows]),
             np.concatenate([c.ravel() for c in cols]),
             np.concatenate([v.ravel() for v in vals]),
             (target.n_dofs, velocity.n_dofs))
    assert R.shape[1] == velocity.n_dofs and nt == mesh.n_triangles
    return R, target


def assemble_rhs(velocity, f, mode="classical", R=None, target=None, degree=None):
    """Right-hand side ``(f, phi_i)`` or ``(f, I_h phi_i)``.

    The reconstructed vector is ``R.T @ F`` with ``F`` the load vector of
    the H(div) target space, i.e. ``f`` integrated against the images of the
    basis functions.
    """
    if degree is None:
        degree = rhs_degree(velocity.kind)
    if mode == "classical":
        return assemble_load(velocity, f, degree)
    if mode != "reconstructed":
        raise UsageError(f"unknown right-hand side mode {mode!r}")
    if R is None or target is None:
        raise UsageError("reconstructed right-hand side needs R and its target space")
    return R.T @ assemble_load(target, f, degree)


@dataclass
class StokesOperators:
    A: sp.csr_matrix
    B: sp.csr_matrix
    R: sp.csr_matrix
    M_hdiv: sp.csr_matrix
    rhs_classical: np.ndarray
    rhs_reconstructed: np.ndarray
    velocity: object
    pressure: object
    hdiv: object


def assemble_operators(velocity, pressure, nu, f, reconstruction="auto", degree=None):
    R, target = assemble_reconstruction(velocity, reconstruction)
    if degree is None:
        degree = rhs_degree(velocity.kind)
    return StokesOperators(
        A=assemble_stiffness(velocity, nu),
        B=assemble_divergence(velocity, pressure),
        R=R,
        M_hdiv=assemble_mass(target),
        rhs_classical=assemble_rhs(velocity, f, "classical", degree=degree),
        rhs_reconstructed=assemble_rhs(velocity, f, "reconstructed", R, target, degree),
        velocity=velocity, pressure=pressure, hdiv=target)


def dump_matrix(path, matrix, comment=""):
    """Write a matrix in MatrixMarket coordinate format."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment)
