"""Sparse assembly of mass and stiffness operators, loads, and solvers.

Matrices are assembled over all dofs of a space; the Dirichlet condition is
imposed by restriction to interior dofs, which ``InteriorSolver`` handles
together with a factorization cache and a residual check on every solve.

Cross-mesh bilinear forms (a function from one mesh tested against basis
functions of another) are integrated exactly on the coarsest common
refinement of the two meshes through ``MeshEmbedding`` pullbacks.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .fespace import (
    FeFunction,
    affine_maps,
    quad_triangle,
    reference_values,
    reference_gradients,
)
from .mesh import coarsest_common_refinement


DEFAULT_EXACTNESS = 8    # for integrands that are not piecewise polynomial


class CoefficientMatrix:
    """Constant symmetric positive definite diffusion matrix.

    ``ellipticity`` is the smallest eigenvalue (the coercivity constant of
    the bilinear form), ``continuity`` the largest.
    """

    def __init__(self, array=None):
        a = np.eye(2) if array is None else np.asarray(array, dtype=float)
        if a.shape != (2, 2):
            raise ValueError("coefficient matrix must be 2 x 2")
        if not np.allclose(a, a.T, atol=1e-13):
            raise ValueError("coefficient matrix must be symmetric")
        ev = np.linalg.eigvalsh(a)
        if ev[0] <= 0:
            raise ValueError("coefficient matrix must be positive definite")
        self.array = 0.5 * (a + a.T)
        self.ellipticity = float(ev[0])
        self.continuity = float(ev[-1])

    @property
    def is_identity(self):
        return np.array_equal(self.array, np.eye(2))

    def __repr__(self):
        return "CoefficientMatrix(%s)" % self.array.tolist()


def _scatter_matrix(space, local_blocks):
    """Assemble (ne, nloc, nloc) element blocks into a CSR matrix."""
    dofs = space.element_dofs
    rows = np.repeat(dofs, space.n_local, axis=1).ravel()
    cols = np.tile(dofs, (1, space.n_local)).ravel()
    mat = sparse.coo_matrix(
        (local_blocks.ravel(), (rows, cols)),
        shape=(space.n_dofs, space.n_dofs))
    return mat.tocsr()


def mass_matrix(space):
    """L2 mass matrix of the space, over all dofs."""
    qp, w = quad_triangle(2 * space.degree)
    tab = space.tabulate(qp)
    ref_block = np.einsum("iq,jq,q->ij", tab, tab, w)
    det = affine_maps(space.tri).det
    return _scatter_matrix(space, det[:, None, None] * ref_block)

def stiffness_matrix(space, coef=None):
    """Diffusion stiffness matrix for a constant SPD coefficient."""
    a = (coef or CoefficientMatrix()).array
    qp, w = quad_triangle(max(0, 2 * (space.degree - 1)))
    gtab = space.tabulate_grad(qp)                       # (nloc, nq, 2)
    m = affine_maps(space.tri)
    phys = np.einsum("eij,lqj->elqi", m.inv_t, gtab)     # physical gradients
    blocks = np.einsum("elqi,ij,emqj,q->elm", phys, a, phys, w)
    return _scatter_matrix(space, blocks * m.det[:, None, None])


def load_vector(space, fn, exactness=DEFAULT_EXACTNESS):
    """Load vector of a callable: entries are integrals of fn times basis."""
    qp, w = quad_triangle(exactness)
    tab = space.tabulate(qp)
    m = affine_maps(space.tri)
    phys = m.push(qp)
    fvals = np.asarray(fn(phys[..., 0], phys[..., 1]), dtype=float)
    local = np.einsum("lq,eq,q->el", tab, fvals, w) * m.det[:, None]
    out = np.zeros(space.n_dofs)
    np.add.at(out, space.element_dofs, local)
    return out


def grad_load_vector(space, vec_fn, coef=None, exactness=DEFAULT_EXACTNESS):
    """Entries are integrals of (coef @ field) dot grad(basis).

    ``vec_fn(x, y)`` must return an array broadcastable to shape
    ``x.shape + (2,)``.
    """
    qp, w = quad_triangle(exactness)
    gtab = space.tabulate_grad(qp)
    m = affine_maps(space.tri)
    phys_g = np.einsum("eij,lqj->elqi", m.inv_t, gtab)
    pts = m.push(qp)
    field = np.asarray(vec_fn(pts[..., 0], pts[..., 1]), dtype=float)
    if coef is not None:
        field = field @ coef.array.T
    local = np.einsum("elqi,eqi,q->el", phys_g, field, w) * m.det[:, None]
    out = np.zeros(space.n_dofs)
    np.add.at(out, space.element_dofs, local)
    return out


def domain_integral(tri, fn, exactness=DEFAULT_EXACTNESS):
    """Integral of a scalar callable over the whole mesh."""
    qp, w = quad_triangle(exactness)
    m = affine_maps(tri)
    pts = m.push(qp)
    vals = np.asarray(fn(pts[..., 0], pts[..., 1]), dtype=float)
    return float(np.einsum("eq,q,e->", vals, w, m.det))


class InteriorSolver:
    """Sparse LU of a matrix restricted to the interior (non-Dirichlet) dofs.

    ``solve`` takes and returns vectors over all dofs; boundary entries of
    the result are zero. Every solve is verified against the interior
    residual and raises if the factorization went bad.
    """

    def __init__(self, matrix, space, residual_tol=1e-8):
        self.space = space
        idx = space.interior_idx
        self._interior = matrix.tocsr()[idx][:, idx].tocsc()
        self._lu = spla.splu(self._interior)
        self._tol = residual_tol

    def solve(self, rhs):
        idx = self.space.interior_idx
        b = rhs[idx]
        x = self._lu.solve(b)
        res = np.linalg.norm(self._interior @ x - b)
        scale = max(np.linalg.norm(b), 1.0)
        if not np.isfinite(res) or res > self._tol * scale:
            raise RuntimeError(
                "interior solve failed the residual check (%.3e)" % res)
        out = np.zeros(self.space.n_dofs)
        out[idx] = x
        return out


class MeshEmbedding:
    """Affine pullback from elements of a refinement to a coarser mesh.

    For each element of ``fine_tri`` this stores the containing element of
    ``coarse_tri`` and the affine map sending fine reference coordinates to
    coarse reference coordinates. ``fine_tri`` must refine ``coarse_tri``.
    """

    def __init__(self, fine_tri, coarse_tri):
        self.fine = fine_tri
        self.coarse = coarse_tri
        ne = fine_tri.element_count
        self.elems = np.empty(ne, dtype=np.int64)
        for k, nid in enumerate(fine_tri.leaf_ids):
            self.elems[k] = coarse_tri.leaf_position(
                coarse_tri.ancestor_leaf(int(nid)))
        mf = affine_maps(fine_tri)
        mc = affine_maps(coarse_tri)
        inv_c = mc.inv[self.elems]
        self.B = np.einsum("eij,ejk->eik", inv_c, mf.jac)
        self.c = np.einsum("eij,ej->ei",
                           inv_c, mf.origin - mc.origin[self.elems])

    def map_ref(self, ref_pts):
        """Coarse reference coordinates of fine reference points, (ne, nq, 2)."""
        return np.einsum("eij,qj->eqi", self.B, ref_pts) + self.c[:, None, :]

    def values(self, f, ref_pts):
        """Values of a coarse-mesh function at fine reference points, (ne, nq)."""
        space = f.space
        ref_c = self.map_ref(ref_pts)
        tab = reference_values(space.degree, ref_c)         # (nloc, ne, nq)
        coeffs = f.coeffs[space.element_dofs[self.elems]]   # (ne, nloc)
        return np.einsum("el,leq->eq", coeffs, tab)

    def gradients(self, f, ref_pts):
        """Physical gradients of a coarse-mesh function, (ne, nq, 2)."""
        space = f.space
        ref_c = self.map_ref(ref_pts)
        gtab = reference_gradients(space.degree, ref_c)     # (nloc, ne, nq, 2)
        coeffs = f.coeffs[space.element_dofs[self.elems]]
        ref_grad = np.einsum("el,leqd->eqd", coeffs, gtab)
        inv_t = affine_maps(self.coarse).inv_t[self.elems]
        return np.einsum("eij,eqj->eqi", inv_t, ref_grad)

    def basis_values(self, space, ref_pts):
        """Coarse-space basis tabulated at fine reference points."""
        return reference_values(space.degree, self.map_ref(ref_pts))


def cross_mass_load(f, target_space, exactness=None):
    """Vector of L2 products of ``f`` with every basis function of a space.

    ``f`` may live on a different mesh of the same forest; the product is
    integrated exactly on the coarsest common refinement. On the same mesh
    this reduces to mass-matrix action when the spaces coincide.
    """
    src_tri = f.space.tri
    tgt_tri = target_space.tri
    if exactness is None:
        exactness = f.space.degree + target_space.degree
    if src_tri == tgt_tri:
        qp, w = quad_triangle(exactness)
        tab_t = target_space.tabulate(qp)
        uvals = f.element_values(qp)
        det = affine_maps(tgt_tri).det
        local = np.einsum("lq,eq,q->el", tab_t, uvals, w) * det[:, None]
        out = np.zeros(target_space.n_dofs)
        np.add.at(out, target_space.element_dofs, local)
        return out

    ccr = coarsest_common_refinement(src_tri, tgt_tri)
    emb_s = MeshEmbedding(ccr, src_tri)
    emb_t = MeshEmbedding(ccr, tgt_tri)
    qp, w = quad_triangle(exactness)
    uvals = emb_s.values(f, qp)                            # (ne_ccr, nq)
    tab_t = emb_t.basis_values(target_space, qp)           # (nloc, ne, nq)
    det = affine_maps(ccr).det
    local = np.einsum("leq,eq,q,e->el", tab_t, uvals, w, det)
    out = np.zeros(target_space.n_dofs)
    np.add.at(out, target_space.element_dofs[emb_t.elems], local)
    return out
