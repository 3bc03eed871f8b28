"""Lagrange finite element spaces of degree 1 and 2 on triangulations.

Reference element is the unit triangle with vertices (0,0), (1,0), (0,1);
barycentric coordinates (l0, l1, l2) = (1 - x - y, x, y). Degree 2 adds one
dof per edge, locally ordered [v0, v1, v2, m01, m12, m20]. All spaces here
carry homogeneous Dirichlet data: a function's boundary dofs are pinned to
zero at construction.

Quadrature is generated, not tabulated: a tensor Gauss-Legendre rule mapped
to the triangle by the Duffy substitution x = u, y = v (1 - u), which is
exact for any requested total polynomial degree.
"""

from __future__ import annotations

import numpy as np

from .mesh import (
    BisectionForest,
    IncompatibleMeshesError,
    MeshError,
    Triangulation,
    is_refinement_of,
    loads_mesh,
    dumps_mesh,
)


class NonNestedTransferError(Exception):
    """Transfer target space does not contain the source space."""


_REF_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


# -- quadrature ---------------------------------------------------------------


def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def quad_triangle(exactness):
    """Quadrature on the reference triangle, exact to total degree ``exactness``.

    Returns ``(points, weights)`` with points of shape (nq, 2); the weights
    sum to 1/2, the reference area.
    """
    if exactness < 0:
        raise ValueError("exactness must be >= 0")
    n = max(1, -(-(exactness + 2) // 2))      # ceil((p + 2) / 2)
    u, wu = _gauss01(n)
    v, wv = _gauss01(n)
    U, V = np.meshgrid(u, v, indexing="ij")
    WU, WV = np.meshgrid(wu, wv, indexing="ij")
    pts = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
    w = (WU * WV * (1.0 - U)).ravel()
    return pts, w


def quad_edge(exactness):
    """Gauss rule on [0, 1], exact to degree ``exactness``; weights sum to 1."""
    if exactness < 0:
        raise ValueError("exactness must be >= 0")
    return _gauss01(max(1, -(-(exactness + 1) // 2)))


# -- reference basis ----------------------------------------------------------


def _p1_values(pts):
    """P1 basis at reference points of any shape (..., 2) -> (3, ...)."""
    x, y = pts[..., 0], pts[..., 1]
    return np.stack([1.0 - x - y, x, y])


def _p1_grads(pts):
    """P1 reference gradients, shape (3, ..., 2); they are constant."""
    base = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    shape = (3,) + pts.shape[:-1] + (2,)
    return np.broadcast_to(base.reshape((3,) + (1,) * (pts.ndim - 1) + (2,)),
                           shape).copy()


def _p2_values(pts):
    l = _p1_values(pts)
    vals = np.empty((6,) + pts.shape[:-1])
    for i in range(3):
        vals[i] = l[i] * (2.0 * l[i] - 1.0)
    for k, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
        vals[3 + k] = 4.0 * l[a] * l[b]
    return vals


def _p2_grads(pts):
    l = _p1_values(pts)
    dl = _p1_grads(pts)
    g = np.empty((6,) + pts.shape[:-1] + (2,))
    for i in range(3):
        g[i] = (4.0 * l[i] - 1.0)[..., None] * dl[i]
    for k, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
        g[3 + k] = 4.0 * (l[a][..., None] * dl[b] + l[b][..., None] * dl[a])
    return g


def reference_values(degree, pts):
    """Reference basis values for a degree, points of shape (..., 2)."""
    return (_p1_values if degree == 1 else _p2_values)(pts)


def reference_gradients(degree, pts):
    return (_p1_grads if degree == 1 else _p2_grads)(pts)


# -- element geometry ---------------------------------------------------------


class AffineMaps:
    """Affine reference-to-physical maps of all elements of one mesh."""

    def __init__(self, tri):
        p = tri.points[tri.tris]
        self.origin = p[:, 0]
        J = np.empty((tri.element_count, 2, 2))
        J[:, :, 0] = p[:, 1] - p[:, 0]
        J[:, :, 1] = p[:, 2] - p[:, 0]
        self.jac = J
        self.det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        inv = np.empty_like(J)
        inv[:, 0, 0] = J[:, 1, 1]
        inv[:, 1, 1] = J[:, 0, 0]
        inv[:, 0, 1] = -J[:, 0, 1]
        inv[:, 1, 0] = -J[:, 1, 0]
        self.inv = inv / self.det[:, None, None]
        self.inv_t = np.swapaxes(self.inv, 1, 2)

    def push(self, ref_pts):
        """Physical coordinates of reference points, shape (ne, nq, 2)."""
        return self.origin[:, None, :] + np.einsum(
            "eij,qj->eqi", self.jac, ref_pts)


def affine_maps(tri):
    maps = getattr(tri, "_affine_cache", None)
    if maps is None:
        maps = AffineMaps(tri)
        tri._affine_cache = maps
    return maps


# -- the space ----------------------------------------------------------------


class FeSpace:
    """Continuous Lagrange space of degree 1 or 2 with zero boundary trace.

    Attributes
    ----------
    tri : Triangulation
    degree : int
    n_dofs : int
    element_dofs : ndarray, shape (ne, nloc)
        Global dof indices per element; nloc is 3 or 6.
    boundary_dof_mask : boolean ndarray over dofs
    interior_idx : indices of the non-boundary dofs
    dof_points : ndarray, shape (n_dofs, 2)
        The Lagrange node of each dof.
    """

    def __init__(self, tri, degree):
        if degree not in (1, 2):
            raise ValueError("degree must be 1 or 2")
        self.tri = tri
        self.degree = int(degree)
        nv = tri.vertex_count

        if degree == 1:
            self.n_dofs = nv
            self.element_dofs = tri.tris.copy()
            self.boundary_dof_mask = tri.boundary_vertex_mask.copy()
            self.dof_points = tri.points.copy()
        else:
            na = len(tri.all_edges)
            self.n_dofs = nv + na
            self.element_dofs = np.hstack([tri.tris, nv + tri.element_edges])
            mask = np.zeros(self.n_dofs, dtype=bool)
            mask[:nv] = tri.boundary_vertex_mask
            mask[nv + tri.boundary_edges_idx] = True
            self.boundary_dof_mask = mask
            mids = 0.5 * (tri.points[tri.all_edges[:, 0]]
                          + tri.points[tri.all_edges[:, 1]])
            self.dof_points = np.vstack([tri.points, mids])

        self.interior_idx = np.flatnonzero(~self.boundary_dof_mask)
        self.n_local = self.element_dofs.shape[1]
        self._tab_cache = {}

    def __repr__(self):
        return "FeSpace(degree=%d, %d dofs, %d elements)" % (
            self.degree, self.n_dofs, self.tri.element_count)

    @property
    def maps(self):
        return affine_maps(self.tri)

    def tabulate(self, ref_pts):
        """Basis values at reference points, shape (nloc, nq). Cached."""
        key = ("v", ref_pts.tobytes())
        out = self._tab_cache.get(key)
        if out is None:
            out = (_p1_values if self.degree == 1 else _p2_values)(ref_pts)
            self._tab_cache[key] = out
        return out

    def tabulate_grad(self, ref_pts):
        """Reference basis gradients at reference points, (nloc, nq, 2). Cached."""
        key = ("g", ref_pts.tobytes())
        out = self._tab_cache.get(key)
        if out is None:
            out = (_p1_grads if self.degree == 1 else _p2_grads)(ref_pts)
            self._tab_cache[key] = out
        return out

    def local_to_reference(self, elems, phys_pts):
        """Reference coordinates of physical points inside given elements."""
        m = self.maps
        d = phys_pts - m.origin[elems]
        return np.einsum("eij,ej->ei", m.inv[elems], d)


class FeFunction:
    """A finite element function: a space plus a coefficient vector.

    Boundary dofs are forced to zero on construction (the spaces model
    homogeneous Dirichlet conditions).
    """

    def __init__(self, space, coeffs=None):
        self.space = space
        if coeffs is None:
            self.coeffs = np.zeros(space.n_dofs)
        else:
            coeffs = np.asarray(coeffs, dtype=float)
            if coeffs.shape != (space.n_dofs,):
                raise ValueError("coefficient vector has wrong length")
            self.coeffs = coeffs.copy()
            self.coeffs[space.boundary_dof_mask] = 0.0

    def copy(self):
        return FeFunction(self.space, self.coeffs)

    def element_coeffs(self):
        """Coefficients gathered per element, shape (ne, nloc)."""
        return self.coeffs[self.space.element_dofs]

    def element_values(self, ref_pts):
        """Values at reference points in every element, shape (ne, nq)."""
        tab = self.space.tabulate(ref_pts)
        return self.element_coeffs() @ tab

    def element_gradients(self, ref_pts):
        """Physical gradients at reference points, shape (ne, nq, 2)."""
        gtab = self.space.tabulate_grad(ref_pts)            # (nloc, nq, 2)
        ref = np.einsum("el,lqd->eqd", self.element_coeffs(), gtab)
        return np.einsum("eij,eqj->eqi", self.space.maps.inv_t, ref)

    def evaluate(self, x, y):
        """Point value by mesh search; for sampling, not inner loops."""
        k = self.space.tri.locate(x, y)
        ref = self.space.local_to_reference(
            np.array([k]), np.array([[x, y]]))
        tab = (_p1_values if self.space.degree == 1 else _p2_values)(ref)
        return float(self.coeffs[self.space.element_dofs[k]] @ tab[:, 0])

    def evaluate_many(self, pts):
        return np.array([self.evaluate(x, y) for x, y in np.asarray(pts, float)])

    def __add__(self, other):
        self._check_same_space(other)
        out = self.copy()
        out.coeffs += other.coeffs
        return out

    def __sub__(self, other):
        self._check_same_space(other)
        out = self.copy()
        out.coeffs -= other.coeffs
        return out

    def __mul__(self, scalar):
        out = self.copy()
        out.coeffs *= float(scalar)
        return out

    __rmul__ = __mul__

    def _check_same_space(self, other):
        if other.space is not self.space:
            raise ValueError("functions live in different spaces")


def interpolate(fn, space):
    """Lagrange interpolant of a callable ``fn(x, y)`` (vectorized over arrays)."""
    pts = space.dof_points
    vals = np.asarray(fn(pts[:, 0], pts[:, 1]), dtype=float)
    if vals.shape != (space.n_dofs,):
        vals = np.broadcast_to(vals, (space.n_dofs,)).copy()
    return FeFunction(space, vals)


def transfer(f, space):
    """Re-express ``f`` exactly in ``space``.

    Exact only when the target mesh refines the source mesh and the target
    degree is at least the source degree; anything else raises
    ``NonNestedTransferError``.
    """
    src = f.space
    if space.tri.forest is not src.tri.forest:
        raise IncompatibleMeshesError("spaces live on unrelated meshes")
    if space.degree < src.degree or not is_refinement_of(space.tri, src.tri):
        raise NonNestedTransferError(
            "target space does not contain the source space")
    if space is src:
        return f.copy()

    # evaluate the source function at the target's Lagrange nodes, walking
    # the forest from each target element down from its source ancestor
    tgt_tri, src_tri = space.tri, src.tri
    node_pts = _REF_CORNERS if space.degree == 1 else np.vstack(
        [_REF_CORNERS, 0.5 * (_REF_CORNERS + np.roll(_REF_CORNERS, -1, axis=0))])
    phys = affine_maps(tgt_tri).push(node_pts)              # (ne_t, nloc, 2)

    src_elem = np.empty(tgt_tri.element_count, dtype=np.int64)
    for k, nid in enumerate(tgt_tri.leaf_ids):
        src_elem[k] = src_tri.leaf_position(src_tri.ancestor_leaf(int(nid)))

    nloc = phys.shape[1]
    flat = phys.reshape(-1, 2)
    elems = np.repeat(src_elem, nloc)
    ref = src.local_to_reference(elems, flat)
    tab = (_p1_values if src.degree == 1 else _p2_values)(ref)  # (nloc_s, n)
    vals = np.einsum("nl,ln->n", f.coeffs[src.element_dofs[elems]], tab)

    out = np.zeros(space.n_dofs)
    out[space.element_dofs.ravel()] = vals   # repeated writes agree, f is continuous
    return FeFunction(space, out)


# -- serialization -------------------------------------------------------------


def dumps_fefunction(f):
    """Text form of a function: degree header, embedded mesh, coefficients."""
    lines = ["parabest-fefun 1", "degree %d" % f.space.degree]
    mesh_text = dumps_mesh(f.space.tri)
    lines.append("meshlines %d" % len(mesh_text.splitlines()))
    body = [mesh_text.rstrip("\n")]
    body.append("coeffs %d" % f.space.n_dofs)
    body.extend("c %r" % float(c) for c in f.coeffs)
    return "\n".join(lines + body) + "\n"


def loads_fefunction(text, forest=None, space=None):
    """Rebuild a function from ``dumps_fefunction`` output.

    ``space`` short-circuits mesh reconstruction when the caller already has
    the matching space (its mesh must equal the serialized one).
    """
    lines = text.splitlines()
    if lines[0].split() != ["parabest-fefun", "1"]:
        raise MeshError("not a parabest function file")
    degree = int(lines[1].split()[1])
    n_mesh = int(lines[2].split()[1])
    mesh_text = "\n".join(lines[3:3 + n_mesh])
    rest = lines[3 + n_mesh:]
    n = int(rest[0].split()[1])
    coeffs = np.array([float(ln.split()[1]) for ln in rest[1:1 + n]])

    if space is not None:
        if space.degree != degree or space.n_dofs != n:
            raise MeshError("serialized function does not match given space")
        return FeFunction(space, coeffs)
    tri = loads_mesh(mesh_text, forest=forest)
    sp = FeSpace(tri, degree)
    if sp.n_dofs != n:
        raise MeshError("coefficient count does not match the mesh")
    return FeFunction(sp, coeffs)


def dump_fefunction(f, path):
    with open(path, "w") as fh:
        fh.write(dumps_fefunction(f))


def load_fefunction(path, forest=None, space=None):
    with open(path) as fh:
        return loads_fefunction(fh.read(), forest=forest, space=space)
