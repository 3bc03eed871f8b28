"""Conforming triangulations of a square under newest-vertex bisection.

All meshes produced here descend from one structured macro triangulation of a
square and share a *bisection forest*: a registry of every triangle that has
ever been created, linked parent to children. A triangulation is an immutable
antichain (a "front") of forest nodes covering the domain. Because element
and vertex identity live in the shared forest, relations between two meshes
(containment, common refinements and coarsenings, edge matching) are pure
integer combinatorics; no floating-point geometry is compared.

Conventions
-----------
* An element is stored as a vertex triple ``(v0, v1, v2)`` where ``(v0, v1)``
  is its refinement edge and ``v2`` is the newest vertex. Bisection inserts
  the midpoint ``m`` of ``(v0, v1)`` and yields children ``(v2, v0, m)`` and
  ``(v1, v2, m)``, which keeps counter-clockwise orientation and the standard
  newest-vertex recursion.
* The macro grid splits every cell with one diagonal (directions alternate in
  a checkerboard) and the diagonal, the longest edge, is the refinement edge
  of both triangles of its cell, so recursive conformity closure terminates.
"""

from __future__ import annotations

import numpy as np


class MeshError(Exception):
    """Invalid mesh data or a failed mesh operation."""


class IncompatibleMeshesError(MeshError):
    """Two meshes do not descend from the same bisection forest."""


_LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


def _edge_key(a, b):
    return (a, b) if a < b else (b, a)


class BisectionForest:
    """Shared vertex/element registry for all meshes over one macro grid.

    Not usually constructed directly; ``square_macro`` builds the forest and
    returns its root triangulation.
    """

    def __init__(self, lo, hi, subdivisions):
        if subdivisions < 1:
            raise ValueError("subdivisions must be >= 1")
        if not hi > lo:
            raise ValueError("domain must satisfy hi > lo")
        self.lo = float(lo)
        self.hi = float(hi)
        self.subdivisions = int(subdivisions)
        self.macro_id = "square %r %r %d" % (self.lo, self.hi, self.subdivisions)

        s = self.subdivisions
        grid = np.linspace(self.lo, self.hi, s + 1)
        self._vertices = [(grid[i], grid[j]) for j in range(s + 1) for i in range(s + 1)]
        self._midpoint = {}
        self.midpoint_parents = {}
        self._coords_cache = None

        def vid(i, j):
            return j * (s + 1) + i

        # Two triangles per cell, alternating diagonal direction, with the
        # diagonal (longest edge) as the refinement edge of both triangles.
        self.node_verts = []
        self.node_level = []
        self.node_parent = []
        self.node_children = []
        self.roots = []
        self._root_grid = {}
        for j in range(s):
            for i in range(s):
                a, b = vid(i, j), vid(i + 1, j)
                c, d = vid(i + 1, j + 1), vid(i, j + 1)
                if (i + j) % 2 == 0:
                    pair = ((c, a, b), (a, c, d))   # diagonal a-c
                else:
                    pair = ((b, d, a), (d, b, c))   # diagonal b-d
                ids = []
                for verts in pair:
                    ids.append(self._new_node(verts, 0, -1))
                self.roots.extend(ids)
                self._root_grid[(i, j)] = tuple(ids)

    # -- registry internals -------------------------------------------------

    def _new_node(self, verts, level, parent):
        nid = len(self.node_verts)
        self.node_verts.append(verts)
        self.node_level.append(level)
        self.node_parent.append(parent)
        self.node_children.append(None)
        return nid

    def midpoint_id(self, a, b):
        """Vertex id of the midpoint of vertices ``a`` and ``b``, interning it."""
        key = _edge_key(a, b)
        vid = self._midpoint.get(key)
        if vid is None:
            xa, ya = self._vertices[a]
            xb, yb = self._vertices[b]
            vid = len(self._vertices)
            self._vertices.append((0.5 * (xa + xb), 0.5 * (ya + yb)))
            self._midpoint[key] = vid
            self.midpoint_parents[vid] = key
            self._coords_cache = None
        return vid

    def existing_midpoint(self, a, b):
        """Vertex id of the midpoint of ``(a, b)`` if it was ever created."""
        return self._midpoint.get(_edge_key(a, b))

    def children_of(self, nid):
        """Child node ids of ``nid``, creating them on first use."""
        kids = self.node_children[nid]
        if kids is None:
            v0, v1, v2 = self.node_verts[nid]
            m = self.midpoint_id(v0, v1)
            lvl = self.node_level[nid] + 1
            c0 = self._new_node((v2, v0, m), lvl, nid)
            c1 = self._new_node((v1, v2, m), lvl, nid)
            kids = (c0, c1)
            self.node_children[nid] = kids
        return kids

    def coords(self):
        """All forest vertex coordinates as an ``(nv, 2)`` array."""
        if self._coords_cache is None or len(self._coords_cache) != len(self._vertices):
            self._coords_cache = np.asarray(self._vertices, dtype=float)
        return self._coords_cache

    def macro_roots_at(self, x, y):
        """Root node ids of the macro cell containing the point ``(x, y)``."""
        s = self.subdivisions
        w = (self.hi - self.lo) / s
        i = min(max(int((x - self.lo) / w), 0), s - 1)
        j = min(max(int((y - self.lo) / w), 0), s - 1)
        return self._root_grid[(i, j)]


class Triangulation:
    """Immutable conforming triangulation: a front of bisection-forest nodes.

    Attributes
    ----------
    forest : BisectionForest
    leaf_ids : ndarray of int
        Sorted forest node ids; row ``k`` of every per-element array refers
        to ``leaf_ids[k]``.
    points : ndarray, shape (nv, 2)
        Coordinates of the vertices used by this mesh.
    tris : ndarray, shape (ne, 3)
        Local vertex indices per element in forest ``(v0, v1, v2)`` order.
    vertex_gids : ndarray of int
        Forest-global vertex id of each local vertex.
    all_edges, interior_edges, boundary_edges : local sorted vertex pairs
    element_edges : ndarray, shape (ne, 3)
        Index into ``all_edges``, aligned with local edges (01, 12, 20).
    interior_edge_elems : ndarray, shape (n_interior, 2)
        The two elements adjacent to each interior edge.
    """

    def __init__(self, forest, front):
        self.forest = forest
        self.leaf_ids = np.asarray(sorted(front), dtype=np.int64)
        if self.leaf_ids.size == 0:
            raise MeshError("empty triangulation front")
        self.leaf_set = frozenset(int(n) for n in self.leaf_ids)

        verts_g = np.asarray([forest.node_verts[n] for n in self.leaf_ids], dtype=np.int64)
        self.vertex_gids = np.unique(verts_g)
        self.points = forest.coords()[self.vertex_gids]
        self.tris = np.searchsorted(self.vertex_gids, verts_g)
        self.levels = np.asarray([forest.node_level[n] for n in self.leaf_ids])

        self._build_edges()
        self._validate()
        self._leaf_pos = None
        self._diams = None

    # -- construction helpers ------------------------------------------------

    def _build_edges(self):
        ne = self.tris.shape[0]
        pairs = np.empty((3 * ne, 2), dtype=np.int64)
        for k, (a, b) in enumerate(_LOCAL_EDGES):
            pairs[k * ne:(k + 1) * ne, 0] = self.tris[:, a]
            pairs[k * ne:(k + 1) * ne, 1] = self.tris[:, b]
        pairs.sort(axis=1)
        self.all_edges, inverse, counts = np.unique(
            pairs, axis=0, return_inverse=True, return_counts=True)
        self.element_edges = inverse.reshape(3, ne).T
        self._edge_counts = counts

        self.interior_edges_idx = np.flatnonzero(counts == 2)
        self.boundary_edges_idx = np.flatnonzero(counts == 1)
        self.interior_edges = self.all_edges[self.interior_edges_idx]
        self.boundary_edges = self.all_edges[self.boundary_edges_idx]

        # adjacency: for interior edges the two elements, in leaf order
        order = np.argsort(inverse, kind="stable")
        elem_of_row = order % ne
        starts = np.searchsorted(inverse[order], np.arange(len(self.all_edges)))
        adj = np.full((len(self.all_edges), 2), -1, dtype=np.int64)
        adj[:, 0] = elem_of_row[starts]
        has2 = counts == 2
        adj[has2, 1] = elem_of_row[starts[has2] + 1]
        self._edge_elems = adj
        self.interior_edge_elems = adj[self.interior_edges_idx]

        bv = np.unique(self.boundary_edges)
        mask = np.zeros(len(self.points), dtype=bool)
        mask[bv] = True
        self.boundary_vertex_mask = mask

    def _validate(self):
        if np.any(self._edge_counts > 2):
            raise MeshError("edge shared by more than two elements")
        p = self.points
        v0, v1, v2 = (p[self.tris[:, k]] for k in range(3))
        cross = (v1[:, 0] - v0[:, 0]) * (v2[:, 1] - v0[:, 1]) \
            - (v1[:, 1] - v0[:, 1]) * (v2[:, 0] - v0[:, 0])
        if np.any(cross <= 0.0):
            raise MeshError("degenerate or mis-oriented element")
        lo, hi = self.forest.lo, self.forest.hi
        for e in self.boundary_edges:
            pa, pb = p[e[0]], p[e[1]]
            on_side = any(pa[k] == pb[k] and pa[k] in (lo, hi) for k in range(2))
            if not on_side:
                raise MeshError(
                    "interior edge with a single adjacent element (hanging vertex)")

    # -- basic queries ---------------------------------------------------------

    @property
    def element_count(self):
        return self.tris.shape[0]

    @property
    def vertex_count(self):
        return self.points.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Triangulation):
            return NotImplemented
        return self.forest is other.forest and self.leaf_set == other.leaf_set

    def __hash__(self):
        return hash((id(self.forest), self.leaf_set))

    def __repr__(self):
        return "Triangulation(%d elements, %d vertices)" % (
            self.element_count, self.vertex_count)

    def element_diameters(self):
        """Diameter (longest edge) of every element, shape ``(ne,)``."""
        if self._diams is None:
            p = self.points
            d = np.zeros(self.element_count)
            for a, b in _LOCAL_EDGES:
                d = np.maximum(d, np.linalg.norm(p[self.tris[:, a]] - p[self.tris[:, b]], axis=1))
            self._diams = d
        return self._diams

    def element_areas(self):
        p = self.points
        v0, v1, v2 = (p[self.tris[:, k]] for k in range(3))
        return 0.5 * np.abs((v1[:, 0] - v0[:, 0]) * (v2[:, 1] - v0[:, 1])
                            - (v1[:, 1] - v0[:, 1]) * (v2[:, 0] - v0[:, 0]))

    def leaf_position(self, nid):
        """Row index of forest node ``nid`` in this mesh's element arrays."""
        if self._leaf_pos is None:
            self._leaf_pos = {int(n): k for k, n in enumerate(self.leaf_ids)}
        return self._leaf_pos[int(nid)]

    def interior_edge_keys(self):
        """Interior edges as a set of sorted forest-global vertex-id pairs."""
        g = self.vertex_gids[self.interior_edges]
        return {(int(a), int(b)) for a, b in g}

    def ancestor_leaf(self, nid):
        """The node of this front that contains forest node ``nid``."""
        n = int(nid)
        while n != -1:
            if n in self.leaf_set:
                return n
            n = self.forest.node_parent[n]
        raise IncompatibleMeshesError("node %d is not below this front" % nid)

    def contains_point(self, nid, x, y, tol=1e-12):
        v0, v1, v2 = (self.forest.coords()[v] for v in self.forest.node_verts[nid])
        det = (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v1[1] - v0[1]) * (v2[0] - v0[0])
        l1 = ((x - v0[0]) * (v2[1] - v0[1]) - (y - v0[1]) * (v2[0] - v0[0])) / det
        l2 = ((v1[0] - v0[0]) * (y - v0[1]) - (v1[1] - v0[1]) * (x - v0[0])) / det
        scale = tol
        return l1 >= -scale and l2 >= -scale and l1 + l2 <= 1.0 + scale

    def locate(self, x, y, tol=1e-12):
        """Element row index containing point ``(x, y)`` via a forest walk."""
        lo, hi = self.forest.lo, self.forest.hi
        if not (lo - tol <= x <= hi + tol and lo - tol <= y <= hi + tol):
            raise MeshError("point (%g, %g) outside the domain" % (x, y))
        node = None
        for r in self.forest.macro_roots_at(x, y):
            if self.contains_point(r, x, y, tol):
                node = r
                break
        if node is None:
            # numerically on a cell boundary: scan all roots
            for r in self.forest.roots:
                if self.contains_point(r, x, y, tol):
                    node = r
                    break
        if node is None:
            raise MeshError("point location failed at (%g, %g)" % (x, y))
        while node not in self.leaf_set:
            c0, c1 = self.forest.node_children[node]
            node = c0 if self.contains_point(c0, x, y, tol) else c1
        return self.leaf_position(node)


# -- macro construction and refinement ----------------------------------------


def square_macro(lo=-1.0, hi=1.0, subdivisions=1):
    """Structured macro triangulation of the square ``[lo, hi]^2``.

    Each of the ``subdivisions**2`` grid cells is split by one diagonal into
    two right triangles (diagonal direction alternating in a checkerboard),
    and the diagonal is the refinement edge of both.
    """
    forest = BisectionForest(lo, hi, subdivisions)
    return Triangulation(forest, forest.roots)


def _refine_front(forest, front, targets, edge_map=None):
    """Bisect every node in ``targets`` within ``front``, with closure.

    ``front`` is mutated. ``edge_map`` maps a sorted global vertex pair to the
    set of front nodes having it as an edge; it is built when not supplied and
    kept consistent across splits.
    """
    if edge_map is None:
        edge_map = {}
        for n in front:
            _edge_map_add(forest, edge_map, n)

    budget = 64 * (len(front) + len(targets) + 16)
    for target in targets:
        stack = [target]
        while stack:
            if budget <= 0:
                raise MeshError("conformity closure did not terminate")
            budget -= 1
            k = stack[-1]
            if k not in front:          # already split while closing a patch
                stack.pop()
                continue
            v0, v1, _ = forest.node_verts[k]
            key = _edge_key(v0, v1)
            nbs = edge_map.get(key, ())
            nb = None
            for cand in nbs:
                if cand != k:
                    nb = cand
                    break
            if nb is not None:
                w0, w1, _ = forest.node_verts[nb]
                if _edge_key(w0, w1) != key:
                    stack.append(nb)    # make the neighbour compatible first
                    continue
            _split_in_front(forest, front, edge_map, k)
            if nb is not None:
                _split_in_front(forest, front, edge_map, nb)
            stack.pop()
    return front


def _edge_map_add(forest, edge_map, nid):
    v = forest.node_verts[nid]
    for a, b in _LOCAL_EDGES:
        edge_map.setdefault(_edge_key(v[a], v[b]), set()).add(nid)


def _edge_map_remove(forest, edge_map, nid):
    v = forest.node_verts[nid]
    for a, b in _LOCAL_EDGES:
        s = edge_map.get(_edge_key(v[a], v[b]))
        if s is not None:
            s.discard(nid)


def _split_in_front(forest, front, edge_map, nid):
    front.discard(nid)
    _edge_map_remove(forest, edge_map, nid)
    for c in forest.children_of(nid):
        front.add(c)
        _edge_map_add(forest, edge_map, c)


def bisect_marked(tri, marked):
    """Refine by newest-vertex bisection of the marked elements.

    Parameters
    ----------
    tri : Triangulation
    marked : iterable of int
        Element row indices of ``tri``. Conformity closure may refine
        additional elements.

    Returns
    -------
    Triangulation
        ``tri`` itself when ``marked`` is empty.
    """
    marked = list(marked)
    if not marked:
        return tri
    ne = tri.element_count
    targets = []
    for m in marked:
        m = int(m)
        if not 0 <= m < ne:
            raise ValueError("marked element index %d out of range" % m)
        targets.append(int(tri.leaf_ids[m]))
    front = set(tri.leaf_set)
    _refine_front(tri.forest, front, targets)
    return Triangulation(tri.forest, front)


def uniform_refine(tri, levels=1):
    """Refine every element ``2 * levels`` times (element count x4 per level)."""
    if levels < 0:
        raise ValueError("levels must be >= 0")
    if levels == 0:
        return tri
    front = set(tri.leaf_set)
    for _ in range(2 * levels):
        _refine_front(tri.forest, front, list(front))
    return Triangulation(tri.forest, front)


# -- mesh algebra ---------------------------------------------------------------


def _check_same_forest(a, b):
    if a.forest is not b.forest:
        raise IncompatibleMeshesError(
            "meshes do not share a bisection forest; build them from the same "
            "macro triangulation (or load them into one forest)")


def is_refinement_of(fine, coarse):
    """True when every element of ``fine`` is contained in one of ``coarse``."""
    _check_same_forest(fine, coarse)
    parent = fine.forest.node_parent
    for n in fine.leaf_ids:
        m = int(n)
        while m != -1 and m not in coarse.leaf_set:
            m = parent[m]
        if m == -1:
            return False
    return True

def finest_common_coarsening(a, b):
    """The finest mesh that both ``a`` and ``b`` refine (meshsize = max)."""
    _check_same_forest(a, b)
    forest = a.forest
    out = []
    stack = list(forest.roots)
    while stack:
        n = stack.pop()
        if n in a.leaf_set or n in b.leaf_set:
            out.append(n)
        else:
            stack.extend(forest.node_children[n])
    return Triangulation(forest, out)


def coarsest_common_refinement(a, b):
    """The coarsest mesh refining both ``a`` and ``b`` (meshsize = min)."""
    _check_same_forest(a, b)
    forest = a.forest
    out = []

    def collect(front, n):
        stack = [n]
        while stack:
            m = stack.pop()
            if m in front:
                out.append(m)
            else:
                stack.extend(forest.node_children[m])

    stack = list(forest.roots)
    while stack:
        n = stack.pop()
        in_a = n in a.leaf_set
        in_b = n in b.leaf_set
        if in_a and in_b:
            out.append(n)
        elif in_a:
            collect(b.leaf_set, n)
        elif in_b:
            collect(a.leaf_set, n)
        else:
            stack.extend(forest.node_children[n])
    return Triangulation(forest, out)


def coarsest_common_refinement_many(meshes):
    """The coarsest mesh refining every mesh of a nonempty sequence."""
    meshes = list(meshes)
    out = meshes[0]
    for m in meshes[1:]:
        out = coarsest_common_refinement(out, m)
    return out


def segment_within_edges(forest, edge_keys, a, b):
    """Whether the vertex segment ``(a, b)`` lies inside one of ``edge_keys``.

    ``edge_keys`` is a set of sorted vertex-id pairs denoting segments (for
    instance the interior edges of some mesh). The test is combinatorial:
    the segment is repeatedly extended through the forest's midpoint
    ancestry, so it succeeds exactly when ``(a, b)`` is a dyadic piece of a
    listed segment, with no floating-point geometry involved.
    """
    seen = set()
    stack = [_edge_key(a, b)]
    while stack:
        e = stack.pop()
        if e in seen:
            continue
        seen.add(e)
        if e in edge_keys:
            return True
        p, q = e
        par_q = forest.midpoint_parents.get(q)
        if par_q is not None and p in par_q:
            stack.append(_edge_key(p, par_q[0] if par_q[1] == p else par_q[1]))
        par_p = forest.midpoint_parents.get(p)
        if par_p is not None and q in par_p:
            stack.append(_edge_key(q, par_p[0] if par_p[1] == q else par_p[1]))
        if len(seen) > 4096:
            raise MeshError("runaway segment ancestry walk")
    return False


def generation_distance(a, b):
    """Largest number of bisections separating the two meshes locally.

    Zero for equal meshes; ``2 * levels`` between a mesh and its uniform
    refinement. Exposed as the diagnostic the mesh-change interpolation
    constant would depend on.
    """
    ccr = coarsest_common_refinement(a, b)
    fcc = finest_common_coarsening(a, b)
    level = a.forest.node_level
    worst = 0
    for n in ccr.leaf_ids:
        m = fcc.ancestor_leaf(int(n))
        worst = max(worst, level[int(n)] - level[m])
    return worst


class EdgeSets:
    """Interior-edge bookkeeping for a pair of meshes.

    Edges are identified combinatorially, as sorted pairs of forest-global
    vertex ids. ``common`` holds segments that are a whole edge of *both*
    meshes, ``union`` every segment that is an edge of at least one, and
    ``changed = union - common``.
    """

    def __init__(self, prev, cur):
        _check_same_forest(prev, cur)
        prev_keys = prev.interior_edge_keys()
        cur_keys = cur.interior_edge_keys()
        self.common = frozenset(prev_keys & cur_keys)
        self.union = frozenset(prev_keys | cur_keys)
        self.changed = frozenset(self.union - self.common)


def edge_sets(prev, cur):
    """Common / union / changed interior-edge sets of two compatible meshes."""
    return EdgeSets(prev, cur)


class MeshSize:
    """Piecewise-constant meshsize function ``h(x) = diam(K)`` of a mesh."""

    def __init__(self, tri):
        self.tri = tri
        self.per_element = tri.element_diameters()

    @property
    def max(self):
        return float(self.per_element.max())

    @property
    def min(self):
        return float(self.per_element.min())

    def value_at(self, x, y):
        return float(self.per_element[self.tri.locate(x, y)])


def meshsize(tri):
    return MeshSize(tri)


def check_conformity(tri):
    """Raise ``MeshError`` if the mesh is not conforming; otherwise return stats.

    Checks: every edge is shared by at most two elements; every single-element
    edge lies on the boundary of the square (this rules out hanging vertices);
    all elements are positively oriented with nonzero area.
    """
    tri._validate()
    return {
        "elements": tri.element_count,
        "vertices": tri.vertex_count,
        "interior_edges": int(len(tri.interior_edges_idx)),
        "boundary_edges": int(len(tri.boundary_edges_idx)),
    }


# -- text serialization -----------------------------------------------------------


def dumps_mesh(tri):
    """Serialize a triangulation to exact, line-oriented text.

    The file stores the ancestry closure of the front: every leaf plus all of
    its ancestors, so the bisection history replays on load. Vertex lines are
    ``v x y`` (full precision), element lines ``e i j k level parent`` with
    ``parent`` a file-element index or -1. Leaves are exactly the elements no
    other line names as parent.
    """
    forest = tri.forest
    nodes = set()
    for n in tri.leaf_ids:
        m = int(n)
        while m != -1 and m not in nodes:
            nodes.add(m)
            m = forest.node_parent[m]
    order = sorted(nodes, key=lambda n: (forest.node_level[n], n))
    file_index = {n: k for k, n in enumerate(order)}

    vgids = sorted({v for n in order for v in forest.node_verts[n]})
    vmap = {g: k for k, g in enumerate(vgids)}
    coords = forest.coords()

    lines = ["parabest-mesh 1"]
    lines.append("macro %s" % forest.macro_id)
    lines.append("counts %d %d" % (len(vgids), len(order)))
    for g in vgids:
        lines.append("v %r %r" % (float(coords[g][0]), float(coords[g][1])))
    for n in order:
        i, j, k = (vmap[v] for v in forest.node_verts[n])
        p = forest.node_parent[n]
        lines.append("e %d %d %d %d %d" % (
            i, j, k, forest.node_level[n], file_index[p] if p != -1 else -1))
    return "\n".join(lines) + "\n"


def dump_mesh(tri, path):
    with open(path, "w") as fh:
        fh.write(dumps_mesh(tri))


def loads_mesh(text, forest=None):
    """Rebuild a triangulation from ``dumps_mesh`` output.

    With ``forest`` given, the mesh is replayed into that forest (its macro
    recipe must match), which makes the result compatible with other meshes
    from the same forest. Otherwise a fresh forest is created.
    """
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["parabest-mesh", "1"]:
        raise MeshError("not a parabest mesh file")
    if not lines[1].startswith("macro square "):
        raise MeshError("missing macro header")
    _, _, lo_s, hi_s, sub_s = lines[1].split()
    lo, hi, sub = float(lo_s), float(hi_s), int(sub_s)
    nv, ne = (int(x) for x in lines[2].split()[1:])

    vlines = lines[3:3 + nv]
    elines = lines[3 + nv:3 + nv + ne]
    if len(vlines) != nv or len(elines) != ne:
        raise MeshError("truncated mesh file")
    fcoords = []
    for ln in vlines:
        parts = ln.split()
        if parts[0] != "v":
            raise MeshError("malformed vertex line: %r" % ln)
        fcoords.append((float(parts[1]), float(parts[2])))

    if forest is None:
        forest = BisectionForest(lo, hi, sub)
    elif forest.macro_id != BisectionForest(lo, hi, sub).macro_id:
        raise IncompatibleMeshesError("mesh file macro %r does not match forest %r"
                                      % ((lo, hi, sub), forest.macro_id))

    coords = {}
    for k, r in enumerate(forest.roots):
        key = frozenset(tuple(forest.coords()[v]) for v in forest.node_verts[r])
        coords.setdefault(key, []).append(r)

    node_of = {}
    has_child = [False] * ne
    rows = []
    for ln in elines:
        parts = ln.split()
        if parts[0] != "e" or len(parts) != 6:
            raise MeshError("malformed element line: %r" % ln)
        rows.append(tuple(int(x) for x in parts[1:]))

    for fe, (i, j, k, level, parent) in enumerate(rows):
        tri_coords = (fcoords[i], fcoords[j], fcoords[k])
        if parent == -1:
            if level != 0:
                raise MeshError("root element with nonzero level")
            key = frozenset(tri_coords)
            cands = coords.get(key, [])
            match = None
            for r in cands:
                rc = tuple(tuple(forest.coords()[v]) for v in forest.node_verts[r])
                if rc == tri_coords:
                    match = r
                    break
            if match is None:
                raise MeshError("macro element %r not found in forest" % (tri_coords,))
            node_of[fe] = match
        else:
            if parent >= fe:
                raise MeshError("parent written after child")
            has_child[parent] = True
            pnode = node_of[parent]
            match = None
            for c in forest.children_of(pnode):
                cc = tuple(tuple(forest.coords()[v]) for v in forest.node_verts[c])
                if cc == tri_coords:
                    match = c
                    break
            if match is None:
                raise MeshError("element %d does not match a bisection child" % fe)
            if forest.node_level[match] != level:
                raise MeshError("level mismatch in mesh file")
            node_of[fe] = match

    front = [node_of[fe] for fe in range(ne) if not has_child[fe]]
    return Triangulation(forest, front)


def load_mesh(path, forest=None):
    with open(path) as fh:
        return loads_mesh(fh.read(), forest=forest)
