"""Shared test utilities: random mesh generation and independent oracles.

The oracles here deliberately avoid the library's combinatorial machinery:
edges are compared as coordinate pairs, containment is checked with shapely
polygons, and meshsizes are read off pointwise. They were written against
the definitions, before the implementation, and stay frozen.
"""

import numpy as np
from shapely.geometry import Point, Polygon

from parabest.mesh import (
    Triangulation,
    bisect_marked,
    coarsest_common_refinement,
    finest_common_coarsening,
    is_refinement_of,
    meshsize,
    square_macro,
)


def symbolic_basis(degree):
    """Reference basis as sympy expressions in (xi, eta), with the symbols."""
    import sympy as sp

    x, y = sp.symbols("xi eta")
    l = [1 - x - y, x, y]
    if degree == 1:
        return (x, y), l
    phis = [li * (2 * li - 1) for li in l]
    for a, b in ((0, 1), (1, 2), (2, 0)):
        phis.append(4 * l[a] * l[b])
    return (x, y), phis


def random_refinement(tri, rng, rounds=3, frac=0.3):
    """Refine ``tri`` by marking a random subset of elements, a few times."""
    t = tri
    for _ in range(rounds):
        ne = t.element_count
        k = max(1, int(frac * ne))
        marked = rng.choice(ne, size=k, replace=False)
        t = bisect_marked(t, marked)
    return t


def random_mesh_pair(rng, subdivisions=2, rounds=3):
    """Two random refinements of one macro mesh, sharing a forest."""
    base = square_macro(-1.0, 1.0, subdivisions)
    a = random_refinement(base, rng, rounds=rng.integers(1, rounds + 1))
    b = random_refinement(base, rng, rounds=rng.integers(1, rounds + 1))
    return base, a, b


def element_polygon(tri, k):
    return Polygon(tri.points[tri.tris[k]])


def geometric_interior_edges(tri):
    """Interior edges as a set of sorted coordinate-pair tuples."""
    out = set()
    for e in tri.interior_edges:
        pa = tuple(float(c) for c in tri.points[e[0]])
        pb = tuple(float(c) for c in tri.points[e[1]])
        out.add(tuple(sorted((pa, pb))))
    return out


def edge_key_coords(tri, key):
    """Map a forest-global edge key to its sorted coordinate pair."""
    c = tri.forest.coords()
    pa = tuple(float(x) for x in c[key[0]])
    pb = tuple(float(x) for x in c[key[1]])
    return tuple(sorted((pa, pb)))


def covers(poly_big, poly_small, slack=1e-9):
    return poly_big.buffer(slack).covers(poly_small)


def interior_sample_points(rng, n, lo=-1.0, hi=1.0):
    margin = 1e-3 * (hi - lo)
    return rng.uniform(lo + margin, hi - margin, size=(n, 2))


def assert_lattice_laws(a, b, rng, n_points=25):
    """Order and meshsize laws for one mesh pair. Raises AssertionError."""
    fcc = finest_common_coarsening(a, b)
    ccr = coarsest_common_refinement(a, b)

    assert is_refinement_of(a, fcc) and is_refinement_of(b, fcc)
    assert is_refinement_of(ccr, a) and is_refinement_of(ccr, b)
    assert fcc == finest_common_coarsening(b, a)
    assert ccr == coarsest_common_refinement(b, a)
    assert finest_common_coarsening(a, a) == a
    assert coarsest_common_refinement(a, a) == a
    # absorption
    assert finest_common_coarsening(a, ccr) == a
    assert coarsest_common_refinement(a, fcc) == a
    # every element of either hull comes from one of the operands, which is
    # what makes them the finest coarsening / coarsest refinement
    assert fcc.leaf_set <= (a.leaf_set | b.leaf_set)
    assert ccr.leaf_set <= (a.leaf_set | b.leaf_set)

    h_a, h_b = meshsize(a), meshsize(b)
    h_fcc, h_ccr = meshsize(fcc), meshsize(ccr)
    for x, y in interior_sample_points(rng, n_points):
        va, vb = h_a.value_at(x, y), h_b.value_at(x, y)
        assert h_fcc.value_at(x, y) == max(va, vb)
        assert h_ccr.value_at(x, y) == min(va, vb)

    # geometric nesting of the common refinement inside both operands
    for k in range(min(ccr.element_count, 40)):
        pk = element_polygon(ccr, k)
        c = pk.representative_point()
        ka = a.locate(c.x, c.y)
        kb = b.locate(c.x, c.y)
        assert covers(element_polygon(a, ka), pk)
        assert covers(element_polygon(b, kb), pk)
    return fcc, ccr
