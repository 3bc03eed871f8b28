"""
The lattice of bisection meshes
===============================

Newest-vertex bisection refinements of one macro mesh form a lattice:
any two meshes have a coarsest common refinement (the cheapest mesh both
can map into) and a finest common coarsening (the finest mesh that maps
into both). This demo builds two incomparable refinements and exercises
the lattice operations plus function transfer across them.
"""

import numpy as np

from parabest import (
    FeSpace,
    bisect_marked,
    coarsest_common_refinement,
    finest_common_coarsening,
    interpolate,
    is_refinement_of,
    l2_project,
    meshsize,
    square_macro,
    transfer,
    uniform_refine,
)

base = uniform_refine(square_macro(subdivisions=2))
print("base mesh:", base.element_count, "elements")

# Refine toward the left edge on one copy and toward the bottom on the
# other. Neither mesh refines the other, but both descend from base.
def refine_where(tri, predicate, rounds=3):
    for _ in range(rounds):
        cx = tri.points[tri.tris].mean(axis=1)
        tri = bisect_marked(tri, np.flatnonzero(predicate(cx)))
    return tri

left = refine_where(base, lambda c: c[:, 0] < 0.0)
bottom = refine_where(base, lambda c: c[:, 1] < 0.0)
print("left-refined:", left.element_count,
      " bottom-refined:", bottom.element_count)
print("comparable?", is_refinement_of(left, bottom) or
      is_refinement_of(bottom, left))

# The join contains every element boundary of both inputs; the meet only
# keeps what they agree on. Element counts bracket the inputs.
join = coarsest_common_refinement(left, bottom)
meet = finest_common_coarsening(left, bottom)
print("join:", join.element_count, " meet:", meet.element_count)
assert is_refinement_of(join, left) and is_refinement_of(join, bottom)
assert is_refinement_of(left, meet) and is_refinement_of(bottom, meet)

# Local mesh size is an element-wise quantity; on the join it is the
# pointwise minimum of the two inputs, on the meet the maximum.
hl, hb = meshsize(left), meshsize(bottom)
print("h ranges: left [%.3f, %.3f], bottom [%.3f, %.3f], join min %.3f"
      % (hl.min, hl.max, hb.min, hb.max, meshsize(join).min))

# Moving functions around: transfer is exact injection into a containing
# space, so left -> join loses nothing. Going left -> bottom is lossy by
# nature (the spaces are not nested) and transfer refuses it; the right
# tool there is an L2 projection, which the join makes computable.
vl = FeSpace(left, degree=1)
vb = FeSpace(bottom, degree=1)
u = interpolate(lambda x, y: np.exp(-4.0 * (x**2 + y**2)), vl)

u_on_join = transfer(u, FeSpace(join, degree=1))
print("exact transfer to join, u(0.25, -0.25): %.6f vs %.6f"
      % (u_on_join.evaluate(0.25, -0.25), u.evaluate(0.25, -0.25)))

try:
    transfer(u, vb)
except Exception as exc:
    print("transfer left -> bottom:", exc)

u_on_bottom = l2_project(u, vb)
print("L2-projected instead, u(0.25, -0.25): %.6f"
      % u_on_bottom.evaluate(0.25, -0.25))
