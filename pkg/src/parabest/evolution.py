"""Backward Euler stepping for the parabolic problem, in pointwise form.

Each step solves (M + tau K) U^n = tau b_f + b_mix over interior dofs, where
b_f tests the source at t_n against the current basis and b_mix tests the
previous solution (possibly living on a different mesh) against the current
basis. Reusing those exact load vectors, the step also produces the three
functions that turn the variational scheme into a pointwise identity

    averaged time derivative + discrete elliptic image = projected source,

which holds to solver precision and is the backbone of the error estimators:
every state records its own residual of this identity.

The module also provides the strong elementwise operator, interior and jump
residuals of a discrete function, L2 projection, and state checkpointing.
"""

from __future__ import annotations

import numpy as np

from .assembly import (
    CoefficientMatrix,
    InteriorSolver,
    cross_mass_load,
    load_vector,
    mass_matrix,
    stiffness_matrix,
)
from .fespace import (
    FeFunction,
    FeSpace,
    affine_maps,
    dumps_fefunction,
    interpolate,
    loads_fefunction,
    quad_edge,
    reference_gradients,
)
from .mesh import MeshError

_REF_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class SeparableSource:
    """Source of the form f(x, y, t) = sum_k T_k(t) G_k(x, y).

    ``terms`` is a sequence of (time_factor, space_factor) callables. The
    separable structure lets solvers and estimators cache all space
    integrals once per mesh and rescale them per step.
    """

    def __init__(self, terms):
        self.terms = [(tk, gk) for tk, gk in terms]
        if not self.terms:
            raise ValueError("a separable source needs at least one term")

    def __call__(self, x, y, t):
        acc = self.terms[0][0](t) * self.terms[0][1](x, y)
        for tk, gk in self.terms[1:]:
            acc = acc + tk(t) * gk(x, y)
        return acc

    def time_factors(self, t):
        return np.array([tk(t) for tk, _ in self.terms])


class ParabolicProblem:
    """Data of u_t + div(-A grad u) = f, u = 0 on the boundary, u(0) given.

    ``source`` is either a callable f(x, y, t) or a ``SeparableSource``;
    ``initial`` is a callable g(x, y); ``coef`` the constant SPD diffusion
    matrix.
    """

    def __init__(self, source, initial, coef=None, final_time=1.0):
        self.source = source
        self.initial = initial
        self.coef = coef if coef is not None else CoefficientMatrix()
        self.final_time = float(final_time)

    def source_at(self, t):
        f = self.source
        return lambda x, y: f(x, y, t)


class SpaceOperators:
    """Per-space matrices, factorizations and load caches, built lazily.

    One instance is attached to each ``FeSpace`` and shared by everything
    that works on it, so factorizations happen once per space.
    """

    def __init__(self, space):
        self.space = space
        self._mass = None
        self._mass_solver = None
        self._stiff = {}
        self._steps = {}
        self._source_loads = {}

    @property
    def mass(self):
        if self._mass is None:
            self._mass = mass_matrix(self.space)
        return self._mass

    @property
    def mass_solver(self):
        if self._mass_solver is None:
            self._mass_solver = InteriorSolver(self.mass, self.space)
        return self._mass_solver

    def _coef_key(self, coef):
        return coef.array.tobytes()

    def stiffness(self, coef):
        key = self._coef_key(coef)
        if key not in self._stiff:
            self._stiff[key] = stiffness_matrix(self.space, coef)
        return self._stiff[key]

    def step_solver(self, coef, tau):
        key = (self._coef_key(coef), float(tau))
        if key not in self._steps:
            system = self.mass + tau * self.stiffness(coef)
            self._steps[key] = InteriorSolver(system.tocsr(), self.space)
        return self._steps[key]

    def source_load(self, source, t, exactness=8):
        """Load vector of the source at time t, caching separable factors."""
        if isinstance(source, SeparableSource):
            key = (id(source), int(exactness))
            loads = self._source_loads.get(key)
            if loads is None:
                loads = [load_vector(self.space, gk, exactness=exactness)
                         for _, gk in source.terms]
                self._source_loads[key] = loads
            factors = source.time_factors(t)
            out = factors[0] * loads[0]
            for c, b in zip(factors[1:], loads[1:]):
                out = out + c * b
            return out
        return load_vector(self.space, lambda x, y: source(x, y, t),
                           exactness=exactness)


def space_operators(space):
    ops = getattr(space, "_operators_cache", None)
    if ops is None:
        ops = SpaceOperators(space)
        space._operators_cache = ops
    return ops


def l2_project(fn, space, exactness=8):
    """L2 projection of a callable or a (possibly cross-mesh) function."""
    ops = space_operators(space)
    if isinstance(fn, FeFunction):
        rhs = cross_mass_load(fn, space)
    else:
        rhs = load_vector(space, fn, exactness=exactness)
    return FeFunction(space, ops.mass_solver.solve(rhs))


def discrete_elliptic(u, coef=None):
    """Discrete elliptic image of u: the function whose L2 products with the
    space reproduce the energy products of u."""
    coef = coef if coef is not None else CoefficientMatrix()
    ops = space_operators(u.space)
    return FeFunction(
        u.space, ops.mass_solver.solve(ops.stiffness(coef) @ u.coeffs))


class TimeSlabState:
    """Solution and step bookkeeping at one time node.

    Fields (None where not defined at the initial node): the solution ``u``
    on ``space`` at time ``t`` with step index ``n``; ``tau`` the step just
    taken; ``u_prev`` the previous solution on its own mesh; ``f_bar`` the
    projected source; ``u_prev_proj`` the projection of the previous
    solution onto the current space; ``time_derivative`` the averaged
    discrete time derivative; ``elliptic`` the discrete elliptic image of
    ``u``; ``pointwise_defect`` the relative residual of the pointwise form
    of the step equation.
    """

    def __init__(self, space, u, t, n, tau=None, u_prev=None, f_bar=None,
                 u_prev_proj=None, time_derivative=None, elliptic=None,
                 pointwise_defect=0.0):
        self.space = space
        self.u = u
        self.t = float(t)
        self.n = int(n)
        self.tau = tau
        self.u_prev = u_prev
        self.f_bar = f_bar
        self.u_prev_proj = u_prev_proj
        self.time_derivative = time_derivative
        self.elliptic = elliptic
        self.pointwise_defect = float(pointwise_defect)

    def __repr__(self):
        return "TimeSlabState(n=%d, t=%g, %d dofs)" % (
            self.n, self.t, self.space.n_dofs)


class Evolution:
    """Backward Euler driver for one problem, across meshes and steps.

    ``load_exactness`` sets the quadrature order of the per-step source
    load; the default integrates smooth data well below discretization
    accuracy on the meshes of interest.
    """

    def __init__(self, problem, load_exactness=8):
        self.problem = problem
        self.load_exactness = int(load_exactness)

    def initial_state(self, space, start_time=0.0):
        """Interpolate the initial data and take its elliptic image."""
        u0 = interpolate(self.problem.initial, space)
        ell0 = discrete_elliptic(u0, self.problem.coef)
        return TimeSlabState(space, u0, start_time, 0, elliptic=ell0)

    def advance(self, state, tau, space=None):
        """One backward Euler step of size ``tau``.

        ``space`` switches the mesh (or degree) for this step; omitted, the
        step stays on the current space. Returns the new state.
        """
        t_new = state.t + tau
        if tau <= 0.0 or tau < 1e-14 * abs(t_new):
            raise ValueError("time step %g is not usable at t=%g"
                             % (tau, state.t))
        space = space if space is not None else state.space
        ops = space_operators(space)
        coef = self.problem.coef

        b_f = ops.source_load(self.problem.source, t_new,
                              exactness=self.load_exactness)
        if space is state.space:
            b_mix = ops.mass @ state.u.coeffs
        else:
            b_mix = cross_mass_load(state.u, space)
        rhs = tau * b_f + b_mix

        u_new = FeFunction(space, ops.step_solver(coef, tau).solve(rhs))

        # pointwise form ingredients, from the same load vectors
        f_bar = FeFunction(space, ops.mass_solver.solve(b_f))
        u_prev_proj = FeFunction(space, ops.mass_solver.solve(b_mix))
        dbar = (u_new - u_prev_proj) * (1.0 / tau)
        elliptic = discrete_elliptic(u_new, coef)

        M = ops.mass
        defect = dbar.coeffs + elliptic.coeffs - f_bar.coeffs
        num = np.sqrt(defect @ (M @ defect))
        scale = sum(np.sqrt(g.coeffs @ (M @ g.coeffs))
                    for g in (dbar, elliptic, f_bar))
        rel = num / scale if scale > 0 else num

        return TimeSlabState(
            space, u_new, t_new, state.n + 1, tau=tau, u_prev=state.u,
            f_bar=f_bar, u_prev_proj=u_prev_proj, time_derivative=dbar,
            elliptic=elliptic, pointwise_defect=rel)


# -- residuals ------------------------------------------------------------------


def elementwise_elliptic_values(u, coef):
    """The strong operator applied inside each element: minus the coefficient
    contraction of the Hessian; one constant per element, zero for degree 1."""
    space = u.space
    ne = space.tri.element_count
    if space.degree == 1:
        return np.zeros(ne)
    # reference Hessians of the degree 2 basis are constant
    h = np.zeros((6, 2, 2))
    h[0] = [[4, 4], [4, 4]]
    h[1] = [[4, 0], [0, 0]]
    h[2] = [[0, 0], [0, 4]]
    h[3] = [[-8, -4], [-4, 0]]
    h[4] = [[0, 4], [4, 0]]
    h[5] = [[0, -4], [-4, -8]]
    m = affine_maps(space.tri)
    coeffs = u.coeffs[space.element_dofs]             # (ne, 6)
    ref_h = np.einsum("el,lij->eij", coeffs, h)
    phys_h = np.einsum("eki,eij,elj->ekl", m.inv_t, ref_h, m.inv_t)
    return -np.einsum("ekl,kl->e", phys_h, coef.array)


class InteriorResidual:
    """Residual of the elliptic identity inside elements.

    The difference between the strong elementwise operator applied to ``u``
    and a given elliptic image; elementwise a polynomial of the space's
    degree.
    """

    def __init__(self, u, elliptic, coef):
        self.u = u
        self.elliptic = elliptic
        self.space = u.space
        self.strong = elementwise_elliptic_values(u, coef)

    def values(self, ref_pts):
        """Residual values at reference points, shape (ne, nq)."""
        return self.strong[:, None] - self.elliptic.element_values(ref_pts)


class EdgeFrames:
    """Per-interior-edge geometry and element-side bookkeeping of a mesh.

    Parameterizes each interior edge by s in [0, 1] from its lower to its
    higher local vertex id, identically from both sides, and stores for each
    side the adjacent element, the reference coordinates of the endpoints
    within it, and its outward unit normal.
    """

    def __init__(self, tri):
        self.tri = tri
        edges = tri.interior_edges                   # (nE, 2) local vids
        self.n_edges = len(edges)
        pa = tri.points[edges[:, 0]]
        pb = tri.points[edges[:, 1]]
        self.lengths = np.linalg.norm(pb - pa, axis=1)
        self.elems = tri.interior_edge_elems         # (nE, 2)

        self.ref_a = np.empty((2, self.n_edges, 2))
        self.ref_b = np.empty((2, self.n_edges, 2))
        self.normals = np.empty((2, self.n_edges, 2))
        tang = pb - pa
        rot = np.column_stack([tang[:, 1], -tang[:, 0]])
        rot /= self.lengths[:, None]
        centroids = tri.points[tri.tris].mean(axis=1)
        mids = 0.5 * (pa + pb)
        for side in range(2):
            ke = self.elems[:, side]
            tris_side = tri.tris[ke]                 # (nE, 3)
            ia = np.argmax(tris_side == edges[:, 0:1], axis=1)
            ib = np.argmax(tris_side == edges[:, 1:2], axis=1)
            self.ref_a[side] = _REF_CORNERS[ia]
            self.ref_b[side] = _REF_CORNERS[ib]
            out = np.sign(np.einsum(
                "ed,ed->e", mids - centroids[ke], rot))[:, None]
            self.normals[side] = rot * out

    def ref_points(self, side, s):
        """Reference coordinates of edge parameter points, (nE, ns, 2)."""
        return self.ref_a[side][:, None, :] * (1.0 - s)[None, :, None] \
            + self.ref_b[side][:, None, :] * s[None, :, None]


def edge_frames(tri):
    frames = getattr(tri, "_edge_frames_cache", None)
    if frames is None:
        frames = EdgeFrames(tri)
        tri._edge_frames_cache = frames
    return frames


class FluxJump:
    """Jump of the co-normal flux of a function across interior edges.

    The sign adds the outward co-normal derivatives of the two adjacent
    elements, which is the convention under which the energy product of two
    functions decomposes into elementwise strong products plus edge terms
    with a plus sign.
    """

    def __init__(self, u, coef):
        self.u = u
        self.coef = coef
        self.frames = edge_frames(u.space.tri)

    def values(self, s):
        """Jump values at edge parameters ``s``, shape (n_edges, ns)."""
        space = self.u.space
        fr = self.frames
        inv_t = affine_maps(space.tri).inv_t
        out = np.zeros((fr.n_edges, len(s)))
        for side in range(2):
            elems = fr.elems[:, side]
            ref = fr.ref_points(side, s)                       # (nE, ns, 2)
            gtab = reference_gradients(space.degree, ref)      # (nloc,nE,ns,2)
            coeffs = self.u.coeffs[space.element_dofs[elems]]
            gref = np.einsum("el,lesd->esd", coeffs, gtab)
            gphys = np.einsum("eij,esj->esi", inv_t[elems], gref)
            flux = np.einsum("esi,ij,ej->es",
                             gphys, self.coef.array, fr.normals[side])
            out += flux
        return out


def energy_product(u, v, coef=None):
    """The a-form of two functions on one space, via the stiffness matrix."""
    coef = coef if coef is not None else CoefficientMatrix()
    ops = space_operators(u.space)
    return float(u.coeffs @ (ops.stiffness(coef) @ v.coeffs))


def representation_defect(u, v, coef=None, exactness=None):
    """Residual of the elementwise representation of the energy product.

    Computes a(u, v) minus the sum of elementwise strong products and edge
    jump products against v. Zero to quadrature precision for any pair on
    one space; exercised by tests to pin the jump sign convention.
    """
    from .fespace import quad_triangle, reference_values
    coef = coef if coef is not None else CoefficientMatrix()
    space = u.space
    if exactness is None:
        exactness = 2 * space.degree
    qp, w = quad_triangle(exactness)
    m = affine_maps(space.tri)

    strong = elementwise_elliptic_values(u, coef)              # (ne,)
    vvals = v.element_values(qp)
    bulk = np.einsum("e,eq,q,e->", strong, vvals, w, m.det)

    fr = edge_frames(space.tri)
    s, ws = quad_edge(exactness)
    jump = FluxJump(u, coef).values(s)
    # v is continuous: its trace can be taken from either side
    ref = fr.ref_points(0, s)
    vtrace = np.einsum(
        "el,les->es",
        v.coeffs[space.element_dofs[fr.elems[:, 0]]],
        reference_values(space.degree, ref))
    edge = np.einsum("es,es,s,e->", jump, vtrace, ws, fr.lengths)

    return energy_product(u, v, coef) - (bulk + edge)


# -- checkpointing --------------------------------------------------------------


_STATE_FIELDS = ("u", "u_prev", "f_bar", "u_prev_proj",
                 "time_derivative", "elliptic")


def dumps_state(state):
    """Serialize a state, including every step function the estimators use."""
    head = ["parabest-state 1",
            "t %r" % state.t,
            "n %d" % state.n,
            "tau %s" % ("none" if state.tau is None else repr(float(state.tau))),
            "defect %r" % state.pointwise_defect]
    blocks = []
    for name in _STATE_FIELDS:
        f = getattr(state, name)
        if f is None:
            blocks.append("field %s none 0" % name)
        else:
            text = dumps_fefunction(f)
            blocks.append("field %s fun %d" % (name, len(text.splitlines())))
            blocks.append(text.rstrip("\n"))
    return "\n".join(head + blocks) + "\n"


def loads_state(text, forest=None):
    lines = text.splitlines()
    if lines[0].split() != ["parabest-state", "1"]:
        raise MeshError("not a parabest state file")
    t = float(lines[1].split()[1])
    n = int(lines[2].split()[1])
    tau_s = lines[3].split()[1]
    tau = None if tau_s == "none" else float(tau_s)
    defect = float(lines[4].split()[1])

    fields = {}
    spaces = {}
    k = 5
    while k < len(lines):
        parts = lines[k].split()
        if parts[0] != "field":
            raise MeshError("malformed state file at line %d" % (k + 1))
        name, kind, count = parts[1], parts[2], int(parts[3])
        k += 1
        if kind == "none":
            fields[name] = None
            continue
        block = "\n".join(lines[k:k + count])
        k += count
        f = loads_fefunction(block, forest=forest)
        skey = (f.space.tri.leaf_set, f.space.degree)
        if skey in spaces:
            f = FeFunction(spaces[skey], f.coeffs)
        else:
            spaces[skey] = f.space
        fields[name] = f

    u = fields["u"]
    return TimeSlabState(
        u.space, u, t, n, tau=tau, u_prev=fields["u_prev"],
        f_bar=fields["f_bar"], u_prev_proj=fields["u_prev_proj"],
        time_derivative=fields["time_derivative"],
        elliptic=fields["elliptic"], pointwise_defect=defect)


def dump_state(state, path):
    with open(path, "w") as fh:
        fh.write(dumps_state(state))


def load_state(path, forest=None):
    with open(path) as fh:
        return loads_state(fh.read(), forest=forest)
