"""A posteriori error estimators for the backward Euler evolution.

Per step, the workspace turns a ``TimeSlabState`` into a set of scalar
indicators:

* reconstruction estimators (``recon_l2``, ``recon_h1``): residual-based
  bounds, in the L2 and H1 norms, of the gap between the discrete solution
  and its elliptic reconstruction, built from the interior residual and the
  flux jumps of the current step;
* space rate (``rate_space``): the same residual machinery applied to the
  backward time increment of the residuals, with mesh-change edges split
  into unchanged and changed parts weighted by their own constants;
* load projection defect (``data_space``) and its backward rate
  (``data_space_rate``): how far the step's load (source plus transported
  previous solution) is from its projection onto the current space;
* source time variation (``data_time_l1``, ``data_time_l2``): L1 and L2 in
  time moduli of the source around the endpoint value used by the scheme;
* time increments (``time_l1``, ``time_l2``): norms of the change of the
  discrete elliptic image between consecutive steps.

``EstimatorTotals`` accumulates the indicators into guaranteed bounds for
the four error norms; see its properties.

All integrals are elementwise Gauss quadrature: exact for the piecewise
polynomial integrands (residuals, jumps), degree 8 by default for integrands
involving the analytic source. Cross-mesh steps integrate on the coarsest
common refinement of the meshes involved, with edges classified by exact
midpoint-ancestry combinatorics.
"""

from __future__ import annotations

import numpy as np

from .assembly import domain_integral
from .evolution import (
    FluxJump,
    InteriorResidual,
    SeparableSource,
    edge_frames,
    elementwise_elliptic_values,
    space_operators,
)
from .fespace import (
    affine_maps,
    quad_edge,
    quad_triangle,
    reference_gradients,
)
from .assembly import MeshEmbedding
from .mesh import (
    coarsest_common_refinement,
    coarsest_common_refinement_many,
    segment_within_edges,
)


def _prime_factors(k):
    out = []
    d = 2
    while d * d <= k:
        while k % d == 0:
            out.append(d)
            k //= d
        d += 1
    if k > 1:
        out.append(k)
    return out


class ConstantsTable:
    """Multiplicative table of interpolation and regularity constants.

    Basic constants are indexed by a prime first index and a positive
    second index; composite first indices factor into primes, and the value
    is the product of the basic values of the factors (repeated factors
    multiply repeatedly). All basics default to 1, which keeps every
    estimator a pure mesh functional until calibrated values are supplied.
    """

    _BASIC_KEYS = ((2, 1), (2, 2), (3, 1), (3, 2),
                   (5, 1), (5, 2), (7, 1), (7, 2))

    def __init__(self, values=None):
        self._basic = {key: 1.0 for key in self._BASIC_KEYS}
        if values:
            for (k, j), v in dict(values).items():
                self.set(k, j, v)

    def set(self, k, j, value):
        k, j = int(k), int(j)
        if len(_prime_factors(k)) != 1:
            raise ValueError(
                "only prime-indexed constants can be set, got %d" % k)
        if value <= 0:
            raise ValueError("constants must be positive")
        self._basic[(k, j)] = float(value)

    def value(self, k, j):
        k, j = int(k), int(j)
        if k < 2:
            raise ValueError("first index must be at least 2")
        out = 1.0
        for p in _prime_factors(k):
            basic = self._basic.get((p, j))
            if basic is None:
                raise KeyError("no basic constant with index (%d, %d)" % (p, j))
            out *= basic
        return out

    def items(self):
        return sorted(self._basic.items())

    def __repr__(self):
        shown = {k: v for k, v in self._basic.items() if v != 1.0}
        return "ConstantsTable(%r)" % (shown,)


class StepIndicators:
    """Scalar estimator values of one accepted step.

    ``recon_l2`` and ``recon_h1`` are defined for every step including the
    initial one; the rate and data indicators are zero at step 0, and
    ``data_space_rate`` is also zero at step 1 (it compares two successive
    load defects). ``rate_space_changed`` is the part of ``rate_space``
    carried by edges present in only one of the step's two skeletons; it
    vanishes whenever the mesh does not change.
    """

    _FIELDS = ("recon_l2", "recon_h1", "rate_space", "rate_space_changed",
               "data_space", "data_space_rate", "data_time_l1",
               "data_time_l2", "time_l1", "time_l2")

    def __init__(self, n, t, tau, **values):
        self.n = int(n)
        self.t = float(t)
        self.tau = float(tau) if tau else 0.0
        for name in self._FIELDS:
            setattr(self, name, float(values.pop(name, 0.0)))
        if values:
            raise TypeError("unknown indicator fields: %s" % sorted(values))

    def __repr__(self):
        vals = ", ".join("%s=%.3e" % (f, getattr(self, f))
                         for f in self._FIELDS)
        return "StepIndicators(n=%d, %s)" % (self.n, vals)


class _SpaceData:
    """Quadrature tables and geometric weights of one space, built once."""

    def __init__(self, space, data_exactness):
        tri = space.tri
        deg = space.degree
        self.space = space
        self.qp_r, self.w_r = quad_triangle(2 * deg)
        self.s_j, self.w_j = quad_edge(max(0, 2 * (deg - 1)))
        self.qp_d, self.w_d = quad_triangle(data_exactness)

        m = affine_maps(tri)
        self.det = m.det
        self.diam = tri.element_diameters()
        fr = edge_frames(tri)
        self.edge_len = fr.lengths
        d_by_side = self.diam[fr.elems]
        self.edge_h = d_by_side.max(axis=1)

        self.phys_d = m.push(self.qp_d)
        self._source_vals = {}
        self._source_gram = {}

    def source_values(self, source, t):
        """Source values on the data quadrature grid, (ne, nq)."""
        if isinstance(source, SeparableSource):
            cached = self._source_vals.get(id(source))
            if cached is None:
                cached = [np.asarray(gk(self.phys_d[..., 0],
                                        self.phys_d[..., 1]), dtype=float)
                          for _, gk in source.terms]
                self._source_vals[id(source)] = cached
            factors = source.time_factors(t)
            out = factors[0] * cached[0]
            for c, g in zip(factors[1:], cached[1:]):
                out = out + c * g
            return out
        return np.asarray(source(self.phys_d[..., 0], self.phys_d[..., 1], t),
                          dtype=float)

    def source_gram(self, source):
        """Matrix of pairwise L2 products of separable space factors."""
        key = id(source)
        gram = self._source_gram.get(key)
        if gram is None:
            vals = self._source_vals.get(key)
            if vals is None:
                self.source_values(source, 0.0)
                vals = self._source_vals[key]
            stack = np.stack(vals)                      # (nt, ne, nq)
            gram = np.einsum("aeq,beq,q,e->ab", stack, stack,
                             self.w_d, self.det)
            self._source_gram[key] = gram
        return gram

    def bulk_l2_sq(self, vals, weights_pow):
        """Sum over elements of diam^p times the elementwise L2 square."""
        cell = np.einsum("eq,q->e", vals * vals, self.w_r) * self.det
        return float(np.sum(self.diam ** weights_pow * cell))

    def edge_l2_sq(self, vals, weights_pow):
        cell = np.einsum("es,s->e", vals * vals, self.w_j) * self.edge_len
        return float(np.sum(self.edge_h ** weights_pow * cell))

    def data_l2_sq(self, vals, weights_pow):
        cell = np.einsum("eq,q->e", vals * vals, self.w_d) * self.det
        return float(np.sum(self.diam ** weights_pow * cell))


def _gauss_times(t0, t1, n):
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
    return mid + half * x, 0.5 * w      # weights normalized to sum 1


def _embedded_flux_jump(u, coef, frames, embedding, s):
    """Flux jump of a coarse-mesh function across the edges of a refinement."""
    space = u.space
    inv_t = affine_maps(space.tri).inv_t
    out = np.zeros((frames.n_edges, len(s)))
    for side in range(2):
        ke = frames.elems[:, side]
        ref_ccr = frames.ref_points(side, s)
        B = embedding.B[ke]
        c = embedding.c[ke]
        ref_u = np.einsum("eij,esj->esi", B, ref_ccr) + c[:, None, :]
        elems_u = embedding.elems[ke]
        gtab = reference_gradients(space.degree, ref_u)
        coeffs = u.coeffs[space.element_dofs[elems_u]]
        gref = np.einsum("el,lesd->esd", coeffs, gtab)
        gphys = np.einsum("eij,esj->esi", inv_t[elems_u], gref)
        out += np.einsum("esi,ij,ej->es", gphys, coef.array,
                         frames.normals[side])
    return out


class _PairData:
    """Cross-mesh integration frame for one (previous, current) mesh pair."""

    def __init__(self, prev_tri, cur_tri, deg, data_exactness):
        self.ccr = coarsest_common_refinement(prev_tri, cur_tri)
        self.emb_prev = MeshEmbedding(self.ccr, prev_tri)
        self.emb_cur = MeshEmbedding(self.ccr, cur_tri)
        self.qp, self.w = quad_triangle(2 * deg)
        self.qp_d, self.w_d = quad_triangle(data_exactness)
        m = affine_maps(self.ccr)
        self.det = m.det
        self.phys_d = m.push(self.qp_d)

        d_prev = prev_tri.element_diameters()[self.emb_prev.elems]
        d_cur = cur_tri.element_diameters()[self.emb_cur.elems]
        self.h_cur = d_cur
        self.h_max = np.maximum(d_prev, d_cur)

        fr = edge_frames(self.ccr)
        self.frames = fr
        self.s_j, self.w_j = quad_edge(max(0, 2 * (deg - 1)))
        self.edge_len = fr.lengths
        eh = np.maximum(d_prev[fr.elems], d_cur[fr.elems])
        self.edge_h = eh.max(axis=1)

        forest = cur_tri.forest
        cur_keys = cur_tri.interior_edge_keys()
        prev_keys = prev_tri.interior_edge_keys()
        g = self.ccr.vertex_gids[self.ccr.interior_edges]
        on_cur = np.array([segment_within_edges(forest, cur_keys, a, b)
                           for a, b in g])
        on_prev = np.array([segment_within_edges(forest, prev_keys, a, b)
                            for a, b in g])
        self.edges_common = on_cur & on_prev
        self.edges_changed = on_cur ^ on_prev

    def bulk_sq(self, vals, h, pow_):
        cell = np.einsum("eq,q->e", vals * vals, self.w) * self.det
        return float(np.sum(h ** pow_ * cell))

    def edge_sq(self, vals, mask, pow_):
        cell = np.einsum("es,s->e", vals * vals, self.w_j) * self.edge_len
        return float(np.sum((self.edge_h ** pow_ * cell)[mask]))

    def data_sq(self, vals, h, pow_):
        cell = np.einsum("eq,q->e", vals * vals, self.w_d) * self.det
        return float(np.sum(h ** pow_ * cell))


class EstimatorWorkspace:
    """Turns successive evolution states into per-step estimator values.

    Feed it every state in order, starting with the initial one. Between
    steps it carries the residual data needed by the backward differences,
    on whichever mesh the previous step used.
    """

    def __init__(self, problem, constants=None, data_exactness=8,
                 time_points=5, alpha=None):
        self.problem = problem
        self.constants = constants if constants is not None else ConstantsTable()
        self.alpha = float(alpha) if alpha is not None \
            else problem.coef.ellipticity
        if self.alpha <= 0:
            raise ValueError("ellipticity constant must be positive")
        self.data_exactness = int(data_exactness)
        self.time_points = int(time_points)
        self._space_data = {}
        self._prev = None

    def space_data(self, space):
        sd = self._space_data.get(id(space))
        if sd is None:
            sd = _SpaceData(space, self.data_exactness)
            self._space_data[id(space)] = sd
        return sd

    # -- pieces ----------------------------------------------------------------

    def _recon_terms(self, state, sd, Rv, Jv):
        C = self.constants.value
        bulk4 = sd.bulk_l2_sq(Rv, 4)
        edge3 = sd.edge_l2_sq(Jv, 3)
        bulk2 = sd.bulk_l2_sq(Rv, 2)
        edge1 = sd.edge_l2_sq(Jv, 1)
        recon_l2 = C(6, 2) * np.sqrt(bulk4) + C(10, 2) * np.sqrt(edge3)
        recon_h1 = (C(3, 1) / self.alpha) * np.sqrt(bulk2) \
            + (C(5, 1) / self.alpha) * np.sqrt(edge1)
        return recon_l2, recon_h1

    def _source_norm_sq(self, sd, t_ref, t):
        """Squared L2 norm of f(t_ref) - f(t) over the domain."""
        src = self.problem.source
        if isinstance(src, SeparableSource):
            gram = sd.source_gram(src)
            dT = src.time_factors(t_ref) - src.time_factors(t)
            return float(dT @ gram @ dT)
        fn = lambda x, y: (src(x, y, t_ref) - src(x, y, t)) ** 2
        return domain_integral(sd.space.tri, fn,
                               exactness=self.data_exactness)

    def _data_time(self, sd, state):
        times, wts = _gauss_times(state.t - state.tau, state.t,
                                  self.time_points)
        sq = np.array([self._source_norm_sq(sd, state.t, t) for t in times])
        sq = np.maximum(sq, 0.0)
        l1 = float(np.sum(wts * np.sqrt(sq)))
        l2 = float(np.sqrt(np.sum(wts * sq)))
        return l1, l2

    def _load_defect_values(self, sd, state):
        """(load - its projection) on the data grid of the current space."""
        g = sd.source_values(self.problem.source, state.t) \
            + state.u_prev.element_values(sd.qp_d) / state.tau
        p = state.f_bar.element_values(sd.qp_d) \
            + state.u_prev_proj.element_values(sd.qp_d) / state.tau
        return g - p

    # -- main entry -------------------------------------------------------------

    def step(self, state):
        coef = self.problem.coef
        space = state.space
        sd = self.space_data(space)

        Rv = InteriorResidual(state.u, state.elliptic, coef).values(sd.qp_r)
        Jv = FluxJump(state.u, coef).values(sd.s_j)
        recon_l2, recon_h1 = self._recon_terms(state, sd, Rv, Jv)

        if state.n == 0 or self._prev is None:
            ind = StepIndicators(state.n, state.t, None,
                                 recon_l2=recon_l2, recon_h1=recon_h1)
            self._prev = {"state": state, "space": space,
                          "Rv": Rv, "Jv": Jv, "dvals": None}
            return ind

        prev = self._prev
        same_mesh = space is prev["space"]
        C = self.constants.value
        tau = state.tau

        if same_mesh:
            dR = (Rv - prev["Rv"]) / tau
            dJ = (Jv - prev["Jv"]) / tau
            rate_space = C(6, 2) * np.sqrt(sd.bulk_l2_sq(dR, 4)) \
                + C(10, 2) * np.sqrt(sd.edge_l2_sq(dJ, 3))
            rate_changed = 0.0

            ops = space_operators(space)
            d = state.elliptic.coeffs - prev["state"].elliptic.coeffs
            base = float(np.sqrt(d @ (ops.mass @ d)))

            dvals = self._load_defect_values(sd, state)
            data_space = (C(3, 1) / np.sqrt(self.alpha)) \
                * np.sqrt(sd.data_l2_sq(dvals, 2))
            if state.n >= 2 and prev["dvals"] is not None:
                dd = (dvals - prev["dvals"]) / tau
                data_space_rate = (C(3, 1) / np.sqrt(self.alpha)) \
                    * np.sqrt(sd.data_l2_sq(dd, 2))
            elif state.n >= 2:
                data_space_rate = self._data_rate_generic(state, prev["state"])
            else:
                data_space_rate = 0.0
        else:
            rate_space, rate_changed, base, data_space, dvals = \
                self._cross_mesh_terms(state, prev["state"], sd)
            data_space_rate = self._data_rate_generic(state, prev["state"]) \
                if state.n >= 2 else 0.0

        data_time_l1, data_time_l2 = self._data_time(sd, state)

        ind = StepIndicators(
            state.n, state.t, tau,
            recon_l2=recon_l2, recon_h1=recon_h1, rate_space=rate_space,
            rate_space_changed=rate_changed,
            data_space=data_space, data_space_rate=data_space_rate,
            data_time_l1=data_time_l1, data_time_l2=data_time_l2,
            time_l1=0.5 * base, time_l2=base / np.sqrt(3.0))

        self._prev = {"state": state, "space": space,
                      "Rv": Rv, "Jv": Jv,
                      "dvals": dvals if same_mesh else None}
        return ind

    # -- cross-mesh machinery ----------------------------------------------------

    def _residual_values_on(self, state, emb, qp):
        coef = self.problem.coef
        strong = elementwise_elliptic_values(state.u, coef)
        vals = emb.values(state.elliptic, qp)
        return strong[emb.elems][:, None] - vals

    def _cross_mesh_terms(self, state, prev_state, sd):
        coef = self.problem.coef
        tau = state.tau
        deg = max(state.space.degree, prev_state.space.degree)
        pd = _PairData(prev_state.space.tri, state.space.tri, deg,
                       self.data_exactness)
        C = self.constants.value

        # backward difference of interior residuals on the common refinement
        R_cur = self._residual_values_on(state, pd.emb_cur, pd.qp)
        R_prev = self._residual_values_on(prev_state, pd.emb_prev, pd.qp)
        dR = (R_cur - R_prev) / tau

        J_cur = _embedded_flux_jump(state.u, coef, pd.frames,
                                    pd.emb_cur, pd.s_j)
        J_prev = _embedded_flux_jump(prev_state.u, coef, pd.frames,
                                     pd.emb_prev, pd.s_j)
        dJ = (J_cur - J_prev) / tau

        rate_changed = C(14, 2) * np.sqrt(pd.edge_sq(dJ, pd.edges_changed, 3))
        rate_space = C(6, 2) * np.sqrt(pd.bulk_sq(dR, pd.h_max, 4)) \
            + C(10, 2) * np.sqrt(pd.edge_sq(dJ, pd.edges_common, 3)) \
            + rate_changed

        # time increment of the elliptic images, across the mesh pair
        e_cur = pd.emb_cur.values(state.elliptic, pd.qp)
        e_prev = pd.emb_prev.values(prev_state.elliptic, pd.qp)
        diff = e_cur - e_prev
        cell = np.einsum("eq,q->e", diff * diff, pd.w) * pd.det
        base = float(np.sqrt(np.sum(cell)))

        # load projection defect, integrated on the common refinement
        src = self.problem.source
        f_vals = np.asarray(
            src(pd.phys_d[..., 0], pd.phys_d[..., 1], state.t), dtype=float)
        g = f_vals + pd.emb_prev.values(state.u_prev, pd.qp_d) / tau
        p = pd.emb_cur.values(state.f_bar, pd.qp_d) \
            + pd.emb_cur.values(state.u_prev_proj, pd.qp_d) / tau
        data_space = (C(3, 1) / np.sqrt(self.alpha)) \
            * np.sqrt(pd.data_sq(g - p, pd.h_cur, 2))
        return rate_space, rate_changed, base, data_space, None

    def _data_rate_generic(self, state, prev_state):
        """Backward rate of the load projection defect across three meshes."""
        if prev_state.u_prev is None:
            return 0.0
        coef = self.problem.coef
        C = self.constants.value
        tris = [state.space.tri, prev_state.space.tri,
                prev_state.u_prev.space.tri]
        ccr = coarsest_common_refinement_many(tris)
        qp, w = quad_triangle(self.data_exactness)
        m = affine_maps(ccr)
        phys = m.push(qp)
        src = self.problem.source

        emb_cur = MeshEmbedding(ccr, state.space.tri)
        emb_prev = MeshEmbedding(ccr, prev_state.space.tri)
        emb_pp = MeshEmbedding(ccr, prev_state.u_prev.space.tri)

        f_n = np.asarray(src(phys[..., 0], phys[..., 1], state.t), float)
        g_n = f_n + emb_prev.values(state.u_prev, qp) / state.tau
        p_n = emb_cur.values(state.f_bar, qp) \
            + emb_cur.values(state.u_prev_proj, qp) / state.tau

        f_p = np.asarray(src(phys[..., 0], phys[..., 1], prev_state.t), float)
        g_p = f_p + emb_pp.values(prev_state.u_prev, qp) / prev_state.tau
        p_p = emb_prev.values(prev_state.f_bar, qp) \
            + emb_prev.values(prev_state.u_prev_proj, qp) / prev_state.tau

        rate = ((g_n - p_n) - (g_p - p_p)) / state.tau
        d_prev = prev_state.space.tri.element_diameters()[emb_prev.elems]
        d_cur = state.space.tri.element_diameters()[emb_cur.elems]
        h_max = np.maximum(d_prev, d_cur)
        cell = np.einsum("eq,q->e", rate * rate, w) * m.det
        return (C(3, 1) / np.sqrt(self.alpha)) \
            * float(np.sqrt(np.sum(h_max ** 2 * cell)))


class EstimatorTotals:
    """Accumulates step indicators into the four error bounds.

    The bounds take computable surrogates for the initial reconstruction
    gap: ``init_l2``/``init_h1`` should hold the interpolation error of the
    initial data in the respective norm; the reconstruction estimator of
    step 0 is added internally.
    """

    def __init__(self, init_l2=0.0, init_h1=0.0):
        self.init_l2 = float(init_l2)
        self.init_h1 = float(init_h1)
        self.steps = []
        self.max_recon_l2 = 0.0
        self.max_recon_h1 = 0.0
        self.max_data_space = 0.0
        self._e1 = 0.0              # sum (time_l1 + data_time_l1 + rate) tau
        self._e2_sq = 0.0           # sum data_space^2 tau
        self._e1h_rate = 0.0        # sum data_space_rate tau, from step 2
        self._e2h_sq = 0.0          # sum (time_l2^2 + data_time_l2^2 + rate^2) tau
        self._recon_h1_pair_sq = 0.0
        self._rate_sq = 0.0         # sum rate^2 tau
        self._prev_recon_h1 = None
        # reporting accumulators
        self._recon_h1_sq_acc = 0.0
        self._recon_h1_zero_pending = None
        self.space_acc = 0.0
        self.time_l1_acc = 0.0
        self.data_time_l1_acc = 0.0
        self._data_space_sq_acc = 0.0

    def push(self, ind):
        self.steps.append(ind)
        self.max_recon_l2 = max(self.max_recon_l2, ind.recon_l2)
        self.max_recon_h1 = max(self.max_recon_h1, ind.recon_h1)
        if ind.n == 0:
            self._prev_recon_h1 = ind.recon_h1
            self._recon_h1_zero_pending = ind.recon_h1
            return self
        tau = ind.tau
        if self._recon_h1_zero_pending is not None:
            # the step-0 value enters the reported accumulation weighted by
            # the first step size
            self._recon_h1_sq_acc += self._recon_h1_zero_pending ** 2 * tau
            self._recon_h1_zero_pending = None
        self.max_data_space = max(self.max_data_space, ind.data_space)
        self._e1 += (ind.time_l1 + ind.data_time_l1 + ind.rate_space) * tau
        self._e2_sq += ind.data_space ** 2 * tau
        if ind.n >= 2:
            self._e1h_rate += ind.data_space_rate * tau
        self._e2h_sq += (ind.time_l2 ** 2 + ind.data_time_l2 ** 2
                         + ind.rate_space ** 2) * tau
        self._recon_h1_pair_sq += (ind.recon_h1 ** 2
                                   + self._prev_recon_h1 ** 2) * tau
        self._rate_sq += ind.rate_space ** 2 * tau
        self._prev_recon_h1 = ind.recon_h1

        self._recon_h1_sq_acc += ind.recon_h1 ** 2 * tau
        self.space_acc += ind.rate_space * tau
        self.time_l1_acc += ind.time_l1 * tau
        self.data_time_l1_acc += ind.data_time_l1 * tau
        self._data_space_sq_acc += ind.data_space ** 2 * tau
        return self

    # -- accumulated pieces -------------------------------------------------------

    @property
    def evolution_term(self):
        """The shared accumulation term of the lower-norm bounds."""
        return 4.0 * np.sqrt(self._e1 ** 2 + self._e2_sq)

    @property
    def evolution_term_high(self):
        e1h = 2.0 * self.max_data_space + self._e1h_rate
        return 4.0 * np.sqrt(e1h ** 2 + self._e2h_sq)

    @property
    def recon_h1_acc(self):
        """Reported accumulation of the H1 reconstruction estimator."""
        return float(np.sqrt(self._recon_h1_sq_acc))

    @property
    def data_space_acc(self):
        return float(np.sqrt(self._data_space_sq_acc))

    # -- the four bounds ------------------------------------------------------------

    @property
    def sup_l2_bound(self):
        """Bound for the supremum in time of the L2 error."""
        return self.init_l2 + self.max_recon_l2 + self.evolution_term

    @property
    def l2_h1_bound(self):
        """Bound for the L2-in-time full H1 error."""
        return self.init_l2 + float(np.sqrt(self._recon_h1_pair_sq)) \
            + self.evolution_term

    @property
    def h1_l2_bound(self):
        """Bound for the L2-in-time norm of the error's time derivative."""
        return self.init_h1 + self.evolution_term_high \
            + float(np.sqrt(self._rate_sq))

    @property
    def sup_h1_bound(self):
        """Bound for the supremum in time of the energy error."""
        return self.init_h1 + self.evolution_term_high + self.max_recon_h1
