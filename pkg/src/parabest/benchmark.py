"""Manufactured-solution benchmarks, error norms, EOC and effectivities.

Two reference problems on the square [-1, 1]^2 with identity diffusion and
a Gaussian space profile: a slowly and a rapidly oscillating separable
solution, both vanishing at t = 0. Errors against the closed form are
measured in four norms (max-in-time L2, L2-in-time H1, max-in-time energy,
L2-in-time of the time derivative), with the numerical solution extended
piecewise linearly in time. A run series halves the mesh size run by run,
couples the step size through tau = c0 h^k, and reports experimental
orders of convergence and effectivity indices next to the estimator
bounds.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .assembly import (
    CoefficientMatrix,
    domain_integral,
    grad_load_vector,
    load_vector,
)
from .estimators import ConstantsTable, EstimatorTotals, EstimatorWorkspace
from .evolution import (
    Evolution,
    ParabolicProblem,
    SeparableSource,
    space_operators,
)
from .fespace import FeSpace, transfer
from .mesh import bisect_marked, coarsest_common_refinement, square_macro

ERROR_EXACTNESS = 8

PROFILE_DECAY = 10.0


def _profile(x, y):
    return np.exp(-PROFILE_DECAY * (x * x + y * y))


def _profile_stiff(x, y):
    """Negative Laplacian of the Gaussian profile."""
    r2 = x * x + y * y
    return (4.0 * PROFILE_DECAY - 4.0 * PROFILE_DECAY ** 2 * r2) \
        * np.exp(-PROFILE_DECAY * r2)


def _profile_grad(x, y):
    g = np.exp(-PROFILE_DECAY * (x * x + y * y))
    return np.stack([-2.0 * PROFILE_DECAY * x * g,
                     -2.0 * PROFILE_DECAY * y * g], axis=-1)


class BenchmarkProblem(ParabolicProblem):
    """Problem with known separable solution T(t) G(x, y), G a Gaussian.

    The source is the exact parabolic residual T'(t) G - T(t) Laplacian(G),
    so the continuous solution is available in closed form. The solution
    does not vanish identically on the boundary; its trace is below 1e-4
    in absolute size, orders below the discretization errors of interest,
    and the homogeneous Dirichlet condition is imposed regardless.
    """

    def __init__(self, label, time_factor, time_rate, final_time=1.0):
        self.label = str(label)
        self.time_factor = time_factor
        self.time_rate = time_rate
        source = SeparableSource([(time_rate, _profile),
                                  (time_factor, _profile_stiff)])
        super().__init__(
            source,
            lambda x, y: time_factor(0.0) * _profile(x, y),
            coef=CoefficientMatrix(),
            final_time=final_time)

    def solution(self, x, y, t):
        return self.time_factor(t) * _profile(x, y)

    def solution_rate(self, x, y, t):
        return self.time_rate(t) * _profile(x, y)

    def consistency_defect(self, rng=None, samples=20, dt=1e-5):
        """Finite-difference check that the source matches the solution.

        Returns the largest sampled value of |du/dt - div(grad u) - f|
        with central differences of step ``dt``, an independent guard for
        the hand-derived Laplacian in the source definition.
        """
        rng = np.random.default_rng(0) if rng is None else rng
        worst = 0.0
        dt = np.longdouble(dt)      # keeps stencil roundoff below truncation
        for _ in range(samples):
            x, y = (np.longdouble(v) for v in rng.uniform(-0.9, 0.9, size=2))
            t = np.longdouble(rng.uniform(float(dt),
                                          self.final_time - float(dt)))
            u = self.solution
            ut = (u(x, y, t + dt) - u(x, y, t - dt)) / (2 * dt)
            lap = (u(x + dt, y, t) + u(x - dt, y, t)
                   + u(x, y + dt, t) + u(x, y - dt, t)
                   - 4 * u(x, y, t)) / dt ** 2
            worst = max(worst, float(abs(ut - lap - self.source(x, y, t))))
        return worst


def slow_problem():
    return BenchmarkProblem(
        "slow",
        lambda t: np.sin(np.pi * t),
        lambda t: np.pi * np.cos(np.pi * t))


def fast_problem():
    return BenchmarkProblem(
        "fast",
        lambda t: 0.1 * np.sin(20.0 * np.pi * t),
        lambda t: 2.0 * np.pi * np.cos(20.0 * np.pi * t))


def problem_by_label(label):
    if label == "slow":
        return slow_problem()
    if label == "fast":
        return fast_problem()
    raise ValueError("unknown benchmark problem %r" % (label,))


# -- error measurement ---------------------------------------------------------------


class ErrorAccumulators:
    """Error-norm machinery of one space against the separable solution.

    All error integrals reduce to quadratic forms in the coefficient
    vector plus analytic profile integrals, so a whole run needs one mass
    and one stiffness product per accepted solution vector and the rest is
    scalar work. The profile integrals use the same fixed quadrature as
    the cross terms, making each norm a plain quadrature evaluation of
    the squared difference.
    """

    def __init__(self, problem, space, exactness=ERROR_EXACTNESS):
        self.problem = problem
        self.space = space
        ops = space_operators(space)
        self.mass = ops.mass
        self.stiff = ops.stiffness(problem.coef)
        self.b_val = load_vector(space, _profile, exactness=exactness)
        self.b_grad = grad_load_vector(space, _profile_grad, problem.coef,
                                       exactness=exactness)
        self.g_l2_sq = domain_integral(
            space.tri, lambda x, y: _profile(x, y) ** 2, exactness=exactness)
        A = problem.coef.array
        self.g_energy_sq = domain_integral(
            space.tri,
            lambda x, y: np.einsum("...i,ij,...j->...", _profile_grad(x, y),
                                   A, _profile_grad(x, y)),
            exactness=exactness)

    def node_data(self, coeffs):
        """Cached products of one solution vector."""
        return {
            "u": coeffs,
            "Mu": self.mass @ coeffs,
            "Ku": self.stiff @ coeffs,
            "bu": float(self.b_val @ coeffs),
            "gu": float(self.b_grad @ coeffs),
        }

    def l2_err_sq(self, nd, t):
        T = self.problem.time_factor(t)
        val = float(nd["u"] @ nd["Mu"]) - 2.0 * T * nd["bu"] \
            + T * T * self.g_l2_sq
        return max(val, 0.0)

    def energy_err_sq(self, nd, t):
        T = self.problem.time_factor(t)
        val = float(nd["u"] @ nd["Ku"]) - 2.0 * T * nd["gu"] \
            + T * T * self.g_energy_sq
        return max(val, 0.0)

    def h1_err_sq(self, nd, t):
        return self.l2_err_sq(nd, t) + self.energy_err_sq(nd, t)

    def _blend(self, nd0, nd1, w0, w1):
        return {
            "u": None,
            "uMu": w1 * w1 * float(nd1["u"] @ nd1["Mu"])
            + 2.0 * w0 * w1 * float(nd0["u"] @ nd1["Mu"])
            + w0 * w0 * float(nd0["u"] @ nd0["Mu"]),
            "uKu": w1 * w1 * float(nd1["u"] @ nd1["Ku"])
            + 2.0 * w0 * w1 * float(nd0["u"] @ nd1["Ku"])
            + w0 * w0 * float(nd0["u"] @ nd0["Ku"]),
            "bu": w1 * nd1["bu"] + w0 * nd0["bu"],
            "gu": w1 * nd1["gu"] + w0 * nd0["gu"],
        }

    def blend_l2_sq(self, nd0, nd1, w0, w1, t):
        T = self.problem.time_factor(t)
        b = self._blend(nd0, nd1, w0, w1)
        return max(b["uMu"] - 2.0 * T * b["bu"] + T * T * self.g_l2_sq, 0.0)

    def blend_energy_sq(self, nd0, nd1, w0, w1, t):
        T = self.problem.time_factor(t)
        b = self._blend(nd0, nd1, w0, w1)
        return max(b["uKu"] - 2.0 * T * b["gu"] + T * T * self.g_energy_sq,
                   0.0)

    def blend_h1_sq(self, nd0, nd1, w0, w1, t):
        T = self.problem.time_factor(t)
        b = self._blend(nd0, nd1, w0, w1)
        l2 = max(b["uMu"] - 2.0 * T * b["bu"] + T * T * self.g_l2_sq, 0.0)
        en = max(b["uKu"] - 2.0 * T * b["gu"] + T * T * self.g_energy_sq, 0.0)
        return l2 + en

    def rate_err_sq(self, nd0, nd1, tau, t):
        """Squared L2 distance of (u1 - u0)/tau to the solution rate at t."""
        Tp = self.problem.time_rate(t)
        duMdu = (float(nd1["u"] @ nd1["Mu"])
                 - 2.0 * float(nd0["u"] @ nd1["Mu"])
                 + float(nd0["u"] @ nd0["Mu"])) / tau ** 2
        bdu = (nd1["bu"] - nd0["bu"]) / tau
        return max(duMdu - 2.0 * Tp * bdu + Tp * Tp * self.g_l2_sq, 0.0)


_GAUSS2 = (np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)]),
           np.array([0.5, 0.5]))


def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


class ErrorTrack:
    """Running error norms of one evolution against the exact solution.

    Feed the initial state, then every accepted state in order. Max norms
    sample the time nodes and interval midpoints; integral norms use
    2-point Gauss per interval for the H1 error of the linear-in-time
    extension and 5-point Gauss for the time-derivative error, whose time
    dependence is analytic.
    """

    def __init__(self, problem, exactness=ERROR_EXACTNESS):
        self.problem = problem
        self.exactness = exactness
        self._acc = {}
        self.max_l2_sq = 0.0
        self.max_energy_sq = 0.0
        self.int_h1_sq = 0.0
        self.int_rate_sq = 0.0
        self.node_h1_sq = 0.0          # discrete step sum of the H1 error
        self._prev = None
        self._rate_times = _gauss01(5)

    def accumulators(self, space):
        acc = self._acc.get(id(space))
        if acc is None:
            acc = ErrorAccumulators(self.problem, space, self.exactness)
            self._acc[id(space)] = acc
        return acc

    def _common_frame(self, prev_state, state):
        """Both endpoint solutions expressed on one space."""
        if prev_state.space is state.space:
            acc = self.accumulators(state.space)
            return acc, acc.node_data(prev_state.u.coeffs), \
                acc.node_data(state.u.coeffs)
        tri = coarsest_common_refinement(prev_state.space.tri,
                                         state.space.tri)
        degree = max(prev_state.space.degree, state.space.degree)
        if tri == state.space.tri and degree == state.space.degree:
            space = state.space
        elif tri == prev_state.space.tri and degree == prev_state.space.degree:
            space = prev_state.space
        else:
            space = FeSpace(tri, degree)
        acc = self.accumulators(space)
        u0 = transfer(prev_state.u, space)
        u1 = transfer(state.u, space)
        return acc, acc.node_data(u0.coeffs), acc.node_data(u1.coeffs)

    def push(self, state):
        acc = self.accumulators(state.space)
        nd = acc.node_data(state.u.coeffs)
        self.max_l2_sq = max(self.max_l2_sq, acc.l2_err_sq(nd, state.t))
        self.max_energy_sq = max(self.max_energy_sq,
                                 acc.energy_err_sq(nd, state.t))
        if state.n == 0 or self._prev is None:
            self._prev = state
            return self

        prev = self._prev
        tau = state.tau
        cacc, nd0, nd1 = self._common_frame(prev, state)
        t0 = prev.t

        self.node_h1_sq += cacc.h1_err_sq(nd1, state.t) * tau

        mid_t = t0 + 0.5 * tau
        self.max_l2_sq = max(self.max_l2_sq,
                             cacc.blend_l2_sq(nd0, nd1, 0.5, 0.5, mid_t))
        self.max_energy_sq = max(
            self.max_energy_sq,
            cacc.blend_energy_sq(nd0, nd1, 0.5, 0.5, mid_t))

        xs, ws = _GAUSS2
        for x, w in zip(xs, ws):
            self.int_h1_sq += w * tau * cacc.blend_h1_sq(
                nd0, nd1, 1.0 - x, x, t0 + x * tau)

        xs, ws = self._rate_times
        for x, w in zip(xs, ws):
            self.int_rate_sq += w * tau * cacc.rate_err_sq(
                nd0, nd1, tau, t0 + x * tau)

        self._prev = state
        return self

    @property
    def err_sup_l2(self):
        return float(np.sqrt(self.max_l2_sq))

    @property
    def err_l2_h1(self):
        return float(np.sqrt(self.int_h1_sq))

    @property
    def err_sup_energy(self):
        return float(np.sqrt(self.max_energy_sq))

    @property
    def err_h1_l2(self):
        return float(np.sqrt(self.int_rate_sq))

    @property
    def err_node_l2_h1(self):
        return float(np.sqrt(self.node_h1_sq))


# -- run presets and the runner --------------------------------------------------------


class RunPreset:
    """One row of the benchmark parameter table."""

    def __init__(self, name, problem_label, degree, coupling, h0, tau0,
                 runs):
        self.name = str(name)
        self.problem_label = problem_label
        self.degree = int(degree)
        self.coupling = int(coupling)
        self.h0 = float(h0)
        self.tau0 = float(tau0)
        self.runs = int(runs)
        if self.degree not in (1, 2):
            raise ValueError("degree must be 1 or 2")
        if self.runs < 1:
            raise ValueError("need at least one run")

    def step_size(self, h):
        c0 = self.tau0 / self.h0 ** self.coupling
        return c0 * h ** self.coupling

    def mesh_sizes(self):
        return [self.h0 / 2 ** i for i in range(self.runs)]


PRESETS = {
    "1": RunPreset("1", "slow", 1, 2, 0.5, 0.04, 6),
    "2": RunPreset("2", "fast", 1, 1, 0.25, 0.01, 5),
    "3a": RunPreset("3a", "slow", 1, 3, 0.125, 0.08, 4),
    "3b": RunPreset("3b", "slow", 2, 3, 0.125, 0.08, 4),
    "4": RunPreset("4", "fast", 2, 2, 0.125, 0.02, 4),
}
PRESETS["3"] = PRESETS["3b"]


STEP_COLUMNS = [
    "run", "i", "n", "t", "h", "tau",
    "err_LinfL2", "err_L2H1", "err_LinfH1", "err_H1L2",
    "eta_rec_inf_max", "eta_rec_2_acc", "eta_space_acc", "theta1_acc",
    "etaf1_acc", "gamma2_acc",
    "total_32", "total_33", "high_total_H1L2", "high_total_LinfH1",
    "eff_LinfL2", "eff_L2H1",
]

SUMMARY_VALUE_COLUMNS = STEP_COLUMNS[6:]


class RunResult:
    """Everything measured in one run: per-step rows and final values.

    ``max_defect`` is the largest relative defect of the scheme's
    pointwise identity over all steps; ``max_elliptic_gap`` the largest
    relative disagreement between the independently computed discrete
    elliptic image and the one implied by the scheme's own vectors;
    ``max_changed_rate`` the largest changed-skeleton contribution of the
    space rate estimator (zero unless the mesh changed).
    """

    def __init__(self, label, index, h, tau, rows, seconds, max_defect,
                 steps, max_elliptic_gap=0.0, max_changed_rate=0.0):
        self.label = label
        self.index = index
        self.h = h
        self.tau = tau
        self.rows = rows
        self.seconds = seconds
        self.max_defect = max_defect
        self.steps = steps
        self.max_elliptic_gap = max_elliptic_gap
        self.max_changed_rate = max_changed_rate

    @property
    def final(self):
        return self.rows[-1]


def _mesh_for_spacing(h):
    s = 2.0 / h
    n = int(round(s))
    if n < 1 or abs(s - n) > 1e-9:
        raise ValueError("mesh size %g does not tile the square" % h)
    return square_macro(-1.0, 1.0, n)


def _step_count(final_time, tau_nominal):
    n = int(math.ceil(final_time / tau_nominal - 1e-12))
    return max(n, 1)


def _schedule_space(schedule, n, state, mesh_stack, degree):
    """Space for step n under a mesh-change schedule, or None to stay."""
    action = schedule.get(n)
    if action is None:
        return None
    kind = action[0]
    if kind == "refine":
        frac = float(action[1]) if len(action) > 1 else 0.25
        tri = state.space.tri
        cent = tri.points[tri.tris].mean(axis=1)
        r2 = (cent * cent).sum(axis=1)
        count = max(1, int(math.ceil(frac * tri.element_count)))
        marks = np.argsort(r2, kind="stable")[:count]
        mesh_stack.append(tri)
        return FeSpace(bisect_marked(tri, marks), degree)
    if kind == "coarsen":
        if not mesh_stack:
            raise ValueError("coarsen scheduled with no finer mesh on record")
        return FeSpace(mesh_stack.pop(), degree)
    raise ValueError("unknown schedule action %r" % (kind,))


def run_single(problem, degree, h, tau_nominal, label="run", index=1,
               constants=None, alpha=None, schedule=None,
               error_exactness=ERROR_EXACTNESS, data_exactness=8,
               load_exactness=8):
    """One evolution run with full error and estimator capture.

    ``schedule`` optionally maps step numbers to mesh-change actions
    ("refine", fraction) or ("coarsen",); without it the mesh never
    changes. Returns a ``RunResult`` whose rows follow the step CSV
    schema.
    """
    t_start = time.perf_counter()
    space = FeSpace(_mesh_for_spacing(h), degree)
    N = _step_count(problem.final_time, tau_nominal)
    tau = problem.final_time / N
    schedule = dict(schedule) if schedule else {}
    mesh_stack = []

    ev = Evolution(problem, load_exactness=load_exactness)
    ws = EstimatorWorkspace(problem, constants,
                            data_exactness=data_exactness, alpha=alpha)
    track = ErrorTrack(problem, exactness=error_exactness)

    state = ev.initial_state(space)
    ind0 = ws.step(state)
    track.push(state)
    acc0 = track.accumulators(space)
    nd0 = acc0.node_data(state.u.coeffs)
    init_l2 = float(np.sqrt(acc0.l2_err_sq(nd0, 0.0)))
    init_h1 = float(np.sqrt(acc0.energy_err_sq(nd0, 0.0)))
    totals = EstimatorTotals(init_l2=init_l2 + ind0.recon_l2,
                             init_h1=init_h1 + ind0.recon_h1)
    totals.push(ind0)

    rows = [_step_row(label, index, 0, 0.0, h, 0.0, track, totals)]
    max_defect = state.pointwise_defect or 0.0
    max_gap = 0.0
    max_changed = 0.0

    for n in range(1, N + 1):
        new_space = _schedule_space(schedule, n, state, mesh_stack, degree)
        state = ev.advance(state, tau, space=new_space)
        ind = ws.step(state)
        totals.push(ind)
        track.push(state)
        max_defect = max(max_defect, state.pointwise_defect)
        max_gap = max(max_gap, _elliptic_gap(state))
        max_changed = max(max_changed, ind.rate_space_changed)
        rows.append(_step_row(label, index, n, state.t, h, tau, track,
                              totals))

    seconds = time.perf_counter() - t_start
    return RunResult(label, index, h, tau, rows, seconds, max_defect, N,
                     max_elliptic_gap=max_gap, max_changed_rate=max_changed)


def _elliptic_gap(state):
    """Relative gap between the scheme-implied and solved elliptic images."""
    M = space_operators(state.space).mass
    implied = state.f_bar.coeffs - state.time_derivative.coeffs
    d = implied - state.elliptic.coeffs
    num = float(np.sqrt(d @ (M @ d)))
    e = state.elliptic.coeffs
    den = float(np.sqrt(e @ (M @ e)))
    return num / den if den > 0 else num


def _step_row(label, index, n, t, h, tau, track, totals):
    denom_sup = totals.max_recon_l2 + totals.space_acc + totals.time_l1_acc
    denom_int = totals.recon_h1_acc + totals.space_acc + totals.time_l1_acc
    eff_sup = track.err_sup_l2 / denom_sup if denom_sup > 0 else 0.0
    eff_int = track.err_node_l2_h1 / denom_int if denom_int > 0 else 0.0
    return {
        "run": label, "i": index, "n": n, "t": t, "h": h, "tau": tau,
        "err_LinfL2": track.err_sup_l2,
        "err_L2H1": track.err_l2_h1,
        "err_LinfH1": track.err_sup_energy,
        "err_H1L2": track.err_h1_l2,
        "eta_rec_inf_max": totals.max_recon_l2,
        "eta_rec_2_acc": totals.recon_h1_acc,
        "eta_space_acc": totals.space_acc,
        "theta1_acc": totals.time_l1_acc,
        "etaf1_acc": totals.data_time_l1_acc,
        "gamma2_acc": totals.data_space_acc,
        "total_32": totals.sup_l2_bound,
        "total_33": totals.l2_h1_bound,
        "high_total_H1L2": totals.h1_l2_bound,
        "high_total_LinfH1": totals.sup_h1_bound,
        "eff_LinfL2": eff_sup,
        "eff_L2H1": eff_int,
    }


def run_series(problem_label, degree, coupling, h0, tau0, runs,
               constants=None, alpha=None, schedule=None,
               error_exactness=ERROR_EXACTNESS, data_exactness=8,
               load_exactness=8, run_hook=None):
    """Halving-mesh run series; returns the list of ``RunResult``.

    ``run_hook``, when given, is called with each finished ``RunResult``
    (for progress reporting). The schedule, when given, applies to every
    run of the series.
    """
    preset = RunPreset("custom", problem_label, degree, coupling, h0, tau0,
                       runs)
    out = []
    for i, h in enumerate(preset.mesh_sizes(), start=1):
        problem = problem_by_label(problem_label)
        res = run_single(problem, degree, h, preset.step_size(h),
                         label="run%d" % i, index=i,
                         constants=constants, alpha=alpha,
                         schedule=schedule,
                         error_exactness=error_exactness,
                         data_exactness=data_exactness,
                         load_exactness=load_exactness)
        out.append(res)
        if run_hook is not None:
            run_hook(res)
    return out


def eoc(values, hs):
    """Experimental orders of convergence of a positive series.

    ``values[i]`` measured at mesh size ``hs[i]``; returns one order per
    consecutive pair.
    """
    values = [float(v) for v in values]
    hs = [float(h) for h in hs]
    if len(values) != len(hs):
        raise ValueError("need one mesh size per value")
    out = []
    for a, b, ha, hb in zip(values, values[1:], hs, hs[1:]):
        if a <= 0 or b <= 0:
            raise ValueError("EOC needs positive values")
        if not hb < ha:
            raise ValueError("mesh sizes must decrease")
        out.append(math.log(b / a) / math.log(hb / ha))
    return out


def _format(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_steps_csv(fh, results):
    fh.write(",".join(STEP_COLUMNS) + "\n")
    for res in results:
        for row in res.rows:
            fh.write(",".join(_format(row[c]) for c in STEP_COLUMNS) + "\n")


def summary_rows(results):
    """One row per run: final values plus EOC columns toward the next run."""
    hs = [res.h for res in results]
    rows = []
    for j, res in enumerate(results):
        row = {"run": res.label, "i": res.index, "h": res.h,
               "tau": res.tau, "steps": res.steps}
        final = res.final
        for c in SUMMARY_VALUE_COLUMNS:
            row[c] = final[c]
        for c in SUMMARY_VALUE_COLUMNS:
            key = "eoc_" + c
            if j + 1 < len(results):
                a, b = final[c], results[j + 1].final[c]
                if a > 0 and b > 0:
                    row[key] = math.log(b / a) / math.log(hs[j + 1] / hs[j])
                else:
                    row[key] = ""
            else:
                row[key] = ""
        rows.append(row)
    return rows


SUMMARY_COLUMNS = (["run", "i", "h", "tau", "steps"]
                   + SUMMARY_VALUE_COLUMNS
                   + ["eoc_" + c for c in SUMMARY_VALUE_COLUMNS])


def write_summary_csv(fh, results):
    fh.write(",".join(SUMMARY_COLUMNS) + "\n")
    for row in summary_rows(results):
        fh.write(",".join(_format(row[c]) for c in SUMMARY_COLUMNS) + "\n")


PLOT_SCRIPT = '''\
"""Render the convergence figure for @TITLE@ from the CSVs next to this file.

Four rows: error norms vs mesh size, estimator accumulations vs mesh
size, effectivity indices over time, and the estimator breakdown over
time on the finest run. Requires matplotlib.
"""

import csv
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(HERE, name), newline="") as fh:
        return list(csv.DictReader(fh))


def column(rows, key, convert=float):
    return [convert(r[key]) for r in rows]


def main():
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise SystemExit("matplotlib is required to render this figure")

    steps = read("steps.csv")
    summary = read("summary.csv")

    hs = column(summary, "h")
    fig, axes = plt.subplots(4, 2, figsize=(10, 16))

    errors = ["err_LinfL2", "err_L2H1", "err_LinfH1", "err_H1L2"]
    for key in errors:
        axes[0, 0].loglog(hs, column(summary, key), "o-", label=key)
    axes[0, 0].set_xlabel("h"); axes[0, 0].set_ylabel("error")
    axes[0, 0].legend(fontsize=7); axes[0, 0].invert_xaxis()

    for key in errors:
        vals = [r["eoc_" + key] for r in summary if r["eoc_" + key]]
        axes[0, 1].plot(range(1, len(vals) + 1),
                        [float(v) for v in vals], "o-", label=key)
    axes[0, 1].set_xlabel("run pair"); axes[0, 1].set_ylabel("EOC")
    axes[0, 1].legend(fontsize=7)

    ests = ["eta_rec_inf_max", "eta_rec_2_acc", "eta_space_acc",
            "theta1_acc", "etaf1_acc", "gamma2_acc"]
    for key in ests:
        axes[1, 0].loglog(hs, column(summary, key), "s-", label=key)
    axes[1, 0].set_xlabel("h"); axes[1, 0].set_ylabel("estimator")
    axes[1, 0].legend(fontsize=7); axes[1, 0].invert_xaxis()

    for key in ests:
        vals = [r["eoc_" + key] for r in summary if r["eoc_" + key]]
        axes[1, 1].plot(range(1, len(vals) + 1),
                        [float(v) for v in vals], "s-", label=key)
    axes[1, 1].set_xlabel("run pair"); axes[1, 1].set_ylabel("EOC")
    axes[1, 1].legend(fontsize=7)

    runs = sorted({r["run"] for r in steps}, key=lambda s: int(s[3:]))
    for run in runs:
        rows = [r for r in steps if r["run"] == run and int(r["n"]) >= 2]
        axes[2, 0].plot(column(rows, "t"), column(rows, "eff_LinfL2"),
                        label=run)
        axes[2, 1].plot(column(rows, "t"), column(rows, "eff_L2H1"),
                        label=run)
    for ax, ttl in ((axes[2, 0], "effectivity sup-L2"),
                    (axes[2, 1], "effectivity L2-H1")):
        ax.set_xlabel("t"); ax.set_title(ttl, fontsize=9)
        ax.legend(fontsize=6)

    fine = [r for r in steps if r["run"] == runs[-1] and int(r["n"]) >= 1]
    ts = column(fine, "t")
    for key in ("eta_rec_inf_max", "eta_rec_2_acc", "eta_space_acc",
                "theta1_acc", "etaf1_acc", "gamma2_acc"):
        axes[3, 0].semilogy(ts, column(fine, key), label=key)
    axes[3, 0].set_xlabel("t"); axes[3, 0].set_title("estimators, finest run",
                                                     fontsize=9)
    axes[3, 0].legend(fontsize=6)
    for key in ("total_32", "total_33", "high_total_H1L2",
                "high_total_LinfH1"):
        axes[3, 1].semilogy(ts, column(fine, key), label=key)
    axes[3, 1].set_xlabel("t"); axes[3, 1].set_title("bounds, finest run",
                                                     fontsize=9)
    axes[3, 1].legend(fontsize=6)

    fig.suptitle("@TITLE@")
    fig.tight_layout(rect=(0, 0, 1, 0.98))
    out = os.path.join(HERE, "figure.png")
    fig.savefig(out, dpi=150)
    print("wrote", out)


if __name__ == "__main__":
    main()
'''


def plot_script_text(title):
    safe = str(title).replace("@", "").replace('"', "'")
    return PLOT_SCRIPT.replace("@TITLE@", safe)
