"""Benchmark harness tests: problems, error norms, runner, CSV output.

The error-norm oracle here integrates the squared difference between the
discrete solution and the analytic one by direct per-element quadrature at
the same exactness the harness uses, so any disagreement is in the algebra
(the harness reduces every norm to cached scalar products), not in the
quadrature rule.
"""

import io
import math

import numpy as np
import pytest

import parabest.benchmark as bm
from parabest.benchmark import (
    ErrorTrack,
    PRESETS,
    RunPreset,
    STEP_COLUMNS,
    SUMMARY_COLUMNS,
    SUMMARY_VALUE_COLUMNS,
    eoc,
    fast_problem,
    plot_script_text,
    problem_by_label,
    run_series,
    run_single,
    slow_problem,
    summary_rows,
    write_steps_csv,
    write_summary_csv,
)
from parabest.evolution import Evolution
from parabest.fespace import (
    FeSpace,
    affine_maps,
    quad_triangle,
    reference_gradients,
    reference_values,
)
from parabest.mesh import square_macro


# -- benchmark problems ----------------------------------------------------------------


class TestProblems:
    def test_source_is_consistent_with_solution(self):
        # independent finite-difference check of the hand-derived source
        for prob in (slow_problem(), fast_problem()):
            rng = np.random.default_rng(7)
            assert prob.consistency_defect(rng, samples=40) <= 1e-6

    def test_solution_starts_at_zero(self):
        for prob in (slow_problem(), fast_problem()):
            x = np.linspace(-1, 1, 11)
            assert np.allclose(prob.solution(x, x, 0.0), 0.0)
            assert np.allclose(prob.initial(x, x), 0.0)

    def test_boundary_trace_is_small(self):
        prob = slow_problem()
        s = np.linspace(-1.0, 1.0, 101)
        worst = 0.0
        for t in (0.25, 0.5, 0.75):
            for xe, ye in ((s, np.full_like(s, 1.0)), (np.full_like(s, -1.0), s)):
                worst = max(worst, float(np.abs(prob.solution(xe, ye, t)).max()))
        assert worst < 1e-4

    def test_labels(self):
        assert problem_by_label("slow").label == "slow"
        assert problem_by_label("fast").label == "fast"
        with pytest.raises(ValueError):
            problem_by_label("medium")


# -- error norms against a dense oracle -------------------------------------------------


def dense_l2h1_sq(space, coeffs, t, problem, exactness, which):
    """Direct quadrature of the squared L2 / energy error of one function."""
    qp, w = quad_triangle(exactness)
    m = affine_maps(space.tri)
    phys = m.push(qp)
    x, y = phys[..., 0], phys[..., 1]
    tab = reference_values(space.degree, qp)
    vals = np.einsum("el,lq->eq", coeffs[space.element_dofs], tab)
    acc = 0.0
    if which in ("l2", "h1"):
        diff = vals - problem.solution(x, y, t)
        acc += float(np.einsum("eq,q,e->", diff ** 2, w, m.det))
    if which in ("energy", "h1"):
        gtab = reference_gradients(space.degree, qp)
        grads = np.einsum("eij,lqj->elqi", m.inv_t, gtab)
        gvals = np.einsum("el,elqd->eqd", coeffs[space.element_dofs], grads)
        ex = np.stack(exact_gradient(problem, x, y, t), axis=-1)
        d = gvals - ex
        A = problem.coef.array
        e2 = np.einsum("eqi,ij,eqj->eq", d, A, d)
        acc += float(np.einsum("eq,q,e->", e2, w, m.det))
    return acc


def exact_gradient(problem, x, y, t):
    g = np.exp(-bm.PROFILE_DECAY * (x ** 2 + y ** 2))
    T = problem.time_factor(t)
    c = -2.0 * bm.PROFILE_DECAY
    return T * c * x * g, T * c * y * g


def small_run(problem, degree=1, n=4, tau=0.2, steps=5):
    space = FeSpace(square_macro(-1, 1, n), degree)
    ev = Evolution(problem)
    states = [ev.initial_state(space)]
    for _ in range(steps):
        states.append(ev.advance(states[-1], tau))
    return states


class TestErrorNorms:
    def test_sup_norms_match_dense_sampling(self):
        prob = slow_problem()
        states = small_run(prob, degree=1, n=4, tau=0.2, steps=5)
        track = ErrorTrack(prob, exactness=8)
        for s in states:
            track.push(s)

        best_l2 = 0.0
        best_en = 0.0
        for a, b in zip(states, states[1:]):
            for lam in (0.0, 0.5, 1.0):
                t = a.t + lam * (b.t - a.t)
                c = (1 - lam) * a.u.coeffs + lam * b.u.coeffs
                best_l2 = max(best_l2, dense_l2h1_sq(a.space, c, t, prob, 8,
                                                     "l2"))
                best_en = max(best_en, dense_l2h1_sq(a.space, c, t, prob, 8,
                                                     "energy"))
        assert math.isclose(track.err_sup_l2, math.sqrt(best_l2),
                            rel_tol=1e-10)
        assert math.isclose(track.err_sup_energy, math.sqrt(best_en),
                            rel_tol=1e-10)

    def test_integral_norms_match_dense_quadrature(self):
        prob = slow_problem()
        for degree in (1, 2):
            states = small_run(prob, degree=degree, n=2, tau=0.25, steps=4)
            track = ErrorTrack(prob, exactness=8)
            for s in states:
                track.push(s)

            gx2, gw2 = bm._GAUSS2
            int_h1 = 0.0
            for a, b in zip(states, states[1:]):
                tau = b.t - a.t
                for lam, w in zip(gx2, gw2):
                    t = a.t + lam * tau
                    c = (1 - lam) * a.u.coeffs + lam * b.u.coeffs
                    int_h1 += w * tau * dense_l2h1_sq(a.space, c, t, prob, 8,
                                                      "h1")
            assert math.isclose(track.err_l2_h1, math.sqrt(int_h1),
                                rel_tol=1e-10)

            gx5, gw5 = bm._gauss01(5)
            int_rate = 0.0
            for a, b in zip(states, states[1:]):
                tau = b.t - a.t
                dc = (b.u.coeffs - a.u.coeffs) / tau
                for lam, w in zip(gx5, gw5):
                    t = a.t + lam * tau
                    qp, wq = quad_triangle(8)
                    m = affine_maps(a.space.tri)
                    phys = m.push(qp)
                    x, y = phys[..., 0], phys[..., 1]
                    tab = reference_values(degree, qp)
                    vals = np.einsum("el,lq->eq", dc[a.space.element_dofs],
                                     tab)
                    diff = vals - prob.solution_rate(x, y, t)
                    int_rate += w * tau * float(
                        np.einsum("eq,q,e->", diff ** 2, wq, m.det))
            assert math.isclose(track.err_h1_l2, math.sqrt(int_rate),
                                rel_tol=1e-10)

    def test_node_h1_accumulator_is_the_step_sum(self):
        prob = slow_problem()
        states = small_run(prob, degree=1, n=4, tau=0.25, steps=4)
        track = ErrorTrack(prob, exactness=8)
        for s in states:
            track.push(s)
        total = 0.0
        for s in states[1:]:
            total += s.tau * dense_l2h1_sq(s.space, s.u.coeffs, s.t, prob, 8,
                                           "h1")
        assert math.isclose(track.err_node_l2_h1, math.sqrt(total),
                            rel_tol=1e-10)

    def test_zero_coefficients_give_the_solution_norm(self):
        prob = slow_problem()
        space = FeSpace(square_macro(-1, 1, 4), 1)
        track = ErrorTrack(prob, exactness=8)
        acc = track.accumulators(space)
        nd = acc.node_data(np.zeros(space.n_dofs))
        t = 0.5
        T = prob.time_factor(t)
        assert math.isclose(acc.l2_err_sq(nd, t), T * T * acc.g_l2_sq,
                            rel_tol=1e-12)
        assert math.isclose(acc.energy_err_sq(nd, t),
                            T * T * acc.g_energy_sq, rel_tol=1e-12)

    def test_self_comparison_is_zero(self):
        # a state compared against its own values: blend with the same
        # vector at both ends and T scaled to zero
        prob = slow_problem()
        states = small_run(prob, degree=1, n=2, tau=0.5, steps=2)
        track = ErrorTrack(prob, exactness=8)
        acc = track.accumulators(states[0].space)
        nd = acc.node_data(states[-1].u.coeffs)
        forced = acc.l2_err_sq(nd, states[-1].t)
        direct = dense_l2h1_sq(states[-1].space, states[-1].u.coeffs,
                               states[-1].t, prob, 8, "l2")
        assert math.isclose(forced, direct, rel_tol=1e-9, abs_tol=1e-15)


# -- eoc ---------------------------------------------------------------------------------


class TestEoc:
    def test_exact_powers(self):
        hs = [0.5 / 2 ** i for i in range(4)]
        for p in (0.0, 1.5, 2.0, 3.0):
            vals = [h ** p for h in hs]
            got = eoc(vals, hs)
            assert np.allclose(got, p, atol=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            eoc([1.0, 0.0], [0.5, 0.25])
        with pytest.raises(ValueError):
            eoc([1.0, 0.5], [0.25, 0.5])
        with pytest.raises(ValueError):
            eoc([1.0, 0.5, 0.25], [0.5, 0.25])

    def test_non_halving_spacing(self):
        hs = [0.3, 0.1]
        vals = [h ** 2 for h in hs]
        assert math.isclose(eoc(vals, hs)[0], 2.0, rel_tol=1e-12)


# -- presets -----------------------------------------------------------------------------


class TestPresets:
    def test_table(self):
        p1 = PRESETS["1"]
        assert (p1.problem_label, p1.degree, p1.coupling) == ("slow", 1, 2)
        assert (p1.h0, p1.tau0, p1.runs) == (0.5, 0.04, 6)
        p2 = PRESETS["2"]
        assert (p2.problem_label, p2.degree, p2.coupling) == ("fast", 1, 1)
        assert (p2.h0, p2.tau0, p2.runs) == (0.25, 0.01, 5)
        p3a, p3b = PRESETS["3a"], PRESETS["3b"]
        assert p3a.degree == 1 and p3b.degree == 2
        assert p3a.coupling == p3b.coupling == 3
        assert p3a.h0 == p3b.h0 == 0.125
        assert PRESETS["3"] is PRESETS["3b"]
        p4 = PRESETS["4"]
        assert (p4.problem_label, p4.degree, p4.coupling) == ("fast", 2, 2)
        assert (p4.h0, p4.tau0, p4.runs) == (0.125, 0.02, 4)

    def test_step_coupling(self):
        p = PRESETS["1"]
        assert math.isclose(p.step_size(p.h0), p.tau0, rel_tol=1e-15)
        assert math.isclose(p.step_size(p.h0 / 2), p.tau0 / 4,
                            rel_tol=1e-15)
        p2 = PRESETS["2"]
        assert math.isclose(p2.step_size(p2.h0 / 4), p2.tau0 / 4,
                            rel_tol=1e-15)

    def test_mesh_sizes_halve(self):
        p = PRESETS["4"]
        hs = p.mesh_sizes()
        assert len(hs) == p.runs
        assert np.allclose(np.diff(np.log2(hs)), -1.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            RunPreset("x", "slow", 3, 1, 0.5, 0.1, 2)
        with pytest.raises(ValueError):
            RunPreset("x", "slow", 1, 1, 0.5, 0.1, 0)

    def test_step_count_rounding(self):
        # tau that does not divide the horizon is shrunk, never stretched
        assert bm._step_count(1.0, 0.08) == 13
        assert bm._step_count(1.0, 0.04) == 25
        assert bm._step_count(1.0, 0.1) == 10
        assert bm._step_count(1.0, 2.0) == 1

    def test_mesh_for_spacing(self):
        tri = bm._mesh_for_spacing(0.5)
        assert tri.element_count == 2 * 4 * 4
        with pytest.raises(ValueError):
            bm._mesh_for_spacing(0.3)


# -- the runner --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def tiny_series():
    return run_series("slow", 1, 2, 0.5, 0.1, 2)


class TestRunner:
    def test_row_shape(self, tiny_series):
        res = tiny_series[0]
        assert res.steps == 10
        assert len(res.rows) == res.steps + 1
        assert set(res.rows[0]) == set(STEP_COLUMNS)
        assert res.final is res.rows[-1]
        assert math.isclose(res.tau, 0.1, rel_tol=1e-15)

    def test_first_row_is_the_zero_state(self, tiny_series):
        row = tiny_series[0].rows[0]
        assert row["n"] == 0 and row["t"] == 0.0
        # u(0) = 0 and U^0 = 0, so every error and estimator term starts flat
        assert row["err_LinfL2"] == 0.0
        assert row["total_32"] == 0.0
        assert row["eff_LinfL2"] == 0.0

    def test_values_finite_positive_and_monotone(self, tiny_series):
        monotone = ["eta_rec_inf_max", "eta_rec_2_acc", "eta_space_acc",
                    "theta1_acc", "etaf1_acc", "gamma2_acc", "total_32",
                    "total_33", "high_total_H1L2", "high_total_LinfH1",
                    "err_LinfL2", "err_L2H1", "err_LinfH1", "err_H1L2"]
        for res in tiny_series:
            for c in SUMMARY_VALUE_COLUMNS:
                vals = [row[c] for row in res.rows]
                assert np.all(np.isfinite(vals)), c
                assert all(v > 0 for v in vals[1:]), c
            for c in monotone:
                vals = [row[c] for row in res.rows]
                assert all(b >= a - 1e-14 for a, b in zip(vals, vals[1:])), c

    def test_scheme_identities_hold(self, tiny_series):
        for res in tiny_series:
            assert res.max_defect <= 1e-10
            assert res.max_elliptic_gap <= 1e-8
            assert res.max_changed_rate == 0.0     # no schedule, no change

    def test_errors_shrink_across_runs(self, tiny_series):
        a, b = tiny_series
        assert b.final["err_LinfL2"] < a.final["err_LinfL2"]
        assert b.final["err_L2H1"] < a.final["err_L2H1"]

    def test_quadrature_refinement_stability(self):
        base = run_single(slow_problem(), 1, 0.5, 0.25)
        fine = run_single(slow_problem(), 1, 0.5, 0.25,
                          error_exactness=16, data_exactness=16,
                          load_exactness=16)
        for c in ("err_LinfL2", "err_L2H1", "err_LinfH1", "err_H1L2"):
            a, b = base.final[c], fine.final[c]
            assert abs(a - b) <= 1e-3 * abs(b), c


class TestSchedule:
    def test_mesh_change_runs_and_activates_changed_term(self):
        schedule = {2: ("refine", 0.3), 3: ("coarsen",)}
        res = run_single(slow_problem(), 1, 0.5, 0.25, schedule=schedule)
        assert res.steps == 4
        assert res.max_changed_rate > 0.0
        assert res.max_defect <= 1e-10
        vals = [row["total_32"] for row in res.rows]
        assert all(b >= a - 1e-14 for a, b in zip(vals, vals[1:]))

    def test_coarsen_without_refine_fails(self):
        with pytest.raises(ValueError):
            run_single(slow_problem(), 1, 0.5, 0.5, schedule={1: ("coarsen",)})

    def test_unknown_action_fails(self):
        with pytest.raises(ValueError):
            run_single(slow_problem(), 1, 0.5, 0.5, schedule={1: ("smooth",)})


# -- CSV emission ------------------------------------------------------------------------


class TestCsv:
    def test_steps_schema_and_determinism(self, tiny_series):
        buf1, buf2 = io.StringIO(), io.StringIO()
        write_steps_csv(buf1, tiny_series)
        rerun = run_series("slow", 1, 2, 0.5, 0.1, 2)
        write_steps_csv(buf2, rerun)
        assert buf1.getvalue() == buf2.getvalue()

        lines = buf1.getvalue().splitlines()
        assert lines[0].split(",") == STEP_COLUMNS
        n_rows = sum(len(r.rows) for r in tiny_series)
        assert len(lines) == 1 + n_rows
        sample = lines[1].split(",")
        assert sample[0] == "run1"
        float(sample[6])                    # parses

    def test_summary_schema(self, tiny_series):
        buf = io.StringIO()
        write_summary_csv(buf, tiny_series)
        lines = buf.getvalue().splitlines()
        assert lines[0].split(",") == SUMMARY_COLUMNS
        assert len(lines) == 1 + len(tiny_series)

        rows = summary_rows(tiny_series)
        # eoc columns look toward the next run and are blank on the last row
        assert rows[-1]["eoc_err_LinfL2"] == ""
        got = rows[0]["eoc_err_LinfL2"]
        a = tiny_series[0].final["err_LinfL2"]
        b = tiny_series[1].final["err_LinfL2"]
        want = math.log(b / a) / math.log(tiny_series[1].h / tiny_series[0].h)
        assert math.isclose(got, want, rel_tol=1e-12)

    def test_float_formatting_round_trips(self, tiny_series):
        buf = io.StringIO()
        write_steps_csv(buf, tiny_series)
        line = buf.getvalue().splitlines()[-1]
        val = line.split(",")[STEP_COLUMNS.index("err_LinfL2")]
        assert float(val) == tiny_series[-1].final["err_LinfL2"]


class TestPlotScript:
    def test_emitted_script_compiles(self):
        text = plot_script_text("slow degree 1, tau ~ h^2")
        compile(text, "plot.py", "exec")
        assert "steps.csv" in text and "summary.csv" in text
        assert "@TITLE@" not in text

    def test_title_quoting(self):
        text = plot_script_text('weird "title" with \'quotes\'')
        compile(text, "plot.py", "exec")
