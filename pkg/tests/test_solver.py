from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sublinear.corpus import builtin
from sublinear.grid import interval_grid, solve_linear
from sublinear.solver import (
    NoGlobalSubsolution,
    SolveConfig,
    SolverError,
    apriori_upper,
    check_bounds,
    classify_positivity,
    component_subsolution,
    h1_norm,
    lower_floor_check,
    make_subsolution,
    monotone_iterate,
    newton_solve,
    relative_residual,
    residual,
    rounding_floor,
    sobolev_constant,
    supersolution,
)
from sublinear.weight import constant_spec, sample_weight, solution_operator

from conftest import assert_bounds

PI = np.pi


class TestResidual:
    def test_manufactured_second_order(self):
        errs = []
        for n in (499, 999):
            g = interval_grid(0, PI, n)
            w = sample_weight(builtin("manufactured", {"q": 0.5}), g)
            errs.append(np.max(np.abs(residual(w, 0.5, np.sin(g.nodes)).values)))
        assert errs[1] < g.h**2
        assert 3.5 <= errs[0] / errs[1] <= 4.5

    def test_linear_case(self, w_modes):
        s = solution_operator(w_modes).field
        assert relative_residual(w_modes, 0.0, s) <= 1e-10

    def test_zero_field(self, w_modes):
        assert np.all(residual(w_modes, 0.5, np.zeros(1000)).values == 0.0)

    def test_negative_rejected(self, w_modes):
        u = np.sin(w_modes.grid.nodes)
        u[3] = -1e-3
        with pytest.raises(ValueError):
            residual(w_modes, 0.5, u)

    def test_singular_needs_positive(self, w_modes):
        u = np.sin(w_modes.grid.nodes)
        u[0] = 0.0
        with pytest.raises(ValueError):
            residual(w_modes, -0.1, u)


class TestNewton:
    def test_manufactured(self, w_manufactured, g_pi):
        rep = newton_solve(w_manufactured, 0.5, 0.5 * np.sin(g_pi.nodes))
        assert_bounds(rep)
        assert rep.residual <= 1e-10
        assert np.max(np.abs(rep.solution.values - np.sin(g_pi.nodes))) <= g_pi.h**2
        assert rep.classification.kind == "P°"

    def test_fixed_point(self, w_manufactured, g_pi):
        first = newton_solve(w_manufactured, 0.5, np.sin(g_pi.nodes))
        again = newton_solve(w_manufactured, 0.5, first.solution)
        assert again.iterations <= 1
        assert np.max(np.abs(again.solution.values - first.solution.values)) <= 1e-12

    def test_dead_core_maximum_start(self, w_dc, dc, g_sym):
        u1, u2 = dc.u1_field(g_sym).values, dc.u2_field(g_sym).values
        z = np.maximum(u1, u2)
        rep = newton_solve(w_dc, 1 / 3, z)
        assert_bounds(rep)
        assert rep.classification.kind == "P°"
        assert np.all(rep.solution.values >= z - 1e-8)

    def test_polish_dead_core(self, w_dc, dc, g_sym):
        u1 = dc.u1_field(g_sym)
        rep = newton_solve(w_dc, 1 / 3, u1)
        assert_bounds(rep)
        assert rep.classification.kind == "dead-core"
        assert rep.method.endswith("+deadcore")
        assert np.max(np.abs(rep.solution.values - u1.values)) <= 50 * g_sym.h**2

    def test_radial_ball(self, g_ball3):
        w = sample_weight(constant_spec(1.0), g_ball3)
        rep = newton_solve(w, 0.5, 1 - g_ball3.nodes**2)
        assert_bounds(rep)
        assert rep.classification.kind == "P°"

    def test_finer_grid_rounding_floor(self):
        g = interval_grid(0, PI, 4000)
        w = sample_weight(builtin("manufactured", {"q": 0.5}), g)
        rep = newton_solve(w, 0.5, np.sin(g.nodes))
        assert_bounds(rep)
        assert rep.residual <= max(1e-10, rounding_floor(w, 0.5, rep.solution))
        assert np.max(np.abs(rep.solution.values - np.sin(g.nodes))) <= g.h**2

    def test_budget_exceeded(self, w_modes, g_pi):
        cfg = SolveConfig(max_iter=1, smoothing_retry=0)
        with pytest.raises(SolverError) as exc:
            newton_solve(w_modes, 0.6, 1e-3 * np.sin(g_pi.nodes) ** 4, cfg)
        assert exc.value.report is not None

    def test_rejects_bad_init(self, w_modes):
        with pytest.raises(ValueError):
            newton_solve(w_modes, 0.5, np.zeros(1000))
        with pytest.raises(ValueError):
            newton_solve(w_modes, 0.5, -np.ones(1000))

    def test_trivial_outcome(self):
        # a < 0 everywhere: only the trivial solution exists
        g = interval_grid(0, 1, 200)
        w = sample_weight(constant_spec(-1.0), g)
        rep = newton_solve(w, 0.5, np.sin(np.pi * g.nodes), SolveConfig(smoothing_retry=0))
        assert rep.outcome == "trivial-solution"
        assert rep.classification.kind == "trivial"

    @pytest.mark.parametrize("c", [0.5, 2.0])
    def test_scaling_covariance(self, sine_modes, g_pi, c):
        q = 0.6
        base = newton_solve(sample_weight(sine_modes, g_pi), q, np.sin(g_pi.nodes)).solution.values
        rep = newton_solve(sample_weight(sine_modes.scaled(c), g_pi), q, np.sin(g_pi.nodes))
        expect = c ** (1 / (1 - q)) * base
        assert np.max(np.abs(rep.solution.values - expect)) <= 1e-8 * np.max(expect)

    def test_singular_exponent(self, w_modes):
        s = solution_operator(w_modes).field
        rep = newton_solve(w_modes, -0.05, s)
        assert rep.converged and rep.residual <= 1e-10
        assert rep.classification.kind == "P°"

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolveConfig(tol_residual=0)
        with pytest.raises(ValueError):
            SolveConfig(backtrack=1.0)
        with pytest.raises(ValueError):
            SolveConfig(smoothing_retry=-1)


class TestSubSuper:
    def test_subsolution_q_to_zero(self, w_modes):
        s = solution_operator(w_modes).field.values
        psi = make_subsolution(w_modes, 1e-6).values
        assert np.max(np.abs(psi - s)) / np.max(s) < 1e-4

    def test_subsolution_constant_two(self):
        g = interval_grid(0, 1, 500)
        w = sample_weight(constant_spec(2.0), g)
        psi = make_subsolution(w, 0.5).values
        x = g.nodes
        np.testing.assert_allclose(psi, (0.5 * x * (1 - x)) ** 2, rtol=1e-10)
        assert np.max(residual(w, 0.5, psi).values) <= 1e-12

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.05, 0.95))
    def test_subsolution_exact_for_any_q(self, q):
        g = interval_grid(0, PI, 300)
        w = sample_weight(builtin("sine_modes", {}), g)
        psi = make_subsolution(w, q)
        r = residual(w, q, psi).values
        assert np.max(r) <= 1e-8 * np.max(np.abs(solve_linear(g, w.values).values))

    def test_no_global_subsolution(self, g_pi):
        w = sample_weight(builtin("sine", {"freq": 2.0}), g_pi)
        with pytest.raises(NoGlobalSubsolution):
            make_subsolution(w, 0.5)

    def test_component_subsolution(self, w_dc):
        for k in range(2):
            psi = component_subsolution(w_dc, 1 / 3, k)
            assert np.max(residual(w_dc, 1 / 3, psi).values) <= 1e-8 * np.max(psi.values)
            i0, i1 = w_dc.components[k]
            assert np.all(psi.values[:i0] == 0) and np.all(psi.values[i1:] == 0)

    def test_supersolution(self, w_modes):
        for q in (0.2, 0.5, 0.9):
            sup = supersolution(w_modes, q)
            assert np.min(residual(w_modes, q, sup).values) >= 0


class TestMonotone:
    @pytest.mark.parametrize("q", [0.3, 0.6])
    def test_bracketed_solution(self, w_modes, q):
        lo, hi = make_subsolution(w_modes, q), supersolution(w_modes, q)
        rep = monotone_iterate(w_modes, q, lo, hi)
        assert_bounds(rep)
        u = rep.solution.values
        assert np.all(u >= lo.values) and np.all(u <= hi.values)
        ref = newton_solve(w_modes, q, u).solution.values
        assert np.max(np.abs(u - ref)) <= 1e-8 * np.max(ref)

    def test_exact_bracket(self, w_modes, g_pi):
        sol = newton_solve(w_modes, 0.5, np.sin(g_pi.nodes)).solution
        rep = monotone_iterate(w_modes, 0.5, sol, sol)
        assert np.array_equal(rep.solution.values, sol.values)
        assert rep.iterations == 0

    def test_ordering_checked(self, w_modes):
        lo, hi = make_subsolution(w_modes, 0.5), supersolution(w_modes, 0.5)
        with pytest.raises(ValueError):
            monotone_iterate(w_modes, 0.5, hi, lo)

    def test_not_a_subsolution(self, w_modes):
        hi = supersolution(w_modes, 0.5)
        with pytest.raises(ValueError):
            monotone_iterate(w_modes, 0.5, 0.99 * hi.values, hi)

    def test_lower_floor(self, w_modes):
        q = 0.5
        rep = monotone_iterate(w_modes, q, make_subsolution(w_modes, q), supersolution(w_modes, q))
        ok, margin = lower_floor_check(w_modes, q, rep.solution)
        assert ok and margin >= -1e-8


class TestBounds:
    def test_monotone_in_q0(self, w_modes):
        vals = [apriori_upper(w_modes, q0) for q0 in (0.2, 0.5, 0.8, 0.95)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_homogeneity(self, g_pi):
        q0 = 0.5
        w = sample_weight(constant_spec(5.0), g_pi)
        w2 = sample_weight(constant_spec(10.0), g_pi)
        assert apriori_upper(w2, q0) == pytest.approx(2 ** (1 / (1 - q0)) * apriori_upper(w, q0), rel=1e-12)

    def test_sobolev_constant_sharp(self):
        # on (0, L) the sharp constant is sqrt(L/4), attained by the tent
        g = interval_grid(0, 2.0, 401)
        assert sobolev_constant(g) == pytest.approx(np.sqrt(2.0 / 4), rel=1e-12)
        tent = np.minimum(g.nodes, 2 - g.nodes)
        assert np.max(tent) == pytest.approx(sobolev_constant(g) * h1_norm(g, tent), rel=1e-12)

    def test_violations_flagged(self, w_modes, g_pi):
        sol = newton_solve(w_modes, 0.5, np.sin(g_pi.nodes)).solution
        huge = 1e8 * sol.values
        assert check_bounds(w_modes, 0.5, huge, classify_positivity(g_pi, huge))["upper"] is False
        small = 0.01 * sol.values
        assert check_bounds(w_modes, 0.5, small, classify_positivity(g_pi, small))["lower"] is False


class TestClassify:
    def test_sine(self, g_pi):
        assert classify_positivity(g_pi, np.sin(g_pi.nodes)).kind == "P°"

    def test_flat_end(self):
        g = interval_grid(0, 1, 500)
        x = g.nodes
        assert classify_positivity(g, x * (1 - x) ** 2).kind == "positive-not-P°"

    def test_dead_core(self, dc, g_sym):
        c = classify_positivity(g_sym, dc.u1_field(g_sym), atol=0.0)
        assert c.kind == "dead-core"
        (run,) = c.zero_runs
        assert run[0] == -2.0 and abs(run[1] + 1.0) <= 2 * g_sym.h

    def test_trivial(self, g_pi):
        assert classify_positivity(g_pi, np.zeros(1000)).kind == "trivial"

    def test_radial(self, g_ball3):
        assert classify_positivity(g_ball3, 1 - g_ball3.nodes**2).kind == "P°"


class TestUniqueness:
    @pytest.mark.parametrize("q", [0.3, 0.9])
    def test_multistart(self, w_modes, g_pi, q):
        x = g_pi.nodes / PI
        starts = [np.sin(PI * x), 10 * np.sin(PI * x) ** 2, 0.01 * x * (1 - x) ** 2,
                  x**0.5 * (1 - x) + 0.2 * np.sin(PI * x), 3 * np.sin(1.2 + np.cos(5 * PI * x)) ** 2 * x * (1 - x)]
        sols = []
        for s in starts:
            rep = newton_solve(w_modes, q, s)
            assert_bounds(rep)
            sols.append(rep.solution.values)
        ref = sols[0]
        for u in sols[1:]:
            assert np.max(np.abs(u - ref)) <= 1e-8 * np.max(ref)

    def test_nonuniqueness_dead_core(self, w_dc, dc, g_sym):
        u1 = newton_solve(w_dc, 1 / 3, dc.u1_field(g_sym)).solution.values
        u2 = newton_solve(w_dc, 1 / 3, dc.u2_field(g_sym)).solution.values
        u3 = newton_solve(w_dc, 1 / 3, np.maximum(u1, u2)).solution.values
        d = lambda a, b: np.max(np.abs(a - b))
        assert min(d(u1, u2), d(u1, u3), d(u2, u3)) > 0.1
