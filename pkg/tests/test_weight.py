from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sublinear.corpus import builtin, prop51_build, symmetric_grid
from sublinear.grid import interval_grid, radial_grid
from sublinear.weight import (
    WeightError,
    check_decay,
    constant_spec,
    parse_weight_spec,
    piecewise_spec,
    positive_components,
    sample_weight,
    solution_operator,
    tabulated_spec,
    WeightSpec,
)

PI = np.pi


class TestSampleWeight:
    def test_constant_single_component(self):
        g = interval_grid(0, PI, 100)
        w = sample_weight(constant_spec(1.0), g)
        assert w.components == ((0, 100),)
        assert w.has_positive_part

    def test_sin2x_half_domain(self):
        g = interval_grid(0, PI, 1000)
        w = sample_weight(builtin("sine", {"freq": 2.0}), g)
        assert len(w.components) == 1
        lo, hi = w.component_extent(0)
        assert lo == pytest.approx(0.0, abs=g.h)
        assert hi == pytest.approx(PI / 2, abs=g.h)

    def test_dead_core_components(self):
        # oracle: sign scan of -p''/p^q with the cubic solved independently
        # from the gluing system at r = 3: (c3, c2, c1, c0) = (-26/3, 28, -26, 28/3)
        xs = np.linspace(1.0, 2.0, 200001)[1:-1]
        p2 = 6 * (-26 / 3) * xs + 2 * 28
        right_start = xs[np.argmax(-p2 > 0)]
        assert right_start == pytest.approx(14 / 13, abs=1e-5)
        g = symmetric_grid(999)
        w = sample_weight(prop51_build(1 / 3).weight, g)
        assert len(w.components) == 2
        lo, hi = w.component_extent(1)
        assert lo == pytest.approx(right_start, abs=2 * g.h)
        assert hi == pytest.approx(2.0, abs=2 * g.h)
        llo, lhi = w.component_extent(0)
        assert (llo, lhi) == pytest.approx((-hi, -lo), abs=1e-12)

    def test_samples_match_spec(self):
        g = interval_grid(0, PI, 50)
        spec = builtin("sine_modes", {})
        w = sample_weight(spec, g)
        np.testing.assert_array_equal(w.values, spec(g.nodes))

    def test_domain_mismatch(self):
        with pytest.raises(WeightError):
            sample_weight(builtin("manufactured", {}), interval_grid(0, 4, 10))

    def test_non_finite(self):
        spec = tabulated_spec([0, 1], [1, 1])
        bad = piecewise_spec([{"interval": [0, 0.5], "expr": "constant", "params": {"value": 1}}])
        with pytest.raises(WeightError):
            sample_weight(bad, interval_grid(0, 1, 10))
        assert sample_weight(spec, interval_grid(0, 1, 10)).has_positive_part

    def test_component_refinement_jitter(self):
        spec = builtin("sine_modes", {})
        g1 = interval_grid(0, PI, 500)
        g2 = g1.refine(2)
        w1, w2 = sample_weight(spec, g1), sample_weight(spec, g2)
        assert len(w1.components) == len(w2.components)
        for k in range(len(w1.components)):
            a, b = w1.component_extent(k), w2.component_extent(k)
            assert abs(a[0] - b[0]) <= 2 * g1.h and abs(a[1] - b[1]) <= 2 * g1.h

    def test_zero_separates_components(self):
        assert positive_components(np.array([1.0, 0.0, 2.0, -1, 3, 3])) == [(0, 1), (2, 3), (4, 6)]


class TestParsing:
    def test_round_trip(self):
        for spec in (
            constant_spec(2.0),
            builtin("sine_modes", {"kappa": -0.1}),
            builtin("scaled", {"inner": {"builtin": "sine"}, "c": 3.0}),
            piecewise_spec(
                [
                    {"interval": [0, 1], "expr": "poly", "params": {"coeffs": [1, 0]}},
                    {"interval": [1, 2], "expr": "sin", "params": {}},
                ]
            ),
            tabulated_spec([0, 1, 2], [1, -1, 1]),
        ):
            again = parse_weight_spec(spec.descriptor)
            x = np.linspace(0.05, 1.95, 17)
            np.testing.assert_allclose(again(x), spec(x))

    def test_number(self):
        assert parse_weight_spec(3)(np.array([0.5]))[0] == 3.0

    @pytest.mark.parametrize(
        "obj",
        [
            "sin",
            {"nothing": 1},
            {"builtin": "nope"},
            {"builtin": "sine", "params": {"bogus": 1}},
            {"piecewise": []},
            {"piecewise": [{"interval": [0, 1], "expr": "tan"}]},
            {"piecewise": [{"interval": [0, 1], "expr": "sin"}, {"interval": [1.5, 2], "expr": "sin"}]},
            {"tabulated": {"x": [0, 0], "a": [1, 1]}},
        ],
    )
    def test_rejects(self, obj):
        with pytest.raises(WeightError):
            parse_weight_spec(obj)


class TestSolutionOperator:
    def test_constant_two(self):
        g = interval_grid(0, 1, 400)
        s = solution_operator(sample_weight(constant_spec(2.0), g))
        x = g.nodes
        np.testing.assert_allclose(s.field.values, x * (1 - x), atol=1e-13)
        assert s.positive and s.in_cone and s.classification == "P°"
        assert all(f < 0 for f in s.fluxes)

    def test_cosine_zero_mean_not_in_cone(self):
        g = interval_grid(-PI / 2, PI / 2, 1000)
        s = solution_operator(sample_weight(builtin("cosine_zero_mean", {}), g))
        exact = 0.5 * np.sin(g.nodes - PI / 2) ** 2
        assert np.max(np.abs(s.field.values - exact)) <= g.h**2
        assert s.positive and not s.in_cone
        assert s.classification == "positive-not-P°"
        np.testing.assert_allclose(s.fluxes, 0.0, atol=5 * g.h**2)

    def test_negative(self):
        g = interval_grid(0, 1, 400)
        s = solution_operator(sample_weight(constant_spec(-2.0), g))
        x = g.nodes
        np.testing.assert_allclose(s.field.values, -x * (1 - x), atol=1e-13)
        assert s.classification == "not-positive"

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, al, be):
        g = interval_grid(0, PI, 200)
        a, b = builtin("sine_modes", {}), builtin("sine", {"freq": 2.0})
        sa = solution_operator(sample_weight(a, g)).field.values
        sb = solution_operator(sample_weight(b, g)).field.values
        c = WeightSpec("sum", lambda x: al * a(x) + be * b(x), (0, PI))
        sc = solution_operator(sample_weight(c, g)).field.values
        scale = max(np.max(np.abs(sc)), np.max(np.abs(al * sa)), np.max(np.abs(be * sb)), 1e-300)
        assert np.max(np.abs(sc - al * sa - be * sb)) <= 1e-10 * scale

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.floats(0, 5), min_size=2, max_size=6))
    def test_nonnegative_weight_gives_nonnegative(self, vals):
        xs = np.linspace(0, 1, len(vals))
        g = interval_grid(0, 1, 100)
        s = solution_operator(sample_weight(tabulated_spec(xs, vals), g))
        assert np.all(s.field.values >= 0)

    def test_radial(self):
        g = radial_grid(1.0, 3, 300)
        s = solution_operator(sample_weight(constant_spec(6.0), g))
        np.testing.assert_allclose(s.field.values, 1 - g.nodes**2, atol=1e-12)
        assert s.in_cone


class TestDecay:
    def test_constant_alpha_zero(self):
        d = check_decay(sample_weight(constant_spec(1.0), interval_grid(0, 1, 200)), 0.0, 0.25)
        assert d.C == pytest.approx(1.0) and d.satisfied

    def test_distance_alpha_one(self):
        w = sample_weight(builtin("distance", {}), interval_grid(0, 1, 200))
        d = check_decay(w, 1.0, 0.25)
        assert d.C == pytest.approx(1.0) and d.satisfied

    def test_dead_core_weight_blow_up(self):
        w = sample_weight(prop51_build(1 / 3).weight, symmetric_grid(999))
        good = check_decay(w, -1.0 / 3.0, 0.5)
        bad = check_decay(w, 0.0, 0.5)
        assert good.satisfied and np.isfinite(good.C)
        assert not bad.satisfied and bad.ratio >= 1.5

    def test_rho0_range(self):
        w = sample_weight(constant_spec(1.0), interval_grid(0, 1, 50))
        with pytest.raises(ValueError):
            check_decay(w, 0.0, 0.6)
