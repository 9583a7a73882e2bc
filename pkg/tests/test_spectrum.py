from __future__ import annotations

import numpy as np
import pytest
from scipy.special import jn_zeros

from sublinear.corpus import builtin
from sublinear.grid import integrate, interval_grid, radial_grid
from sublinear.spectrum import (
    EigenError,
    component_eigenpairs,
    phi_q_slice,
    principal_eigenpair,
    t_star,
    transversality,
)
from sublinear.weight import constant_spec, sample_weight

PI = np.pi
# exp(-int_0^pi phi^2 log phi) with phi = sqrt(2/pi) sin x (mpmath, 30 digits)
T_STAR_UNIT = 1.5203469010662808
INT_PHI2_LOG_PHI = -0.41893853320467274


def _check_pair(pair, w):
    g = w.grid
    i0, i1 = pair.subdomain
    assert pair.lambda1 > 0
    assert np.all(pair.phi1.values[i0:i1] > 0)
    assert integrate(g, pair.phi1.values**2) == pytest.approx(1.0, abs=1e-8)
    assert pair.residual < 1e-8


class TestPrincipalEigenpair:
    def test_unit_weight(self, g_pi):
        w = sample_weight(constant_spec(1.0), g_pi)
        pair = principal_eigenpair(w)
        _check_pair(pair, w)
        assert abs(pair.lambda1 - 1.0) <= 1e-3
        exact = np.sqrt(2 / PI) * np.sin(g_pi.nodes)
        assert np.max(np.abs(pair.phi1.values - exact)) <= 1e-3

    def test_scaled_weight(self, g_pi):
        w1 = sample_weight(constant_spec(1.0), g_pi)
        w4 = sample_weight(constant_spec(4.0), g_pi)
        assert principal_eigenpair(w4).lambda1 == pytest.approx(
            principal_eigenpair(w1).lambda1 / 4, rel=1e-10
        )

    @pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
    def test_scaling_law_indefinite(self, g_pi, sine_modes, c):
        lam = principal_eigenpair(sample_weight(sine_modes, g_pi)).lambda1
        lamc = principal_eigenpair(sample_weight(sine_modes.scaled(c), g_pi)).lambda1
        assert lamc == pytest.approx(lam / c, rel=1e-8)

    def test_indefinite_needs_shift(self, g_pi):
        # strong negative part: power iteration first locks onto the negative end
        w = sample_weight(builtin("sine", {"freq": 3.0, "amp": 1.0}), g_pi)
        pair = principal_eigenpair(w)
        _check_pair(pair, w)

    def test_dead_core_components_match(self, w_dc):
        pairs = component_eigenpairs(w_dc)
        assert len(pairs) == 2
        for p in pairs:
            _check_pair(p, w_dc)
        assert pairs[0].lambda1 == pytest.approx(pairs[1].lambda1, rel=1e-8)

    def test_dead_core_grid_convergence(self, dc, g_sym):
        from sublinear.corpus import symmetric_grid

        lams = []
        for n in (499, 999, 1999):
            w = sample_weight(dc.weight, symmetric_grid(n))
            lams.append(component_eigenpairs(w)[1].lambda1)
        # successive differences shrink
        assert abs(lams[2] - lams[1]) < abs(lams[1] - lams[0])

    def test_domain_monotonicity(self, g_pi, w_modes):
        whole = principal_eigenpair(w_modes)
        i0, i1 = w_modes.components[0]
        nested = [(i0, i1), (i0 + 20, i1 - 20), (i0 + 60, i1 - 60)]
        lams = [principal_eigenpair(w_modes, s).lambda1 for s in nested]
        assert whole.lambda1 <= lams[0] <= lams[1] <= lams[2]

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_ball(self, dim):
        g = radial_grid(1.0, dim, 800)
        pair = principal_eigenpair(sample_weight(constant_spec(1.0), g))
        exact = {1: (PI / 2) ** 2, 2: jn_zeros(0, 1)[0] ** 2, 3: PI**2}[dim]
        assert pair.lambda1 == pytest.approx(exact, rel=1e-4)
        assert integrate(g, pair.phi1.values**2) == pytest.approx(1.0, abs=1e-8)

    def test_no_positive_part(self, g_pi):
        with pytest.raises(EigenError):
            principal_eigenpair(sample_weight(constant_spec(-1.0), g_pi))

    def test_bad_subdomain(self, w_modes):
        with pytest.raises(ValueError):
            principal_eigenpair(w_modes, (10, 5))


class TestTStar:
    def test_unit_weight_oracle(self, g_pi):
        w = sample_weight(constant_spec(1.0), g_pi)
        assert t_star(w) == pytest.approx(T_STAR_UNIT, rel=1e-5)

    def test_stable_across_resolution(self):
        vals = [t_star(sample_weight(constant_spec(1.0), interval_grid(0, PI, n))) for n in (500, 1000, 2000)]
        assert max(vals) - min(vals) < 5e-5 * T_STAR_UNIT

    @pytest.mark.parametrize("c", [0.5, 3.0, 10.0])
    def test_scale_invariance(self, w_modes, sine_modes, g_pi, c):
        assert t_star(sample_weight(sine_modes.scaled(c), g_pi)) == pytest.approx(t_star(w_modes), rel=1e-8)

    def test_slice_root(self, w_modes):
        assert abs(phi_q_slice(w_modes, t_star(w_modes))) <= 1e-10

    def test_slice_unit_log_step(self, w_modes):
        ts = t_star(w_modes)
        tr = transversality(w_modes)
        assert phi_q_slice(w_modes, np.e * ts) == pytest.approx(np.e * ts * tr, rel=1e-10)

    def test_slice_at_one(self, g_pi):
        w = sample_weight(constant_spec(1.0), g_pi)
        assert phi_q_slice(w, 1.0) == pytest.approx(INT_PHI2_LOG_PHI, rel=1e-5)

    def test_slice_increasing_near_root(self, w_modes):
        ts = t_star(w_modes)
        d = 1e-4 * ts
        assert phi_q_slice(w_modes, ts + d) > phi_q_slice(w_modes, ts - d)

    def test_slice_rejects_nonpositive(self, w_modes):
        with pytest.raises(ValueError):
            phi_q_slice(w_modes, 0.0)

    def test_transversality_failure_reported(self, g_pi):
        # for a genuine principal pair int a phi^2 = int |grad phi|^2 / lambda > 0,
        # so feed a pair on a weight whose sign makes the integral negative
        pos = principal_eigenpair(sample_weight(constant_spec(1.0), g_pi))
        neg = sample_weight(constant_spec(-1.0), g_pi)
        assert transversality(neg, pos) < 0
        with pytest.raises(EigenError):
            t_star(neg, pos)


class TestTransversality:
    def test_unit(self, g_pi):
        assert transversality(sample_weight(constant_spec(1.0), g_pi)) == pytest.approx(1.0, abs=1e-8)

    def test_four(self, g_pi):
        assert transversality(sample_weight(constant_spec(4.0), g_pi)) == pytest.approx(4.0, abs=1e-8)

    def test_dead_core_positive(self, w_dc):
        assert transversality(w_dc) > 0
