"""Balloon-Windkessel model, BOLD readout and the linearized cascade."""

import math

import numpy as np
import pytest

from kurasync.errors import NonPhysiologicalState
from kurasync.hemodynamics import (
    EQUILIBRIUM,
    HemoParams,
    bold,
    equilibrium_jacobian,
    frequency_sweep,
    hemo_rhs,
    linearized_response,
    linearized_stages,
    simulate_bold,
)


class TestParams:
    def test_derived_constants(self):
        p = HemoParams()
        assert p.k1 == pytest.approx(7 * 0.34)
        assert p.k2 == 2.0
        assert p.k3 == pytest.approx(2 * 0.34 - 0.2)

    def test_validation(self):
        with pytest.raises(ValueError):
            HemoParams(e0=1.5)
        with pytest.raises(ValueError):
            HemoParams(tau_b=-1.0)


class TestRhs:
    def test_equilibrium_is_stationary(self):
        d = hemo_rhs(EQUILIBRIUM, 0.0, HemoParams())
        np.testing.assert_allclose(d, 0.0, atol=1e-15)

    def test_unit_drive_enters_signal_only(self):
        d = hemo_rhs(EQUILIBRIUM, 1.0, HemoParams())
        np.testing.assert_allclose(d, [1.0, 0.0, 0.0, 0.0], atol=1e-15)

    def test_outflow_exponent(self):
        """At v = 2 the outflow is 2**(1/alpha)."""
        p = HemoParams()
        state = np.array([0.0, 1.0, 2.0, 1.0])
        d = hemo_rhs(state, 0.0, p)
        expected_dv = (1.0 - 2.0 ** (1.0 / 0.33)) / 0.98
        assert d[2] == pytest.approx(expected_dv, rel=1e-12)
        assert 2.0 ** (1.0 / 0.33) == pytest.approx(8.1698, abs=5e-4)

    def test_positivity_guard(self):
        with pytest.raises(NonPhysiologicalState):
            hemo_rhs(np.array([0.0, -0.1, 1.0, 1.0]), 0.0, HemoParams())


class TestBold:
    def test_zero_at_equilibrium(self):
        assert bold(EQUILIBRIUM, HemoParams()) == 0.0

    def test_worked_value(self):
        """(v, q) = (1, 0.9): y = 0.02 (2.38*0.1 + 2*0.1 + 0.48*0) = 0.00876."""
        y = bold(np.array([0.0, 1.0, 1.0, 0.9]), HemoParams())
        assert y == pytest.approx(0.00876, abs=1e-12)

    def test_linear_in_one_minus_q_at_unit_volume(self):
        p = HemoParams()
        qs = np.linspace(0.5, 1.5, 7)
        ys = [bold(np.array([0.0, 1.0, 1.0, q]), p) for q in qs]
        slopes = np.diff(ys) / np.diff(qs)
        np.testing.assert_allclose(slopes, slopes[0], atol=1e-12)


class TestSimulateBold:
    def test_zero_drive_stays_at_equilibrium(self):
        t = np.arange(0.0, 100.0001, 1e-3)
        y = simulate_bold(t, np.zeros((len(t), 3)))
        assert np.abs(y).max() < 1e-10

    def test_step_reaches_linear_dc_gain(self):
        """A small step settles to about DC-gain * amplitude."""
        amp = 0.01
        t = np.arange(0.0, 60.0001, 1e-3)
        z = np.full((len(t), 1), amp)
        y = simulate_bold(t, z)
        dc = abs(linearized_response(0.0))
        assert y[-1, 0] == pytest.approx(dc * amp, rel=0.05)

    def test_sinusoid_amplitude_ratio_matches_linearization(self):
        """Small 0.1 Hz vs 60 Hz drives scale like the linearized gains."""
        amp = 1e-3
        t = np.arange(0.0, 80.0001, 1e-3)
        z_slow = amp * np.sin(2 * np.pi * 0.1 * t)
        y_slow = simulate_bold(t, z_slow[:, None])[t >= 40.0]
        a_slow = 0.5 * (y_slow.max() - y_slow.min())
        expected_slow = abs(linearized_response(0.1)) * amp
        assert a_slow == pytest.approx(expected_slow, rel=0.10)
        # the 60 Hz response is attenuated by orders of magnitude
        t_fast = np.arange(0.0, 20.00001, 1e-4)
        z_fast = amp * np.sin(2 * np.pi * 60.0 * t_fast)
        y_fast = simulate_bold(t_fast, z_fast[:, None])[t_fast >= 10.0]
        a_fast = 0.5 * (y_fast.max() - y_fast.min())
        assert a_fast < a_slow / 10.0

    def test_linearization_consistency(self):
        """For amplitude 1e-3 the nonlinear output tracks the linear model
        within 1% relative over 100 s."""
        from scipy.signal import lsim

        p = HemoParams()
        (a1, b1, c1), (a2, b2, c2) = linearized_stages(p)
        a = np.block([[a1, np.zeros((2, 2))], [b2 @ c1, a2]])
        b = np.vstack([b1, np.zeros((2, 1))])
        c = np.hstack([np.zeros((1, 2)), c2])
        t = np.arange(0.0, 100.0001, 1e-3)
        z = 1e-3 * np.sin(2 * np.pi * 0.05 * t) * (1 - np.exp(-t / 5.0))
        _, y_lin, _ = lsim((a, b, c, np.zeros((1, 1))), z, t)
        y_nl = simulate_bold(t, z[:, None])[:, 0]
        scale = np.abs(y_lin).max()
        assert np.abs(y_nl - y_lin).max() < 0.01 * scale

    def test_blowup_reported_with_time(self):
        t = np.arange(0.0, 5.0001, 1e-3)
        z = np.full((len(t), 1), -50.0)  # drives inflow negative
        with pytest.raises(NonPhysiologicalState) as exc:
            simulate_bold(t, z)
        assert exc.value.time is not None


class TestLinearized:
    def test_stages_hurwitz(self):
        (a1, _, _), (a2, _, _) = linearized_stages()
        assert np.all(np.linalg.eigvals(a1).real < 0)
        assert np.all(np.linalg.eigvals(a2).real < 0)

    def test_low_pass_by_factor_10(self):
        g_low = abs(linearized_response(0.1))
        g_high = abs(linearized_response(60.0))
        assert g_low > 10.0 * g_high

    def test_dc_gain_finite_nonzero(self):
        dc = abs(linearized_response(0.0))
        assert math.isfinite(dc) and dc > 0
        # analytic: (1/gamma_s) * stage-2 gain at s=0
        p = HemoParams()
        _, (a2, b2, c2) = linearized_stages(p)
        g2 = float(c2 @ np.linalg.solve(-a2, b2))
        assert dc == pytest.approx(abs(g2 / p.gamma_s), rel=1e-12)

    def test_monotone_decreasing_above_one_hz(self):
        sweep = frequency_sweep(np.logspace(0, 2, 40))
        mags = sweep[:, 1]
        assert np.all(np.diff(mags) < 0)

    def test_equilibrium_jacobian_matches_printed_blocks(self):
        """The 4x4 Jacobian reproduces the two printed 2x2 stages, including
        the -(1-alpha)/(tau alpha) entry and the beta(E0) input gain."""
        p = HemoParams()
        a, b = equilibrium_jacobian(p)
        (a1, b1, _), (a2, b2, _) = linearized_stages(p)
        np.testing.assert_allclose(a[:2, :2], a1, atol=1e-12)
        np.testing.assert_allclose(a[2:, 2:], a2, atol=1e-12)
        np.testing.assert_allclose(a[2:, 1], b2.ravel(), atol=1e-12)
        np.testing.assert_allclose(b[:2], b1.ravel(), atol=1e-12)
        assert a[3, 2] == pytest.approx(-(1 - p.alpha_s) / (p.tau_b * p.alpha_s), abs=1e-12)
        beta = (p.e0 + (1 - p.e0) * math.log(1 - p.e0)) / (p.tau_b * p.e0)
        assert a[3, 1] == pytest.approx(beta, abs=1e-12)

    def test_equilibrium_jacobian_matches_finite_differences(self):
        p = HemoParams()
        a, b = equilibrium_jacobian(p)
        h = 1e-7
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            col = (hemo_rhs(EQUILIBRIUM + e, 0.0, p) - hemo_rhs(EQUILIBRIUM - e, 0.0, p)) / (
                2 * h
            )
            np.testing.assert_allclose(col, a[:, k], atol=1e-6)
        dz = (hemo_rhs(EQUILIBRIUM, h, p) - hemo_rhs(EQUILIBRIUM, -h, p)) / (2 * h)
        np.testing.assert_allclose(dz, b, atol=1e-9)
