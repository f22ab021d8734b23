import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blochnoise.rotations import bloch_vector, rotate_axis_xy
from blochnoise.sequences import build_sequence
from blochnoise.static_errors import (
    StaticError,
    cancellation_order,
    rotation_with_errors,
    static_error_metrics,
    zero_sensitivity_phase,
)

from conftest import X_HAT, Z_HAT

PI = np.pi
KINDS = ("single_pi", "corpse_pi", "scrofulous_pi", "bb1_pi")


class TestRotationWithErrors:
    @given(st.floats(-10, 10), st.floats(0, 10))
    def test_no_error_is_ideal(self, phi, psi):
        assert np.array_equal(rotation_with_errors(phi, psi, StaticError()), rotate_axis_xy(phi, psi))

    def test_amplitude_error_scales_angle(self):
        R = rotation_with_errors(0.0, PI, StaticError(epsilon=0.1))
        assert (R @ Z_HAT)[2] == pytest.approx(np.cos(1.1 * PI), abs=1e-15)

    @pytest.mark.parametrize("stretch", [False, True])
    def test_detuning_tilts_axis(self, stretch):
        R = rotation_with_errors(0.0, 1.0, StaticError(delta=0.1), stretch=stretch)
        w, v = np.linalg.eig(R)
        axis = np.real(v[:, np.argmin(np.abs(w - 1))])
        axis *= np.sign(axis[0])
        assert math.atan2(axis[2], math.hypot(axis[0], axis[1])) == pytest.approx(
            math.atan(0.1), abs=1e-12)

    def test_stretch_lengthens_angle(self):
        d = 0.3
        R = rotation_with_errors(0.0, 1.0, StaticError(delta=d), stretch=True)
        angle = math.acos((np.trace(R) - 1) / 2)
        assert angle == pytest.approx(math.sqrt(1 + d * d), rel=1e-12)

    def test_perturbative_flag(self):
        assert StaticError(0.1, 0.2).perturbative
        assert not StaticError(1.5, 0.0).perturbative


class TestMetrics:
    @pytest.mark.parametrize("kind", KINDS)
    def test_zero_error_bitwise_zero(self, kind):
        m = static_error_metrics(build_sequence(kind), bloch_vector(0.4, 1.2), StaticError())
        assert np.array_equal(m.j_st, np.zeros(3)) and m.w_zz == 0.0 and m.infidelity == 0.0

    @given(st.floats(-0.5, 0.5))
    def test_single_pi_axis_aligned(self, eps):
        m = static_error_metrics(build_sequence("single_pi"), X_HAT, StaticError(epsilon=eps))
        assert np.allclose(m.j_st, 0.0, atol=1e-15)

    def test_corpse_detuning_sixth_power(self):
        seq = build_sequence("corpse_pi")
        a = static_error_metrics(seq, X_HAT, StaticError(delta=1e-3)).w_zz
        b = static_error_metrics(seq, X_HAT, StaticError(delta=2e-3)).w_zz
        assert math.log2(b / a) == pytest.approx(6.0, abs=0.05)

    def test_metrics_definitions(self):
        m = static_error_metrics(build_sequence("bb1_pi"), bloch_vector(0.2, 0.9),
                                 StaticError(0.05, 0.03))
        assert m.w_zz == pytest.approx(m.j_st[2] ** 2)
        assert m.infidelity == pytest.approx(m.j_st @ m.j_st / 4)

    @given(st.sampled_from(KINDS), st.floats(-1.5, 1.5), st.floats(0, 2 * PI),
           st.floats(-0.1, 0.1), st.floats(-0.1, 0.1))
    def test_antipodal_symmetry(self, kind, th, ph, eps, delta):
        # metrics are quadratic in J_i, and (-theta, phi + pi) is -J_i
        seq, err = build_sequence(kind), StaticError(eps, delta)
        a = static_error_metrics(seq, bloch_vector(th, ph), err)
        b = static_error_metrics(seq, bloch_vector(-th, ph + PI), err)
        assert a.w_zz == pytest.approx(b.w_zz, abs=1e-12)
        assert a.infidelity == pytest.approx(b.infidelity, abs=1e-12)

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            static_error_metrics(build_sequence("single_pi"), [2.0, 0, 0], StaticError())


def order(kind, phi_i, which, metric="w_zz", **kw):
    return cancellation_order(build_sequence(kind), bloch_vector(0.0, phi_i), which, metric, **kw)


class TestOrders:
    def test_corpse_detuning_at_x(self):
        fit = order("corpse_pi", 0.0, "detuning")
        assert fit.order == 6 and fit.residual < 0.2 and not fit.ambiguous

    def test_corpse_detuning_at_y(self):
        fit = order("corpse_pi", PI / 2, "detuning")
        assert fit.order == 4 and fit.residual < 0.2

    def test_corpse_detuning_infidelity(self):
        assert order("corpse_pi", 0.0, "detuning", "infidelity").order == 6

    def test_bb1_detuning_exact(self):
        fit = order("bb1_pi", PI / 2, "detuning")
        assert fit.exact and fit.order == math.inf

    def test_bb1_amplitude_best_phase(self):
        seq = build_sequence("bb1_pi")
        phi = zero_sensitivity_phase(seq, "amplitude")
        assert phi / PI == pytest.approx(0.7902, abs=1e-4)
        fit = cancellation_order(seq, bloch_vector(0.0, phi), "amplitude")
        assert fit.order == 10 and fit.residual < 0.2
        assert cancellation_order(seq, bloch_vector(0.0, phi), "amplitude",
                                  "infidelity").order == 8

    def test_single_pi_amplitude(self):
        fit = order("single_pi", PI / 2, "amplitude")
        assert fit.order == 2 and fit.residual < 0.2

    def test_scrofulous_beats_single_pi_on_amplitude(self):
        for phi in (PI / 4, PI / 2):
            assert order("scrofulous_pi", phi, "amplitude").order >= \
                order("single_pi", phi, "amplitude").order

    @pytest.mark.parametrize("case", [("corpse_pi", 0.0, "detuning"),
                                      ("corpse_pi", PI / 2, "detuning"),
                                      ("single_pi", PI / 2, "amplitude"),
                                      ("scrofulous_pi", PI / 2, "amplitude")])
    def test_stable_under_halved_start(self, case):
        assert order(*case).order == order(*case, start=5e-4).order

    def test_ambiguous_fit_flagged(self):
        # at a rounded phase the leading term is tiny but nonzero: slope lands between orders
        fit = order("bb1_pi", 0.79 * PI, "amplitude")
        assert fit.ambiguous and fit.residual > 0.2

    def test_generalized_rabi_variant_loses_exact_cancellation(self):
        seq = build_sequence("bb1_pi")
        fit = cancellation_order(seq, bloch_vector(0.0, PI / 2), "detuning", stretch=True)
        assert not fit.exact

    def test_bad_arguments(self):
        seq = build_sequence("single_pi")
        with pytest.raises(ValueError):
            cancellation_order(seq, X_HAT, "phase")
        with pytest.raises(ValueError):
            cancellation_order(seq, bloch_vector(0, 1.0), "amplitude", metric="trace")
        with pytest.raises(ValueError):
            zero_sensitivity_phase(seq, "phase")
