import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scattergate.core import EmitterParams, PulseParams
from scattergate.scattering import (OverlapIntegrals, SpectralProfile,
                                    coefficients_at, overlap_integrals)

IDEAL = EmitterParams(gamma1_wg=2.48, gamma2_wg=0.0,
                      gamma1_loss=0.0, gamma2_loss=0.0)
GAMMA = 2.48


def test_ideal_resonant_reflection_is_pi_shifted_mirror():
    amps = coefficients_at(IDEAL, 0.0)
    assert amps.r1 == pytest.approx(-1.0)
    assert amps.t1 == pytest.approx(0.0)
    assert amps.r2 == amps.t2 == 0.0


def test_half_width_detuning_halves_reflection():
    amps = coefficients_at(IDEAL, GAMMA / 2.0)
    assert abs(amps.r1) ** 2 == pytest.approx(0.5)


def test_off_resonant_reflection_suppression(reference_emitter):
    amps = coefficients_at(reference_emitter, 0.0)
    ratio = abs(amps.r1_off) ** 2 / abs(amps.r1) ** 2
    gamma, dh = reference_emitter.gamma_total_rad, reference_emitter.delta_h
    assert ratio == pytest.approx(gamma ** 2 / (gamma ** 2 + 4 * dh ** 2))
    # the ~0.1% off-resonant infidelity contribution
    assert ratio == pytest.approx(7.31e-4, rel=5e-3)


def test_probability_conservation_without_loss():
    # gamma1/gamma2 split but no loss: the four channels exhaust the photon
    params = EmitterParams(gamma1_wg=2.0, gamma2_wg=0.48,
                           gamma1_loss=0.0, gamma2_loss=0.0)
    for delta in np.linspace(-5 * GAMMA, 5 * GAMMA, 1000):
        amps = coefficients_at(params, delta)
        total = sum(abs(c) ** 2 for c in
                    (amps.r1, amps.t1, amps.r2, amps.t2))
        assert total == pytest.approx(1.0, abs=1e-12)


@given(delta=st.floats(min_value=-100.0, max_value=100.0,
                       allow_nan=False, allow_infinity=False))
def test_detuning_symmetry_of_reflection(delta):
    plus = coefficients_at(IDEAL, delta)
    minus = coefficients_at(IDEAL, -delta)
    assert abs(plus.r1) == pytest.approx(abs(minus.r1), rel=1e-12)


def test_spectral_profile_normalized():
    profile = SpectralProfile(center=0.0, sigma=0.25)
    grid = np.linspace(-4.0, 4.0, 20001)
    integral = np.trapezoid(profile.intensity(grid), grid)
    assert integral == pytest.approx(1.0, abs=1e-9)


def test_monochromatic_resonant_limit():
    pulse = PulseParams(sigma_o=1e-6 * GAMMA)
    overlaps = overlap_integrals(IDEAL, pulse)
    assert overlaps.i_res == pytest.approx(1.0, abs=1e-6)


def test_quadrature_vs_perturbative_at_tenth_linewidth():
    # oracle: adaptive quadrature at 1e-10 tolerance (frozen value below);
    # the residual is the quartic term ~ 3 (4 sigma^2/G^2)^2 = 4.8e-3
    pulse = PulseParams(sigma_o=GAMMA / 10.0)
    quad = overlap_integrals(IDEAL, pulse)
    pert = overlap_integrals(IDEAL, pulse, method="perturbative")
    assert quad.i_res == pytest.approx(0.9640405235765786, abs=1e-9)
    assert pert.i_res == pytest.approx(0.96, abs=1e-12)
    residual = quad.i_res - pert.i_res
    quartic = 3.0 * (4.0 * (pulse.sigma_o / GAMMA) ** 2) ** 2
    assert residual == pytest.approx(quartic, rel=0.2)


def test_quadrature_convergence_is_quartic():
    previous = None
    for frac in (0.05, 0.025, 0.0125):
        pulse = PulseParams(sigma_o=frac * GAMMA)
        quad = overlap_integrals(IDEAL, pulse)
        pert = overlap_integrals(IDEAL, pulse, method="perturbative")
        gap = abs(quad.i_res - pert.i_res)
        if previous is not None:
            assert previous / gap >= 8.0  # halving sigma shrinks >= 8x
        previous = gap


def test_off_resonant_overlap_bounded_by_lorentzian_tail(reference_emitter):
    bound = reference_emitter.gamma1_wg ** 2 / (
        reference_emitter.gamma_total_rad ** 2 + 4 * reference_emitter.delta_h ** 2)
    for frac in (0.05, 0.1, 0.2):
        pulse = PulseParams(sigma_o=frac * reference_emitter.gamma_total_rad)
        overlaps = overlap_integrals(reference_emitter, pulse)
        assert overlaps.i_off <= bound * (1.0 + 1e-3)


def test_spectral_diffusion_widens_like_quadrature_sum(reference_emitter):
    # diffusion by Hermite nodes must match folding sigma_e into the pulse
    direct = overlap_integrals(reference_emitter,
                               PulseParams(sigma_o=0.25, sigma_e=0.3))
    folded = overlap_integrals(
        reference_emitter,
        PulseParams(sigma_o=math.hypot(0.25, 0.3)))
    assert direct.i_res == pytest.approx(folded.i_res, abs=1e-9)
    assert direct.i_off == pytest.approx(folded.i_off, abs=1e-12)


def test_perturbative_validity_warning():
    with pytest.warns(UserWarning, match="perturbative"):
        overlap_integrals(IDEAL, PulseParams(sigma_o=GAMMA),
                          method="perturbative")


def test_transmitted_overlaps_complement_reflected():
    from scipy.integrate import quad

    params = EmitterParams(gamma1_wg=2.0, gamma2_wg=0.48,
                           gamma1_loss=0.0, gamma2_loss=0.0)
    pulse = PulseParams(sigma_o=0.25)
    overlaps = overlap_integrals(params, pulse)
    # the r2/t2 Raman channels carry the remaining resonant weight,
    # |r2|^2 + |t2|^2 = 2 G1 G2 / (G^2 + 4 d^2)
    raman = quad(
        lambda d: np.exp(-d * d / (2 * pulse.sigma_o ** 2))
        / (np.sqrt(2 * np.pi) * pulse.sigma_o)
        * 2.0 * 2.0 * 0.48 / (2.48 ** 2 + 4 * d * d),
        -10, 10, epsabs=1e-13)[0]
    total = overlaps.i_res + overlaps.i_trans_res + raman
    assert total == pytest.approx(1.0, abs=1e-6)


def test_overlap_bounds_validated():
    with pytest.raises(Exception):
        OverlapIntegrals(i_res=1.5, i_off=0.0, i_trans_res=0.0, i_trans_off=0.0)


def test_quadrature_failure_carries_estimate(monkeypatch):
    import scattergate.scattering as mod
    from scattergate.scattering import QuadratureError

    monkeypatch.setattr(mod, "quad", lambda *a, **k: (0.7, 1e-3))
    with pytest.raises(QuadratureError, match="did not converge") as excinfo:
        overlap_integrals(IDEAL, PulseParams(sigma_o=0.25))
    assert excinfo.value.estimate == pytest.approx(0.7)
    assert excinfo.value.error_bound == pytest.approx(1e-3)


@settings(max_examples=30, deadline=None)
@given(frac=st.floats(min_value=0.02, max_value=0.5))
def test_overlaps_are_probabilities(frac):
    pulse = PulseParams(sigma_o=frac * GAMMA)
    overlaps = overlap_integrals(IDEAL, pulse)
    for value in (overlaps.i_res, overlaps.i_off,
                  overlaps.i_trans_res, overlaps.i_trans_off):
        assert -1e-12 <= value <= 1.0 + 1e-12
