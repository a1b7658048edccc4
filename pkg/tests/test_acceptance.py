"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one line, ``ACCEPT-nn <label>: PASS/FAIL value=... target=...
+-tol``, then asserts.  Run with ``pytest tests/test_acceptance.py -v -s`` to
see the lines for passing criteria too.
"""

import math
import warnings

import numpy as np
import pytest

from scattergate.calibration import critical_photon_flux, extract_dephasing
from scattergate.core import EmitterParams, JointDensity, PulseParams, SpinDensity
from scattergate.metrics import (Contrasts, bell_fidelity, bell_state,
                                 bootstrap_concurrence, concurrence,
                                 conditional_fidelity_formula,
                                 contrasts_from_state, dephasing_from_visibility,
                                 fidelity_from_contrasts, photon_visibility,
                                 success_probability)
from scattergate.protocol import (ChannelConfig, depolarizing_rotation,
                                  driving_dephasing_prob, phase_damping,
                                  pure_dephasing_probability, readout_error,
                                  run_gate, scatter_timebin,
                                  scattering_success_prob)
from scattergate.core import RotationPulse, ScatterAmplitudes
from scattergate.scattering import overlap_integrals
from conftest import random_density

EMITTER = EmitterParams.from_total_rate(2.48, 14.7, gamma_dephase=0.092,
                                        kappa_flip=0.021, t2_star=23.2)
PULSE = PulseParams.from_duration(2.0, sigma_e=0.3, n_bar=0.0732)


def _check(index: int, label: str, value: float, target: float,
           tol: float) -> None:
    ok = abs(value - target) <= tol
    print(f"ACCEPT-{index:02d} {label}: {'PASS' if ok else 'FAIL'} "
          f"value={value:.6g} target={target:.6g} +-{tol:g}")
    assert ok, f"{label}: {value} not within {tol} of {target}"


def _check_flag(index: int, label: str, ok: bool, detail: str = "") -> None:
    print(f"ACCEPT-{index:02d} {label}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{label} failed: {detail}"


def _forced(**kwargs) -> ChannelConfig:
    base = dict(forced_r1=1.0 + 0.0j, forced_r1_off=0.0j)
    base.update(kwargs)
    return ChannelConfig(**base)


def test_accept_01_conditional_fidelity():
    overlaps = overlap_integrals(EMITTER, PULSE, dephasing_broadened=True)
    value = conditional_fidelity_formula(
        overlaps, pure_dephasing_probability(EMITTER))
    _check(1, "conditional fidelity", 100 * value, 96.2, 0.2)


def test_accept_02_pi_rotation_fidelity():
    pi_pulse = RotationPulse(angle=math.pi, duration=7.0)
    out = depolarizing_rotation(SpinDensity.spin_down(), pi_pulse, EMITTER)
    _check(2, "pi-rotation fidelity (T2*=23.2)", 100 * out.matrix[0, 0].real,
           91.6, 0.1)
    shorter = EmitterParams.from_total_rate(2.48, 14.7, kappa_flip=0.021,
                                            t2_star=21.4)
    out = depolarizing_rotation(SpinDensity.spin_down(), pi_pulse, shorter)
    _check(2, "pi-rotation fidelity (T2*=21.4)", 100 * out.matrix[0, 0].real,
           91.2, 0.1)


def test_accept_03_spin_flip_only_gate_fidelity():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        outcome = run_gate(EMITTER, PULSE, _forced(enable_spin_flip=True),
                           _with_budget=False)
    value = bell_fidelity(outcome.rho_heralded)
    _check(3, "spin-flip-only gate fidelity", 100 * value, 82.94, 0.05)


def test_accept_04_spin_flip_plus_readout():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        outcome = run_gate(EMITTER, PULSE,
                           _forced(enable_spin_flip=True,
                                   enable_readout_error=True,
                                   readout_fidelity=0.966),
                           _with_budget=False)
    value = bell_fidelity(outcome.rho_heralded)
    _check(4, "spin-flip + readout fidelity", 100 * value, 80.24, 0.05)


def test_accept_05_driving_dephasing_infidelity():
    assert EMITTER.cyclicity_transition == pytest.approx(14.7)
    p_sum = scattering_success_prob(EMITTER)
    fidelity = 0.5 * (1.0 + math.exp(-2.0 * PULSE.n_bar * p_sum))
    _check(5, "driving-dephasing infidelity", 100 * (1.0 - fidelity),
           6.34, 0.05)


def test_accept_06_overall_budget():
    channels = ChannelConfig(enable_pure_dephasing=True, enable_spin_flip=True,
                             enable_driving_dephasing=True,
                             enable_readout_error=True)
    outcome = run_gate(EMITTER, PULSE, channels)
    product = 1.0
    for _, factor in outcome.budget:
        product *= factor
    _check(6, "budget product", 100 * product, 72.3, 0.3)
    exact = bell_fidelity(outcome.rho_heralded)
    _check(6, "exact pipeline vs product", 100 * abs(exact - product),
           0.0, 1.5)


def test_accept_07_success_probability():
    value = success_probability(EMITTER, PULSE)
    _check(7, "closed-form success probability", 100 * value, 33.3, 0.3)


def test_accept_08_visibility_and_inverse():
    vis = photon_visibility(EMITTER)
    _check(8, "visibility intercept", vis.linear, 0.926, 0.001)
    recovered = dephasing_from_visibility(0.926, 2.48)
    _check(8, "dephasing rate from intercept", recovered, 0.092, 0.001)
    # measured-data path: least-squares intercept reproduces the same rate
    points = [(n, vis.linear - 0.55 * n) for n in np.linspace(0.0, 0.4, 9)]
    fit = extract_dephasing(points, gamma_total=2.48)
    _check(8, "dephasing rate from fit", fit.gamma_d, 0.092, 0.001)


def test_accept_09_photon_number():
    pulse = PulseParams.from_duration(2.0)
    n_bar = 0.0496 * 0.2976 * pulse.t_pulse * 2.48
    _check(9, "mean photon number", n_bar, 0.0732, 0.0002)
    _check(9, "critical photon flux", critical_photon_flux(EMITTER),
           0.2976, 0.0005)


def test_accept_10_measured_contrast_fidelity():
    contrasts = Contrasts(m_x=-0.588, m_y=0.573, m_z=2 * 0.907 - 1.0)
    _check(10, "measured-contrast fidelity",
           fidelity_from_contrasts(contrasts), 0.7438, 0.0001)


def test_accept_11a_channel_invariants():
    rng = np.random.default_rng(2024)
    amps = lambda r, ro: ScatterAmplitudes(r1=r, t1=0.0, r2=0.0, t2=0.0,
                                           r1_off=ro, t1_off=0.0,
                                           r2_off=0.0, t2_off=0.0)
    violations = 0
    pi_pulse = RotationPulse(angle=math.pi, duration=7.0)
    for _ in range(1000):
        joint = JointDensity(random_density(rng, 4))
        spin = SpinDensity(random_density(rng, 2))
        damped = phase_damping(joint, float(rng.random()))
        read = readout_error(joint, float(0.5 + 0.5 * rng.random()))
        heralded = scatter_timebin(joint, "early",
                                   amps(float(rng.random()),
                                        float(0.3 * rng.random())))
        rotated = depolarizing_rotation(spin, pi_pulse, EMITTER)
        for out, trace_ref in ((damped, joint.trace), (read, joint.trace),
                               (rotated, spin.trace)):
            if abs(out.trace - trace_ref) > 1e-10:
                violations += 1
            if np.linalg.eigvalsh(out.matrix).min() < -1e-12:
                violations += 1
        if heralded.trace > joint.trace + 1e-12:
            violations += 1
        if np.linalg.eigvalsh(heralded.matrix).min() < -1e-12:
            violations += 1
    _check_flag(11, "channel CP/trace invariants (1000 draws)",
                violations == 0, f"violations={violations}")


def test_accept_11b_quadrature_convergence_order():
    ideal = EmitterParams(gamma1_wg=2.48, gamma2_wg=0.0, gamma1_loss=0.0,
                          gamma2_loss=0.0)
    gaps = []
    for frac in (0.05, 0.025, 0.0125):
        pulse = PulseParams(sigma_o=frac * 2.48)
        quad = overlap_integrals(ideal, pulse).i_res
        pert = overlap_integrals(ideal, pulse, method="perturbative").i_res
        gaps.append(abs(quad - pert))
    orders = [math.log2(gaps[i] / gaps[i + 1]) for i in range(len(gaps) - 1)]
    _check_flag(11, "overlap convergence order >= 3.8",
                all(o >= 3.8 for o in orders),
                "orders=" + ",".join(f"{o:.3f}" for o in orders))


def test_accept_11c_fidelity_identity():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(500):
        diag = rng.dirichlet(np.ones(4))
        bound = math.sqrt(diag[1] * diag[2])
        coherence = rng.uniform(-bound, bound)
        matrix = np.diag(diag).astype(complex)
        matrix[1, 2] = matrix[2, 1] = coherence
        rho = JointDensity(matrix, normalized=True)
        gap = abs(fidelity_from_contrasts(contrasts_from_state(rho))
                  - bell_fidelity(rho))
        worst = max(worst, gap)
    _check_flag(11, "contrast fidelity identity (500 X-form states)",
                worst <= 1e-10, f"worst gap={worst:.2e}")


def test_accept_11d_werner_concurrence_curve():
    bell = np.outer(bell_state("phi_minus"), bell_state("phi_minus").conj())
    worst = 0.0
    for p in np.linspace(0.0, 1.0, 50):
        rho = JointDensity(p * bell + (1 - p) * np.eye(4) / 4.0,
                           normalized=True)
        worst = max(worst, abs(concurrence(rho)
                               - max(0.0, (3.0 * p - 1.0) / 2.0)))
    _check_flag(11, "Werner concurrence curve (50 points)", worst <= 1e-10,
                f"worst gap={worst:.2e}")


def test_accept_11e_bootstrap_scaling():
    bell = np.outer(bell_state("phi_minus"), bell_state("phi_minus").conj())
    p = 0.7
    rho = p * bell + (1 - p) * np.eye(4) / 4.0
    diag = np.real(np.diag(rho))
    stds = []
    for i, n in enumerate((1_000, 10_000, 100_000)):
        counts = {name: n * diag[j] for j, name in
                  enumerate(("e_up", "e_down", "l_up", "l_down"))}
        counts.update({"mid_x_plus": n * (1 - p) / 2,
                       "mid_x_minus": n * (1 + p) / 2,
                       "mid_y_plus": n * (1 + p) / 2,
                       "mid_y_minus": n * (1 - p) / 2})
        _, std = bootstrap_concurrence(counts, None, 800, seed=500 + i)
        stds.append(std)
    ratios = [stds[i] / stds[i + 1] for i in range(2)]
    ok = all(abs(r - math.sqrt(10.0)) <= 0.15 * math.sqrt(10.0)
             for r in ratios)
    _check_flag(11, "bootstrap std ~ 1/sqrt(N)", ok,
                "ratios=" + ",".join(f"{r:.3f}" for r in ratios))


def test_accept_12_heralding_immunity():
    import dataclasses
    channels = ChannelConfig()
    base_pulse = PulseParams(sigma_o=0.25)
    f0 = bell_fidelity(run_gate(EMITTER, base_pulse, channels,
                                _with_budget=False).rho_heralded)
    p0 = run_gate(EMITTER, base_pulse, channels,
                  _with_budget=False).success_prob
    worst_shift = 0.0
    ps_drop = True
    for sign in (+1.0, -1.0):
        pulse = dataclasses.replace(base_pulse, detuning=sign * 0.3,
                                    t_pulse=None)
        outcome = run_gate(EMITTER, pulse, channels, _with_budget=False)
        worst_shift = max(worst_shift,
                          abs(bell_fidelity(outcome.rho_heralded) - f0))
        ps_drop = ps_drop and outcome.success_prob < p0
    _check_flag(12, "heralded fidelity immune to +-sigma_e detuning",
                worst_shift < 1e-3 and ps_drop,
                f"max|dF|={100 * worst_shift:.4f}pp, P_s drops={ps_drop}")
