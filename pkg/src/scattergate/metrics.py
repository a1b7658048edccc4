"""Fidelity, contrasts, visibility, success probability, and concurrence.

Sign convention (documented, not physical): the photonic Pauli basis is
the standard one on (e, l) with sigma_z |e> = +|e>; the spin Paulis are
the standard ones read in the (down, up) ordering, i.e. Z_s = diag(-1, +1)
and Y_s = -sigma_y on the stored (up, down) axes.  The target state
alpha|e down> - beta|l up> then yields (m_x, m_y, m_z) = (-1, +1, +1), so
the correlated-outcome probability P_z = (1 + m_z)/2 is near one for a
good gate, and

    fidelity_from_contrasts(contrasts_from_state(rho)) == bell_fidelity(rho)

holds exactly.

All functions are pure.  The bootstrap takes an explicit seed; parallel
resampling shards must derive their generators from
``numpy.random.SeedSequence(seed).spawn(n)`` so results stay reproducible
regardless of scheduling.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (E_DOWN, E_UP, L_DOWN, L_UP, EmitterParams, JointDensity,
                   ParameterError, PulseParams)
from .protocol import (ChannelConfig, pure_dephasing_probability, run_gate)
from .scattering import OverlapIntegrals

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}
# spin operators carry the (down, up) relabeling: X -> X, Y -> -Y, Z -> -Z
_SPIN_SIGN = {"x": 1.0, "y": -1.0, "z": -1.0}

COUNT_OUTCOMES = ("e_up", "e_down", "l_up", "l_down")
CONTRAST_OUTCOMES = ("mid_x_plus", "mid_x_minus", "mid_y_plus", "mid_y_minus")


class MetricError(ValueError):
    """A metric was requested on a state outside its domain."""


def _correlation_operator(axis: str) -> np.ndarray:
    return np.kron(_PAULI[axis], _SPIN_SIGN[axis] * _PAULI[axis])


@dataclass(frozen=True)
class Contrasts:
    """Normalized two-qubit contrasts <sigma_i x sigma_i> and P_z."""

    m_x: float
    m_y: float
    m_z: float

    def __post_init__(self) -> None:
        for name in ("m_x", "m_y", "m_z"):
            value = getattr(self, name)
            if not -1.0 - 1e-9 <= value <= 1.0 + 1e-9:
                raise ParameterError(f"{name} must lie in [-1, 1] (got {value})")

    @property
    def p_z(self) -> float:
        return 0.5 * (1.0 + self.m_z)


def bell_state(target: str, theta_p: float = 0.0) -> np.ndarray:
    """Ideal Bell vector for the gate, parameterized by the qubit phase.

    ``phi_minus`` is the reflected-herald target alpha|e down> - beta|l up>;
    ``psi_minus`` the transmitted bracket; the ``_plus`` variants flip the
    relative sign.
    """
    alpha = 1.0 / math.sqrt(2.0)
    beta = cmath.exp(1j * theta_p) / math.sqrt(2.0)
    vec = np.zeros(4, dtype=complex)
    if target == "phi_minus":
        vec[E_DOWN], vec[L_UP] = alpha, -beta
    elif target == "phi_plus":
        vec[E_DOWN], vec[L_UP] = alpha, beta
    elif target == "psi_minus":
        vec[E_UP], vec[L_DOWN] = alpha, -beta
    elif target == "psi_plus":
        vec[E_UP], vec[L_DOWN] = alpha, beta
    else:
        raise MetricError(f"unknown Bell target {target!r}")
    return vec


def bell_fidelity(rho: JointDensity, target: str = "phi_minus",
                  theta_p: float = 0.0) -> float:
    """Overlap of the (possibly unnormalized) state with an ideal Bell state."""
    trace = rho.trace
    if trace <= 0.0:
        raise MetricError("no heralded weight: state trace is zero")
    vec = bell_state(target, theta_p)
    return float((vec.conj() @ rho.matrix @ vec).real / trace)


def conditional_fidelity_formula(overlaps: OverlapIntegrals,
                                 p_dephasing: float = 0.0,
                                 alpha_sq: float = 0.5) -> float:
    """Heralded-gate fidelity from overlap integrals.

    Without dephasing this is i_res / (i_res + i_off); the phonon-jump
    probability adds (|alpha|^4 + |beta|^4) P to the numerator and P to
    the denominator.
    """
    if not 0.0 <= alpha_sq <= 1.0:
        raise MetricError(f"alpha_sq must lie in [0, 1] (got {alpha_sq})")
    diag_weight = alpha_sq ** 2 + (1.0 - alpha_sq) ** 2
    denom = overlaps.i_res + overlaps.i_off + p_dephasing
    if denom <= 0.0:
        raise MetricError("conditional fidelity undefined: zero herald weight")
    return (overlaps.i_res + diag_weight * p_dephasing) / denom


def perturbative_conditional_fidelity(params: EmitterParams) -> float:
    """Small-error expansion 1 - gd/G - G^2/(4 delta_h^2)."""
    gamma = params.gamma_total_rad
    return 1.0 - params.gamma_dephase / gamma \
        - gamma ** 2 / (4.0 * params.delta_h ** 2)


def contrasts_from_state(rho: JointDensity) -> Contrasts:
    """Pauli-correlation contrasts of a normalized state.

    The equatorial contrasts correspond to middle-window interference of
    the two time bins combined with the matching spin projections.
    """
    matrix = rho.matrix if rho.normalized else rho.normalize().matrix
    values = {}
    for axis in ("x", "y", "z"):
        values[axis] = float(np.trace(matrix @ _correlation_operator(axis)).real)
    return Contrasts(m_x=values["x"], m_y=values["y"], m_z=values["z"])


def fidelity_from_contrasts(contrasts: Contrasts) -> float:
    """Bell fidelity estimator P_z/2 + (M_y - M_x)/4."""
    return 0.5 * contrasts.p_z + 0.25 * (contrasts.m_y - contrasts.m_x)


def success_probability(params: EmitterParams, pulse: PulseParams,
                        method: str = "closed_form") -> float:
    """Herald probability of the reflected gate.

    ``closed_form`` evaluates the perturbative expression

        P_s = (1/2)[1 - 4so^2/G^2 - 4se^2/G^2 - 2/(C+1)
                    - (2 gd/G)(1 - 1/(C+1)) - 2 g1/G
                    + (G^2/(4 dh^2))(1 - 1/(C+1) - g1/G)^2]

    with C the transition cyclicity; ``exact`` runs the gate pipeline with
    the pure-dephasing channel enabled and returns the heralded trace.
    """
    if method == "exact":
        channels = ChannelConfig(enable_pure_dephasing=True)
        return run_gate(params, pulse, channels, _with_budget=False).success_prob
    if method != "closed_form":
        raise MetricError(f"unknown success-probability method {method!r}")
    gamma = params.gamma_total_rad
    cyc = params.cyclicity_transition
    g1 = params.gamma1_loss
    gd = params.gamma_dephase
    inv = 1.0 / (cyc + 1.0)
    return 0.5 * (1.0
                  - 4.0 * pulse.sigma_o ** 2 / gamma ** 2
                  - 4.0 * pulse.sigma_e ** 2 / gamma ** 2
                  - 2.0 * inv
                  - (2.0 * gd / gamma) * (1.0 - inv)
                  - 2.0 * g1 / gamma
                  + (gamma ** 2 / (4.0 * params.delta_h ** 2))
                  * (1.0 - inv - g1 / gamma) ** 2)


@dataclass(frozen=True)
class Visibility:
    """Photon visibility of the reflected time-bin qubit.

    ``exact`` is the narrowband ratio i_res / (i_res + P_dephasing);
    ``linear`` the y-intercept approximation 1 - 2 gd/G used to extract
    the dephasing rate from measured data.
    """

    exact: float
    linear: float


def photon_visibility(params: EmitterParams,
                      pulse: PulseParams | None = None) -> Visibility:
    """Single-photon visibility limited by pure dephasing.

    Assumes the single-photon regime (n_bar ~ 0) and a probe much narrower
    than the linewidth; warnings fire outside that regime.  The exact
    ratio is evaluated at the narrowband limit where the derivation holds,
    so it always dominates the linear form.
    """
    gamma = params.gamma_total_rad
    if pulse is not None:
        if pulse.n_bar > 0.2:
            warnings.warn("visibility formula assumes n_bar ~ 0", stacklevel=2)
        if pulse.sigma_o > gamma / 5.0:
            warnings.warn("visibility formula assumes a narrowband probe",
                          stacklevel=2)
    gamma_d = params.gamma_total_deph
    i_res = (params.gamma1_wg / gamma_d) ** 2 * \
        4.0 * params.coupling_split1[0] * params.coupling_split1[1]
    prob = pure_dephasing_probability(params)
    return Visibility(exact=i_res / (i_res + prob),
                      linear=1.0 - 2.0 * params.gamma_dephase / gamma)


def dephasing_from_visibility(intercept: float, gamma_total: float) -> float:
    """Invert the linear visibility intercept: gd = G (1 - V0) / 2."""
    return 0.5 * gamma_total * (1.0 - intercept)


def _sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(matrix)
    values = np.clip(values, 0.0, None)
    return (vectors * np.sqrt(values)) @ vectors.conj().T


def concurrence(rho: JointDensity) -> float:
    """Wootters concurrence of the (normalized) two-qubit state.

    Uses the spin-flipped state rho~ = (sy x sy) rho* (sy x sy); the
    eigenvalues of rho rho~ are computed through the Hermitian form
    sqrt(rho) rho~ sqrt(rho) for numerical stability.  Degenerate
    eigenvalues need no special handling: max(0, .) absorbs the boundary.
    """
    matrix = rho.matrix if rho.normalized else rho.normalize().matrix
    eigenvalues = np.linalg.eigvalsh(matrix)
    if eigenvalues.min() < -1e-10:
        raise MetricError(
            f"concurrence requires a PSD state (min eigenvalue "
            f"{eigenvalues.min():.3e})")
    yy = np.kron(_PAULI["y"], _PAULI["y"])
    flipped = yy @ matrix.conj() @ yy
    root = _sqrt_psd(matrix)
    lam = np.linalg.eigvalsh(root @ flipped @ root)
    lam = np.sqrt(np.clip(lam, 0.0, None))[::-1]
    return float(max(0.0, lam[0] - lam[1:].sum()))


def density_from_counts(counts: dict, m_x: float, m_y: float) -> JointDensity:
    """X-form density matrix from Z-basis coincidences and contrasts.

    The diagonal comes from the normalized counts; the only coherence,
    Re rho_{e_down, l_up} = (m_x - m_y)/4 with zero imaginary part (any
    phase offset is absorbed upstream), is clamped to the positivity
    bound sqrt(p_ed * p_lu) so Poisson-fluctuating inputs always yield a
    physical state.
    """
    try:
        raw = np.array([float(counts[name]) for name in COUNT_OUTCOMES])
    except KeyError as exc:
        raise MetricError(f"missing coincidence outcome {exc.args[0]!r}") from exc
    if np.any(raw < 0.0):
        raise MetricError("coincidence counts must be nonnegative")
    total = raw.sum()
    if total <= 0.0:
        raise MetricError("all coincidence counts are zero")
    diag = raw / total
    coherence = 0.25 * (m_x - m_y)
    bound = math.sqrt(diag[E_DOWN] * diag[L_UP])
    coherence = max(-bound, min(bound, coherence))
    matrix = np.diag(diag).astype(complex)
    matrix[E_DOWN, L_UP] = coherence
    matrix[L_UP, E_DOWN] = coherence
    return JointDensity(matrix, normalized=True,
                        scattered_bins=frozenset({"early", "late"}))


def contrasts_from_counts(counts: dict) -> tuple[float, float]:
    """Equatorial contrasts from middle-window coincidence counts."""
    try:
        xp, xm = float(counts["mid_x_plus"]), float(counts["mid_x_minus"])
        yp, ym = float(counts["mid_y_plus"]), float(counts["mid_y_minus"])
    except KeyError as exc:
        raise MetricError(f"missing contrast outcome {exc.args[0]!r}") from exc
    if min(xp, xm, yp, ym) < 0.0:
        raise MetricError("contrast counts must be nonnegative")
    if xp + xm <= 0.0 or yp + ym <= 0.0:
        raise MetricError("contrast counts sum to zero")
    return (xp - xm) / (xp + xm), (yp - ym) / (yp + ym)


def bootstrap_concurrence(counts: dict, contrasts: tuple[float, float] | None,
                          n_resamples: int, seed: int) -> tuple[float, float]:
    """Poisson-bootstrap mean and standard deviation of the concurrence.

    Z-basis counts (and middle-window counts, when present and no explicit
    contrasts are given) are resampled as independent Poisson variates.
    Deterministic for a fixed seed.
    """
    if n_resamples < 100:
        raise MetricError(f"n_resamples must be at least 100 (got {n_resamples})")
    resample_contrasts = contrasts is None
    if resample_contrasts:
        m_x, m_y = contrasts_from_counts(counts)
    else:
        m_x, m_y = contrasts
    rng = np.random.default_rng(seed)
    values = np.empty(n_resamples)
    for i in range(n_resamples):
        drawn = {name: rng.poisson(float(counts[name]))
                 for name in COUNT_OUTCOMES}
        if resample_contrasts:
            mid = {name: rng.poisson(float(counts[name]))
                   for name in CONTRAST_OUTCOMES}
            try:
                mx, my = contrasts_from_counts(mid)
            except MetricError:
                mx, my = m_x, m_y
        else:
            mx, my = m_x, m_y
        try:
            values[i] = concurrence(density_from_counts(drawn, mx, my))
        except MetricError:
            values[i] = 0.0
    return float(values.mean()), float(values.std(ddof=1))
