"""Domain types and parameter validation.

Conventions used throughout the package:

* all decay/dephasing/flip rates are in ns^-1,
* all splittings and detunings are angular frequencies in rad/ns
  (config files accept GHz and convert with an explicit 2*pi factor,
  exactly once, at load time),
* the spin basis is ordered (up, down); the joint spin-photon basis is
  ordered (e_up, e_down, l_up, l_down) where e/l are the early/late
  time bins of the photonic qubit.

Every type validates its invariants on construction and is immutable
afterwards, so instances can be shared freely between concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * math.pi

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-12
TRACE_TOL = 1e-10

JOINT_BASIS = ("e_up", "e_down", "l_up", "l_down")
E_UP, E_DOWN, L_UP, L_DOWN = range(4)


class ParameterError(ValueError):
    """A constructed parameter set violates one of its invariants."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ParameterError(message)


@dataclass(frozen=True)
class EmitterParams:
    """Rates and splittings of the four-level emitter (Voigt scheme).

    Attributes
    ----------
    gamma1_wg : float
        Radiative decay rate of the vertical (spin-preserving) transition
        into the waveguide, ns^-1.
    gamma2_wg : float
        Radiative decay rate of the diagonal (Raman) transition into the
        waveguide, ns^-1.
    gamma1_loss, gamma2_loss : float
        Radiative rates of the two transitions into lossy (non-guided)
        modes, ns^-1.  Defaults follow the estimated 0.05 ns^-1 for both
        channels; treat them as estimates, not measured values.
    gamma_dephase : float
        Pure dephasing rate of the excited state, ns^-1.
    delta_h : float
        Ground-state splitting, angular frequency in rad/ns.
    kappa_flip : float
        Incoherent spin-flip rate during optical spin rotations, ns^-1.
    t2_star : float
        Inhomogeneous spin dephasing time, ns.
    beta_factor : float
        Fraction of emitter decay captured by the waveguide mode, in (0, 1].
        Distinct from the late-bin photonic amplitude, which is named
        beta_late wherever it appears.
    coupling_split1, coupling_split2 : (float, float)
        Per-transition (reflected, transmitted) fractions of the waveguide
        rate; each pair sums to 1.  The symmetric default (0.5, 0.5) models
        equal coupling to both ports.
    kappa_ground : float or None
        Optional ground-state recycle rate, ns^-1.  Stored only so that
        saturation-model validity can be checked; it enters no formula.
    """

    gamma1_wg: float
    gamma2_wg: float
    gamma1_loss: float = 0.05
    gamma2_loss: float = 0.05
    gamma_dephase: float = 0.0
    delta_h: float = TWO_PI * 7.3
    kappa_flip: float = 0.0
    t2_star: float = 23.2
    beta_factor: float = 0.95
    coupling_split1: tuple[float, float] = (0.5, 0.5)
    coupling_split2: tuple[float, float] = (0.5, 0.5)
    kappa_ground: float | None = None

    def __post_init__(self) -> None:
        for name in ("gamma1_wg", "gamma2_wg", "gamma1_loss", "gamma2_loss",
                     "gamma_dephase", "kappa_flip"):
            value = getattr(self, name)
            _require(np.isfinite(value) and value >= 0.0,
                     f"{name} must be a finite nonnegative rate (got {value})")
        _require(self.delta_h > 0.0,
                 f"delta_h must be positive (got {self.delta_h})")
        _require(self.t2_star > 0.0,
                 f"t2_star must be positive (got {self.t2_star})")
        _require(0.0 < self.beta_factor <= 1.0,
                 f"beta_factor must lie in (0, 1] (got {self.beta_factor})")
        for name in ("coupling_split1", "coupling_split2"):
            r_frac, t_frac = getattr(self, name)
            _require(r_frac >= 0.0 and t_frac >= 0.0,
                     f"{name} fractions must be nonnegative (got {r_frac}, {t_frac})")
            _require(abs(r_frac + t_frac - 1.0) <= 1e-12,
                     f"{name} fractions must sum to 1 (got {r_frac + t_frac})")
        _require(self.gamma_total_rad > 0.0,
                 "gamma_total_rad must be positive")
        if self.kappa_ground is not None:
            _require(self.kappa_ground >= 0.0,
                     f"kappa_ground must be nonnegative (got {self.kappa_ground})")

    # -- derived quantities -------------------------------------------------

    @property
    def gamma_total_rad(self) -> float:
        """Radiative total decay rate G1 + G2 + g1 + g2."""
        return (self.gamma1_wg + self.gamma2_wg
                + self.gamma1_loss + self.gamma2_loss)

    @property
    def gamma_total_deph(self) -> float:
        """Dephasing-inclusive total rate, gamma_total_rad + 2*gamma_dephase.

        Used only by the formulas that redefine the linewidth to absorb
        pure dephasing as an extra decay channel; every consumer names
        which total it takes.
        """
        return self.gamma_total_rad + 2.0 * self.gamma_dephase

    @property
    def cyclicity_transition(self) -> float:
        """(G1 + g1) / (G2 + g2): decay-rate ratio of the two transitions.

        This is the quantity the experiment measures (14.7 for the default
        parameter set).
        """
        denom = self.gamma2_wg + self.gamma2_loss
        if denom == 0.0:
            return math.inf
        return (self.gamma1_wg + self.gamma1_loss) / denom

    @property
    def cyclicity_channel(self) -> float:
        """(G1 + G2) / (g1 + g2): guided-vs-lossy decay ratio."""
        denom = self.gamma1_loss + self.gamma2_loss
        if denom == 0.0:
            return math.inf
        return (self.gamma1_wg + self.gamma2_wg) / denom

    @property
    def gamma1_reflect(self) -> float:
        return self.gamma1_wg * self.coupling_split1[0]

    @property
    def gamma1_transmit(self) -> float:
        return self.gamma1_wg * self.coupling_split1[1]

    @property
    def gamma2_reflect(self) -> float:
        return self.gamma2_wg * self.coupling_split2[0]

    @property
    def gamma2_transmit(self) -> float:
        return self.gamma2_wg * self.coupling_split2[1]

    @classmethod
    def from_total_rate(cls, gamma_total: float, cyclicity: float,
                        **kwargs) -> "EmitterParams":
        """Build params from the measured total rate and transition cyclicity.

        Solves G1 + g1 = C * (G2 + g2) together with
        G1 + G2 + g1 + g2 = gamma_total for the waveguide rates, taking the
        loss rates from ``kwargs`` (defaults 0.05 ns^-1 each).
        """
        g1 = kwargs.get("gamma1_loss", 0.05)
        g2 = kwargs.get("gamma2_loss", 0.05)
        branch2 = gamma_total / (cyclicity + 1.0)
        branch1 = cyclicity * branch2
        return cls(gamma1_wg=branch1 - g1, gamma2_wg=branch2 - g2, **kwargs)


@dataclass(frozen=True)
class PulseParams:
    """Spectral/temporal shape and strength of the incident pulse.

    ``sigma_o`` is the standard deviation of the *intensity* spectrum
    |Phi(omega)|^2 of the Gaussian input pulse, in rad/ns; ``sigma_e`` the
    spectral-diffusion standard deviation; ``detuning`` the carrier offset
    from the spin-preserving transition; ``n_bar`` the mean photon number
    per pulse.  ``t_pulse = 1/(2 sigma_o)`` is enforced when both are
    supplied.
    """

    sigma_o: float
    sigma_e: float = 0.0
    detuning: float = 0.0
    t_pulse: float | None = None
    n_bar: float = 0.0

    def __post_init__(self) -> None:
        _require(self.sigma_o > 0.0,
                 f"sigma_o must be positive (got {self.sigma_o})")
        _require(self.sigma_e >= 0.0,
                 f"sigma_e must be nonnegative (got {self.sigma_e})")
        _require(self.n_bar >= 0.0,
                 f"n_bar must be nonnegative (got {self.n_bar})")
        _require(np.isfinite(self.detuning),
                 f"detuning must be finite (got {self.detuning})")
        if self.t_pulse is None:
            object.__setattr__(self, "t_pulse", 1.0 / (2.0 * self.sigma_o))
        else:
            _require(self.t_pulse > 0.0,
                     f"t_pulse must be positive (got {self.t_pulse})")
            expected = 1.0 / (2.0 * self.sigma_o)
            _require(abs(self.t_pulse - expected) <= 1e-6 * expected,
                     f"t_pulse must equal 1/(2*sigma_o) = {expected} "
                     f"(got {self.t_pulse})")

    @classmethod
    def from_duration(cls, t_pulse: float, **kwargs) -> "PulseParams":
        _require(t_pulse > 0.0, f"t_pulse must be positive (got {t_pulse})")
        return cls(sigma_o=1.0 / (2.0 * t_pulse), t_pulse=t_pulse, **kwargs)


@dataclass(frozen=True)
class RotationPulse:
    """A coherent spin-rotation pulse about an equatorial axis.

    ``rabi * duration = angle`` is enforced; ``phase`` selects the
    equatorial rotation axis relative to the named one.
    """

    angle: float
    duration: float
    axis: str = "y"
    phase: float = 0.0

    def __post_init__(self) -> None:
        _require(self.axis in ("x", "y"),
                 f"axis must be 'x' or 'y' (got {self.axis!r})")
        _require(self.duration > 0.0,
                 f"duration must be positive (got {self.duration})")
        _require(np.isfinite(self.angle),
                 f"angle must be finite (got {self.angle})")

    @property
    def rabi(self) -> float:
        return self.angle / self.duration


def _check_density(matrix: np.ndarray, dim: int, label: str) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (dim, dim):
        raise ParameterError(f"{label} must be {dim}x{dim} (got {matrix.shape})")
    if not np.all(np.abs(matrix - matrix.conj().T) <= HERMITICITY_TOL):
        worst = np.max(np.abs(matrix - matrix.conj().T))
        raise ParameterError(f"{label} must be Hermitian within "
                             f"{HERMITICITY_TOL} (max deviation {worst:.3e})")
    sym = 0.5 * (matrix + matrix.conj().T)
    eigenvalues = np.linalg.eigvalsh(sym)
    if eigenvalues.min() < -PSD_TOL:
        raise ParameterError(f"{label} must be positive semidefinite "
                             f"(min eigenvalue {eigenvalues.min():.3e})")
    out = sym.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SpinDensity:
    """2x2 spin density matrix over (up, down); trace may be below 1."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        checked = _check_density(self.matrix, 2, "SpinDensity")
        trace = float(np.trace(checked).real)
        _require(-TRACE_TOL <= trace <= 1.0 + TRACE_TOL,
                 f"SpinDensity trace must lie in [0, 1] (got {trace})")
        object.__setattr__(self, "matrix", checked)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @classmethod
    def spin_up(cls) -> "SpinDensity":
        return cls(np.diag([1.0, 0.0]).astype(complex))

    @classmethod
    def spin_down(cls) -> "SpinDensity":
        return cls(np.diag([0.0, 1.0]).astype(complex))

    @classmethod
    def from_vector(cls, amplitudes) -> "SpinDensity":
        v = np.asarray(amplitudes, dtype=complex).reshape(2)
        return cls(np.outer(v, v.conj()))


@dataclass(frozen=True)
class JointDensity:
    """4x4 spin-photon density matrix over (e_up, e_down, l_up, l_down).

    When ``normalized`` is False the trace carries the running herald
    probability of the gate.  ``scattered_bins`` records which time bins
    have already been scattered, so a bin cannot scatter twice in one run.
    """

    matrix: np.ndarray
    normalized: bool = False
    scattered_bins: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        checked = _check_density(self.matrix, 4, "JointDensity")
        trace = float(np.trace(checked).real)
        if self.normalized:
            _require(abs(trace - 1.0) <= TRACE_TOL,
                     f"normalized JointDensity trace must be 1 (got {trace})")
        else:
            _require(trace >= -TRACE_TOL,
                     f"JointDensity trace must be nonnegative (got {trace})")
        object.__setattr__(self, "matrix", checked)
        object.__setattr__(self, "scattered_bins", frozenset(self.scattered_bins))

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalize(self) -> "JointDensity":
        trace = self.trace
        _require(trace > 0.0, "cannot normalize a zero-trace JointDensity")
        return JointDensity(self.matrix / trace, normalized=True,
                            scattered_bins=self.scattered_bins)

    def with_matrix(self, matrix: np.ndarray,
                    scattered_bins=None) -> "JointDensity":
        bins = self.scattered_bins if scattered_bins is None else scattered_bins
        return JointDensity(matrix, normalized=False, scattered_bins=bins)

    @classmethod
    def from_timebin_qubit(cls, theta_p: float,
                           spin: SpinDensity) -> "JointDensity":
        """Product state of the (|e> + e^{i theta_p}|l>)/sqrt(2) qubit and a spin."""
        alpha = 1.0 / math.sqrt(2.0)
        beta = np.exp(1j * theta_p) / math.sqrt(2.0)
        qubit = np.array([alpha, beta])
        photon = np.outer(qubit, qubit.conj())
        return cls(np.kron(photon, spin.matrix),
                   normalized=abs(spin.trace - 1.0) <= TRACE_TOL)


@dataclass(frozen=True)
class ScatterAmplitudes:
    """The eight complex scattering coefficients at one frequency.

    ``r1/t1`` reflect/transmit on the spin-preserving transition, ``r2/t2``
    on the Raman transition; ``*_off`` are the off-resonant variants seen
    by the opposite spin state.
    """

    r1: complex
    t1: complex
    r2: complex
    t2: complex
    r1_off: complex
    t1_off: complex
    r2_off: complex
    t2_off: complex

    def __post_init__(self) -> None:
        for label, quartet in (
            ("resonant", (self.r1, self.t1, self.r2, self.t2)),
            ("off-resonant", (self.r1_off, self.t1_off, self.r2_off, self.t2_off)),
        ):
            total = sum(abs(c) ** 2 for c in quartet)
            _require(total <= 1.0 + 1e-12,
                     f"{label} scattering probabilities must not exceed 1 "
                     f"(got {total})")


def validate(params):
    """Re-run invariant checks on an already-built parameter object.

    Dataclass construction validates eagerly; this re-validation entry
    point exists for values deserialized or mutated via ``replace``.
    Returns the object unchanged on success.
    """
    if isinstance(params, (EmitterParams, PulseParams, RotationPulse,
                           SpinDensity, JointDensity, ScatterAmplitudes)):
        rebuilt = replace(params)
        return rebuilt
    raise TypeError(f"validate() does not handle {type(params).__name__}")
