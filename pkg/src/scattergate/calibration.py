"""Parameter extraction: saturation fits, photon number, dephasing intercept.

The saturation model I = b3*b1*P / (1 + b2*b1*P) determines only the two
combinations b1*b2 (inverse knee power) and b3/b2 (asymptotic counts); the
third direction is a gauge.  The fit runs as a damped Gauss-Newton
iteration in log-parameter space (positivity for free, and the gauge
direction is a constant null vector there), then reports the solution in
the canonical b2 = 1 gauge so results are deterministic and
scale-equivariant.  The covariance is propagated through the same gauge
projection, so it is PSD with an exactly flat gauge direction.

All fits are pure functions of their data; independent datasets can be
fitted concurrently.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import EmitterParams, ParameterError, PulseParams


class ConvergenceError(RuntimeError):
    """An iterative fit failed to converge; carries the last iterate."""

    def __init__(self, message: str, last_params=None):
        super().__init__(message)
        self.last_params = last_params


class DataError(ValueError):
    """Input data cannot support the requested fit."""


@dataclass(frozen=True)
class SaturationFit:
    """Saturation-curve fit parameters, reported in the b2 = 1 gauge.

    ``b1`` converts power to squared Rabi frequency (ns^-2 per nW), ``b2``
    is dimensionless, ``b3`` the counts scale.  ``covariance`` is the 3x3
    covariance of (b1, b2, b3); its gauge direction has zero variance.
    """

    b1: float
    b2: float
    b3: float
    covariance: np.ndarray
    residual_norm: float

    def __post_init__(self) -> None:
        for name in ("b1", "b2", "b3"):
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"{name} must be positive")
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (3, 3):
            raise ParameterError("covariance must be 3x3")
        eigenvalues = np.linalg.eigvalsh(0.5 * (cov + cov.T))
        if eigenvalues.min() < -1e-9 * max(1.0, eigenvalues.max()):
            raise ParameterError("covariance must be PSD")
        cov = 0.5 * (cov + cov.T)
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)

    @property
    def knee_product(self) -> float:
        """The identifiable combination b1*b2 (1/nW)."""
        return self.b1 * self.b2

    def model(self, power):
        power = np.asarray(power, dtype=float)
        return self.b3 * self.b1 * power / (1.0 + self.b2 * self.b1 * power)


@dataclass(frozen=True)
class PhotonFlux:
    """Photon-number bookkeeping derived from a saturation calibration."""

    s_param: float
    n_crit: float
    n_flux: float
    n_bar: float
    scale_per_nw: float

    def __post_init__(self) -> None:
        for name in ("s_param", "n_crit", "n_flux", "n_bar", "scale_per_nw"):
            if getattr(self, name) < 0.0:
                raise ParameterError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class DephasingFit:
    """Linear visibility-vs-photon-number fit and the extracted rate."""

    gamma_d: float
    intercept: float
    slope: float
    intercept_err: float
    gamma_d_err: float


def _model_and_jacobian(theta: np.ndarray, power: np.ndarray):
    # theta = (log b1, log b2, log b3); x = b2*b1*P
    b1, b2, b3 = np.exp(theta)
    x = b2 * b1 * power
    model = b3 * b1 * power / (1.0 + x)
    jac = np.empty((power.size, 3))
    jac[:, 0] = model / (1.0 + x)          # d/d log b1
    jac[:, 1] = -model * x / (1.0 + x)     # d/d log b2
    jac[:, 2] = model                      # d/d log b3
    return model, jac


def fit_saturation(data) -> SaturationFit:
    """Least-squares fit of gated counts vs power to I = b3 b1 P/(1 + b2 b1 P).

    Parameters
    ----------
    data : sequence of (power_nw, counts) pairs, or a pair of arrays.

    Initialization: b2 = 1, b3 = max(counts), b1 = 1/(P_half * b2) with
    P_half the power nearest half of the maximum counts.  Damped
    Gauss-Newton steps (identity damping) in log space, analytic Jacobian.
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 2 and arr.shape[0] == 2 and arr.shape[1] != 2:
        arr = arr.T
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DataError("data must be a sequence of (power, counts) pairs")
    power, counts = arr[:, 0], arr[:, 1]
    if power.size < 4:
        raise DataError(f"need at least 4 points (got {power.size})")
    if np.any(power < 0.0) or np.any(counts < 0.0):
        raise DataError("powers and counts must be nonnegative")
    if np.unique(power).size < 2:
        raise DataError("degenerate data: all points at the same power")

    positive = power > 0.0
    if counts[positive].max() <= 0.0:
        raise DataError("no nonzero counts to fit")
    c_max = counts.max()
    half_idx = np.argmin(np.abs(counts[positive] - 0.5 * c_max))
    p_half = power[positive][half_idx]
    if p_half <= 0.0:
        p_half = power[positive].min()
    theta = np.log([1.0 / p_half, 1.0, c_max])

    lam = 1e-3
    residual = _model_and_jacobian(theta, power)[0] - counts
    cost = float(residual @ residual)
    for _ in range(500):
        model, jac = _model_and_jacobian(theta, power)
        residual = model - counts
        grad = jac.T @ residual
        hessian = jac.T @ jac
        stepped = False
        for _ in range(60):
            try:
                step = np.linalg.solve(hessian + lam * np.eye(3), -grad)
            except np.linalg.LinAlgError:
                lam *= 3.0
                continue
            new_theta = theta + step
            new_residual = _model_and_jacobian(new_theta, power)[0] - counts
            new_cost = float(new_residual @ new_residual)
            if new_cost <= cost:
                theta, cost = new_theta, new_cost
                lam = max(lam * 0.3, 1e-14)
                stepped = True
                break
            lam *= 3.0
        if not stepped:
            break
        if np.linalg.norm(step) < 1e-13 or \
                (abs(new_cost - cost) < 1e-15 * (1.0 + cost) and lam < 1e-6):
            break
    else:
        raise ConvergenceError("saturation fit did not converge",
                               last_params=tuple(np.exp(theta)))

    b1, b2, b3 = np.exp(theta)
    model, jac = _model_and_jacobian(theta, power)
    residual = model - counts
    dof = max(power.size - 2, 1)  # two identifiable parameters
    sigma_sq = float(residual @ residual) / dof

    # gauge-normalize to b2 = 1: (b1, b2, b3) -> (b1 b2, 1, b3 / b2)
    gauged = np.array([b1 * b2, 1.0, b3 / b2])
    gauge_map = np.array([[1.0, 1.0, 0.0],
                          [0.0, 0.0, 0.0],
                          [0.0, -1.0, 1.0]])
    cov_log = sigma_sq * np.linalg.pinv(jac.T @ jac, rcond=1e-10)
    cov_log_gauged = gauge_map @ cov_log @ gauge_map.T
    scale = np.diag(gauged)
    covariance = scale @ cov_log_gauged @ scale

    return SaturationFit(b1=float(gauged[0]), b2=1.0, b3=float(gauged[2]),
                         covariance=covariance,
                         residual_norm=float(np.linalg.norm(residual)))


def critical_photon_flux(params: EmitterParams) -> float:
    """n_c = (1 + 2 gd/G) / (4 beta^2), the flux for 1/4 excited population."""
    gamma = params.gamma_total_rad
    return (1.0 + 2.0 * params.gamma_dephase / gamma) \
        / (4.0 * params.beta_factor ** 2)


def mean_photon_number(fit, params: EmitterParams, pulse: PulseParams,
                       power_nw: float) -> PhotonFlux:
    """Mean photon number per pulse from the saturation calibration.

    ``fit`` may be a SaturationFit or the bare product b1*b2.  Builds
    S = b1 b2 P, n_c from the emitter, n_F = S n_c, n_bar = n_F T_p G, and
    the per-nW scale S_nbar = 1e-2 b1 b2 n_c T_p G / 2 (the 1e-2 models the
    neutral-density attenuation used on the qubit path).
    """
    if power_nw < 0.0:
        raise DataError(f"power must be nonnegative (got {power_nw})")
    product = fit.knee_product if isinstance(fit, SaturationFit) else float(fit)
    gamma = params.gamma_total_rad
    if pulse.t_pulse * gamma < 2.0:
        warnings.warn("saturation model assumes T_p * Gamma >> 1", stacklevel=2)
    if params.kappa_ground is not None and gamma < 100.0 * params.kappa_ground:
        warnings.warn("saturation model assumes Gamma >> kappa_ground",
                      stacklevel=2)
    s_param = product * power_nw
    n_crit = critical_photon_flux(params)
    n_flux = s_param * n_crit
    n_bar = n_flux * pulse.t_pulse * gamma
    scale = 1e-2 * product * n_crit * pulse.t_pulse * gamma / 2.0
    return PhotonFlux(s_param=s_param, n_crit=n_crit, n_flux=n_flux,
                      n_bar=n_bar, scale_per_nw=scale)


def extract_dephasing(points, gamma_total: float,
                      errors=None) -> DephasingFit:
    """Dephasing rate from the visibility-vs-n_bar intercept.

    Ordinary (or error-weighted) least-squares line through the
    (n_bar, V_p) points; the intercept V0 gives gd = G (1 - V0)/2, and the
    intercept uncertainty propagates with the exact factor G/2.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 2 and arr.shape[0] == 2 and arr.shape[1] != 2:
        arr = arr.T
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise DataError("need at least 2 (n_bar, visibility) points")
    x, y = arr[:, 0], arr[:, 1]
    if errors is not None:
        w = 1.0 / np.asarray(errors, dtype=float) ** 2
    else:
        w = np.ones_like(x)
    design = np.column_stack([np.ones_like(x), x])
    normal = design.T @ (w[:, None] * design)
    if abs(np.linalg.det(normal)) < 1e-300 or np.unique(x).size < 2:
        raise DataError("singular design matrix: need at least two distinct n_bar")
    coeffs = np.linalg.solve(normal, design.T @ (w * y))
    intercept, slope = float(coeffs[0]), float(coeffs[1])
    residual = y - design @ coeffs
    dof = max(x.size - 2, 1)
    sigma_sq = float((w * residual * residual).sum()) / dof if errors is None \
        else 1.0
    cov = sigma_sq * np.linalg.inv(normal)
    intercept_err = math.sqrt(max(cov[0, 0], 0.0))
    gamma_d = 0.5 * gamma_total * (1.0 - intercept)
    return DephasingFit(gamma_d=gamma_d, intercept=intercept, slope=slope,
                        intercept_err=intercept_err,
                        gamma_d_err=0.5 * gamma_total * intercept_err)
