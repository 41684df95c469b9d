"""Closed-form analytics of the Ornstein-Uhlenbeck process.

The generic transition law works for any relaxation rate ``gamma`` and
fluctuation strength ``sigma``.  Everything else in this module (auto-variance,
coefficient of variation, entropy, Fisher density, mutual information) is
written for the DDPM preset ``gamma=1, sigma=sqrt(2)``, whose stationary
variance is exactly one.

Time ``t`` and the signal coefficient ``theta = exp(-t)`` are used
interchangeably; ``theta**2`` is the DDPM ``alpha_bar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "OUParams",
    "GaussianLaw",
    "InitialDispersion",
    "FeasibilityReport",
    "DDPM_PRESET",
    "SIGMA0_SQ_MAIN",
    "SIGMA0_SQ_APPENDIX",
    "transition_law",
    "transition_coefficients",
    "sample_transition",
    "auto_variance",
    "coefficient_of_variation",
    "snr",
    "differential_entropy",
    "fisher_density_unnormalized",
    "fisher_density_in_time",
    "FISHER_NORMALIZATION",
    "mutual_information",
    "marginal_entropy_initial",
    "mi_schedule_feasibility",
]

# Pixel-discretization dispersion: uniform noise on 257 (main) or 128 (appendix) levels.
SIGMA0_SQ_MAIN = (1.0 / 257.0) ** 2 / 12.0
SIGMA0_SQ_APPENDIX = (2.0 / 256.0) ** 2 / 12.0

FISHER_NORMALIZATION = math.pi / 2.0


@dataclass(frozen=True)
class OUParams:
    """Parameters of ``dX = -gamma X dt + sigma dW``."""

    gamma: float
    sigma: float

    def __post_init__(self):
        for name in ("gamma", "sigma"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be a positive finite real, got {value!r}")

    @property
    def stationary_std(self) -> float:
        # sigma / sqrt(2 gamma) is exactly 1.0 for the preset, unlike sigma**2 / 2.
        return self.sigma / math.sqrt(2.0 * self.gamma)

    @property
    def stationary_variance(self) -> float:
        return self.stationary_std**2


DDPM_PRESET = OUParams(gamma=1.0, sigma=math.sqrt(2.0))


@dataclass(frozen=True)
class GaussianLaw:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance >= 0:
            raise ParameterError(f"variance must be non-negative, got {self.variance!r}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class InitialDispersion:
    """Variance of the intrinsic uncertainty of the (standardized) initial value."""

    sigma0_sq: float = SIGMA0_SQ_MAIN

    def __post_init__(self):
        if not (0.0 < self.sigma0_sq < 1.0):
            raise DomainError(f"sigma0_sq must lie in (0, 1), got {self.sigma0_sq!r}")


def _check_dt(dt):
    dt_arr = np.asarray(dt, dtype=float)
    if np.any(~np.isfinite(dt_arr)) or np.any(dt_arr < 0):
        raise DomainError("time increments must be finite and non-negative")
    return dt_arr


def transition_coefficients(params: OUParams, dt):
    """Return ``(decay, std)`` with ``X_{s+dt} = decay * X_s + std * z``.

    Vectorized over ``dt``; scalars in, floats out.
    """
    dt_arr = _check_dt(dt)
    decay = np.exp(-params.gamma * dt_arr)
    std = params.stationary_std * np.sqrt(-np.expm1(-2.0 * params.gamma * dt_arr))
    if dt_arr.ndim == 0:
        return float(decay), float(std)
    return decay, std


def transition_law(params: OUParams, x_s: float, dt: float) -> GaussianLaw:
    """Exact conditional law of ``X_{s+dt}`` given ``X_s = x_s``."""
    dt_arr = _check_dt(dt)
    if dt_arr.ndim != 0:
        raise DomainError("transition_law takes a scalar dt; use transition_coefficients")
    decay = math.exp(-params.gamma * float(dt_arr))
    variance = params.stationary_variance * -math.expm1(-2.0 * params.gamma * float(dt_arr))
    return GaussianLaw(mean=x_s * decay, variance=variance)


def sample_transition(params: OUParams, x_s: float, dt: float, rng: np.random.Generator) -> float:
    """Draw ``X_{s+dt}`` given ``X_s = x_s``; consumes exactly one normal draw."""
    decay, std = transition_coefficients(params, float(dt))
    z = rng.standard_normal()
    return x_s * decay + std * z


def _check_time(t, *, strict: bool):
    t_arr = np.asarray(t, dtype=float)
    bad = (t_arr <= 0) if strict else (t_arr < 0)
    if np.any(bad) or np.any(np.isnan(t_arr)):
        bound = "> 0" if strict else ">= 0"
        raise DomainError(f"t must be {bound}")
    return t_arr


def _scalar_or_array(values, like):
    return float(values) if np.ndim(like) == 0 else values


def auto_variance(t):
    """Variance of ``X_t`` started from a fixed point: ``1 - exp(-2t)``."""
    t_arr = _check_time(t, strict=False)
    return _scalar_or_array(-np.expm1(-2.0 * t_arr), t)


def _check_theta(theta):
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(~((theta_arr > 0) & (theta_arr <= 1))):
        raise DomainError("theta must lie in (0, 1]")
    return theta_arr


def coefficient_of_variation(theta):
    """``sqrt(var) / mean`` of the marginal at ``theta = exp(-t)``."""
    theta_arr = _check_theta(theta)
    cv = np.sqrt((1.0 - theta_arr) * (1.0 + theta_arr)) / theta_arr
    return _scalar_or_array(cv, theta)


def snr(theta):
    """Signal-to-noise ratio ``CV**-2``; ``inf`` at ``theta == 1``."""
    theta_arr = _check_theta(theta)
    noise = (1.0 - theta_arr) * (1.0 + theta_arr)
    with np.errstate(divide="ignore"):
        out = np.where(noise > 0, theta_arr**2 / np.where(noise > 0, noise, 1.0), np.inf)
    return _scalar_or_array(out, theta)


def differential_entropy(t):
    """Entropy of the marginal ``N(., 1 - exp(-2t))``.

    Raises:
        DomainError: for ``t <= 0``, where the marginal is a point mass.
    """
    t_arr = _check_time(t, strict=True)
    out = 0.5 + 0.5 * (math.log(2.0 * math.pi) + np.log(-np.expm1(-2.0 * t_arr)))
    return _scalar_or_array(out, t)


def fisher_density_unnormalized(theta):
    """Square-root Fisher-information sampling density ``1/sqrt(1 - theta**2)``.

    Integrates to ``pi/2`` over ``(0, 1)``.
    """
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(~((theta_arr >= 0) & (theta_arr < 1))):
        raise DomainError("theta must lie in [0, 1)")
    out = 1.0 / np.sqrt((1.0 - theta_arr) * (1.0 + theta_arr))
    return _scalar_or_array(out, theta)


def fisher_density_in_time(t):
    """The same density written in physical time: ``1/sqrt(exp(2t) - 1)``."""
    t_arr = _check_time(t, strict=True)
    return _scalar_or_array(1.0 / np.sqrt(np.expm1(2.0 * t_arr)), t)


def mutual_information(t, disp: InitialDispersion):
    """Mutual information between ``X_0 ~ N(., sigma0_sq)`` and ``X_t``."""
    t_arr = _check_time(t, strict=True)
    out = 0.5 * np.log1p(disp.sigma0_sq / np.expm1(2.0 * t_arr))
    return _scalar_or_array(out, t)


def marginal_entropy_initial(disp: InitialDispersion) -> float:
    """Entropy of the initial law ``N(., sigma0_sq)``."""
    return 0.5 + 0.5 * math.log(2.0 * math.pi * disp.sigma0_sq)


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of trying to place marks ``k/T = 1 - I(t)/S_x0``."""

    sigma0_sq: float
    initial_entropy: float
    t_grid: np.ndarray = field(repr=False)
    mutual_information: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    in_unit_interval: np.ndarray = field(repr=False)
    rhs_in_unit_interval: bool
    monotone_increasing_rhs: bool

    @property
    def feasible(self) -> bool:
        return self.rhs_in_unit_interval and self.monotone_increasing_rhs

    def __len__(self):
        return len(self.t_grid)

    def to_dict(self) -> dict:
        return {
            "sigma0_sq": self.sigma0_sq,
            "initial_entropy": self.initial_entropy,
            "rhs_in_unit_interval": self.rhs_in_unit_interval,
            "monotone_increasing_rhs": self.monotone_increasing_rhs,
            "feasible": self.feasible,
            "points": [
                {"t": float(t), "mutual_information": float(i), "rhs": float(r), "in_unit_interval": bool(u)}
                for t, i, r, u in zip(self.t_grid, self.mutual_information, self.rhs, self.in_unit_interval)
            ],
        }


def mi_schedule_feasibility(disp: InitialDispersion, t_grid) -> FeasibilityReport:
    """Evaluate the mutual-information mark condition on a time grid.

    Marks would have to satisfy ``k/T = 1 - I(t)/S_x0`` with ``S_x0`` the
    entropy of the initial law.  For any realistic dispersion ``S_x0 < 0``, so
    the right-hand side never drops below one and decreases with ``t``.
    """
    grid = np.asarray(t_grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("t_grid must be non-empty")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("t_grid must be strictly increasing and positive")
    if not disp.sigma0_sq < 1.0 / (2.0 * math.pi * math.e):
        raise DomainError("sigma0_sq must be below 1/(2 pi e) so the initial entropy is negative")
    s0 = marginal_entropy_initial(disp)
    mi = np.atleast_1d(mutual_information(grid, disp))
    rhs = 1.0 - mi / s0
    inside = (rhs > 0.0) & (rhs < 1.0)
    return FeasibilityReport(
        sigma0_sq=disp.sigma0_sq,
        initial_entropy=s0,
        t_grid=grid,
        mutual_information=mi,
        rhs=rhs,
        in_unit_interval=inside,
        rhs_in_unit_interval=bool(np.all(inside)),
        monotone_increasing_rhs=bool(np.all(np.diff(rhs) > 0)),
    )
