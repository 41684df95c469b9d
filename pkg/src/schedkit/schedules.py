"""Noise schedules, their observation-time representation, and generators.

A schedule stores ``betas``, ``alphas = 1 - betas`` and the running product
``alpha_bars`` for steps ``k = 1..T`` (``alpha_bar_0 = 1`` is implicit).  The
matching Ornstein-Uhlenbeck observation times are ``t_k = -log(alpha_bar_k)/2``.

Closed forms that reach ``alpha_bar_T = 0`` (infinite time) are clamped to
``alpha_bar_floor``; clamped steps are recorded in ``clamped_steps``.  Betas are
never rewritten by the clamp, so ``beta_T = 1`` survives for the
constant-variance family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

from . import ou_core, sampler_design
from .errors import ScheduleValidationError, SingularTimeError

__all__ = [
    "DEFAULT_FLOOR",
    "FAMILIES",
    "NoiseSchedule",
    "ObservationTimes",
    "ScheduleSpec",
    "from_betas",
    "from_alpha_bars",
    "to_observation_times",
    "from_observation_times",
    "constant_variance",
    "cv_quadratic",
    "entropy",
    "fisher_cosine",
    "linear_beta",
    "custom_density",
    "generate",
    "schedules_close",
]

DEFAULT_FLOOR = 1e-12
RTOL = 1e-12
ATOL = 1e-14

FAMILIES = ("constant-variance", "cv-quadratic", "entropy", "fisher-cosine", "linear-beta", "custom-density")
_ALIASES = {"custom": "custom-density", "cosine": "fisher-cosine"}


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    family: str = "custom"
    params: Mapping[str, Any] = field(default_factory=dict)
    alpha_bar_floor: float = DEFAULT_FLOOR
    clamped_steps: tuple = ()

    @property
    def T(self) -> int:
        return len(self.betas)

    def __len__(self):
        return self.T

    @property
    def strictly_decreasing(self) -> bool:
        """False for degenerate schedules with ``beta_k = 0`` steps."""
        prev = np.concatenate([[1.0], self.alpha_bars[:-1]])
        return bool(np.all(self.alpha_bars < prev))

    @property
    def clamped_mask(self) -> np.ndarray:
        mask = np.zeros(self.T, dtype=bool)
        if self.clamped_steps:
            mask[np.asarray(self.clamped_steps) - 1] = True
        return mask

    def observation_times(self) -> "ObservationTimes":
        return to_observation_times(self)


@dataclass(frozen=True, eq=False)
class ObservationTimes:
    """Ordered OU observation times ``t_1..t_T``; ``t_0 = 0`` is implicit."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ScheduleValidationError("observation times must be a non-empty 1-d array")
        bad = np.flatnonzero(~np.isfinite(t) | (t < 0))
        if bad.size:
            raise ScheduleValidationError("observation times must be finite and non-negative", bad + 1)
        back = np.flatnonzero(np.diff(np.concatenate([[0.0], t])) < 0)
        if back.size:
            raise ScheduleValidationError("observation times must be non-decreasing", back + 1)
        object.__setattr__(self, "times", _frozen(t))

    def __len__(self):
        return len(self.times)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], self.times]))

    @property
    def strictly_increasing(self) -> bool:
        return bool(np.all(self.gaps > 0))


def _validate_betas(betas) -> np.ndarray:
    b = np.asarray(betas, dtype=float)
    if b.ndim != 1 or b.size == 0:
        raise ScheduleValidationError("betas must be a non-empty 1-d array")
    bad = np.flatnonzero(~np.isfinite(b) | (b < 0) | (b > 1))
    if bad.size:
        raise ScheduleValidationError(f"betas outside [0, 1] at steps {(bad + 1).tolist()}", bad + 1)
    return b


def _check_floor(floor):
    if not (isinstance(floor, (int, float)) and 0 < floor < 1):
        raise ScheduleValidationError(f"alpha_bar_floor must lie in (0, 1), got {floor!r}")


def _assemble(betas, raw_alpha_bars, floor, family, params) -> NoiseSchedule:
    _check_floor(floor)
    raw = np.asarray(raw_alpha_bars, dtype=float)
    clamped = np.flatnonzero(raw < floor)
    alpha_bars = np.where(raw < floor, floor, raw)
    return NoiseSchedule(
        betas=_frozen(betas),
        alphas=_frozen(1.0 - np.asarray(betas)),
        alpha_bars=_frozen(alpha_bars),
        family=family,
        params=dict(params or {}),
        alpha_bar_floor=float(floor),
        clamped_steps=tuple(int(i) + 1 for i in clamped),
    )


def from_betas(betas, floor: float = DEFAULT_FLOOR, *, family: str = "custom",
               params: Optional[Mapping] = None) -> NoiseSchedule:
    """Build a schedule from per-step noise levels ``beta_k``.

    Raises:
        ScheduleValidationError: a beta lies outside [0, 1]; ``indices``
            lists the offending steps (1-based).
    """
    b = _validate_betas(betas)
    return _assemble(b, np.cumprod(1.0 - b), floor, family, params)


def from_alpha_bars(alpha_bars, floor: float = DEFAULT_FLOOR, *, family: str = "custom",
                    params: Optional[Mapping] = None) -> NoiseSchedule:
    """Build a schedule from ``alpha_bar_k``; values must be in (0, 1] and non-increasing."""
    ab = np.asarray(alpha_bars, dtype=float)
    if ab.ndim != 1 or ab.size == 0:
        raise ScheduleValidationError("alpha_bars must be a non-empty 1-d array")
    bad = np.flatnonzero(~np.isfinite(ab) | (ab <= 0) | (ab > 1))
    if bad.size:
        raise ScheduleValidationError(f"alpha_bars outside (0, 1] at steps {(bad + 1).tolist()}", bad + 1)
    prev = np.concatenate([[1.0], ab[:-1]])
    up = np.flatnonzero(ab > prev)
    if up.size:
        raise ScheduleValidationError(f"alpha_bars increase at steps {(up + 1).tolist()}", up + 1)
    betas = (prev - ab) / prev
    return _assemble(betas, ab, floor, family, params)


def to_observation_times(s: NoiseSchedule) -> ObservationTimes:
    """``t_k = -log(alpha_bar_k) / 2``, accumulated as ``-sum(log(alpha_i)) / 2``.

    Summing the per-step gaps keeps each gap accurate to one ulp of ``t_k``,
    whereas taking logs of ``alpha_bar`` near one would lose small betas.
    Clamped steps take their time from the floored ``alpha_bar``.
    """
    ab = np.asarray(s.alpha_bars)
    zero = np.flatnonzero(ab <= 0)
    if zero.size:
        raise SingularTimeError(f"alpha_bar = 0 at steps {(zero + 1).tolist()} maps to infinite time")
    clamped = s.clamped_mask
    with np.errstate(divide="ignore"):
        gaps = -0.5 * np.log1p(-np.asarray(s.betas))
    times = np.cumsum(np.where(clamped, 0.0, gaps))
    times = np.where(clamped, -0.5 * np.log(ab), times)
    # a clamped step is followed only by clamped steps, so the sum above is never poisoned
    return ObservationTimes(np.maximum.accumulate(times))


def from_observation_times(times, floor: float = DEFAULT_FLOOR) -> NoiseSchedule:
    """Inverse of :func:`to_observation_times`.

    Betas come from the gaps, ``beta_k = 1 - exp(-2 (t_k - t_{k-1}))``, which
    keeps small betas accurate; ``alpha_bar_k = exp(-2 t_k)``.
    """
    obs = times if isinstance(times, ObservationTimes) else ObservationTimes(np.asarray(times, dtype=float))
    gaps = obs.gaps
    flat = np.flatnonzero(gaps <= 0)
    if flat.size:
        raise ScheduleValidationError(
            f"observation times must be strictly increasing and positive (steps {(flat + 1).tolist()})", flat + 1)
    betas = -np.expm1(-2.0 * gaps)
    return _assemble(betas, np.exp(-2.0 * obs.times), floor, "custom", None)


# ---------------------------------------------------------------- generators

def _steps(T) -> np.ndarray:
    if not (isinstance(T, (int, np.integer)) and not isinstance(T, bool) and T >= 1):
        raise ScheduleValidationError(f"T must be a positive integer, got {T!r}")
    return np.arange(1, int(T) + 1, dtype=float)


def constant_variance(T: int, floor: float = DEFAULT_FLOOR) -> NoiseSchedule:
    """Equal auto-variance increments: ``alpha_bar_k = 1 - k/T``, ``beta_k = 1/(T - k + 1)``."""
    k = _steps(T)
    betas = 1.0 / (T - k + 1.0)
    return _assemble(betas, 1.0 - k / T, floor, "constant-variance", {})


def cv_quadratic(T: int, floor: float = DEFAULT_FLOOR) -> NoiseSchedule:
    """Marks from the inverse coefficient of variation: ``alpha_bar_k = 1 - k^2/T^2``."""
    k = _steps(T)
    frac = k / T
    betas = (2.0 * k - 1.0) / ((T - k + 1.0) * (T + k - 1.0))
    return _assemble(betas, (1.0 - frac) * (1.0 + frac), floor, "cv-quadratic", {})


def entropy(T: int, sigma0_sq: float = ou_core.SIGMA0_SQ_MAIN, form: str = "derived",
            floor: float = DEFAULT_FLOOR) -> NoiseSchedule:
    """Equal entropy production between consecutive observation times.

    ``form="derived"`` gives ``alpha_bar_k = 1 - sigma0_sq**(1 - k/T)``, which
    reaches the limiting distribution at ``k = T``.  ``form="paper"`` gives
    ``1 - sigma0**(2 - k/T)``, whose terminal ``alpha_bar`` stays near one.
    """
    k = _steps(T)
    ou_core.InitialDispersion(sigma0_sq)
    if form == "derived":
        rate = math.log(sigma0_sq) / T
    elif form == "paper":
        rate = math.log(sigma0_sq) / (2 * T)
    else:
        raise ScheduleValidationError(f"entropy form must be 'derived' or 'paper', got {form!r}")
    # complement 1 - alpha_bar_k = sigma0_sq * exp(-rate * k), with alpha_bar_0 = 1
    comp = sigma0_sq * np.exp(-rate * k)
    comp_prev = np.concatenate([[0.0], comp[:-1]])
    comp = np.minimum(comp, 1.0)
    # differences without cancellation: comp_k - comp_{k-1} = comp_k * (1 - exp(rate))
    diff = comp * -np.expm1(rate)
    diff[0] = comp[0]
    betas = np.minimum(diff / (1.0 - comp_prev), 1.0)
    return _assemble(betas, 1.0 - comp, floor, "entropy", {"sigma0_sq": sigma0_sq, "entropy_form": form})


def fisher_cosine(T: int, floor: float = DEFAULT_FLOOR) -> NoiseSchedule:
    """Square-root Fisher-information marks: ``alpha_bar_k = cos^2(k pi / (2T))``."""
    k = _steps(T)
    frac = k / T
    head = 0.5 * (1.0 + np.cos(math.pi * frac))
    tail = np.sin(0.5 * math.pi * (1.0 - frac)) ** 2
    raw = np.where(frac <= 0.5, head, tail)
    phi = 0.5 * math.pi * frac
    phi_prev = 0.5 * math.pi * (k - 1.0) / T
    # cos^2(a) - cos^2(b) = sin(b + a) sin(b - a)
    drop = np.sin(phi + phi_prev) * np.sin(0.5 * math.pi / T)
    prev = np.concatenate([[1.0], raw[:-1]])
    betas = np.minimum(drop / prev, 1.0)
    betas[-1] = 1.0
    return _assemble(betas, raw, floor, "fisher-cosine", {})


def linear_beta(T: int, beta_start: float = 1e-4, beta_end: float = 0.02,
                floor: float = DEFAULT_FLOOR) -> NoiseSchedule:
    """Baseline ``beta_k = beta_start + (beta_end - beta_start) k / T``."""
    k = _steps(T)
    for name, v in (("beta_start", beta_start), ("beta_end", beta_end)):
        if not 0 <= v <= 1:
            raise ScheduleValidationError(f"{name} must lie in [0, 1], got {v!r}")
    betas = _validate_betas(beta_start + (beta_end - beta_start) * (k / T))
    return _assemble(betas, np.cumprod(1.0 - betas), floor, "linear-beta",
                     {"beta_start": beta_start, "beta_end": beta_end})


def custom_density(T: int, density: sampler_design.DesignDensity, method: str = "auto",
                   floor: float = DEFAULT_FLOOR) -> NoiseSchedule:
    """Schedule from inverse-transform marks of an arbitrary design density."""
    _steps(T)
    result = sampler_design.invert_at_marks(density, int(T), method=method)
    raw = result.alpha_bars
    prev = np.concatenate([[1.0], raw[:-1]])
    betas = (prev - raw) / prev
    return _assemble(betas, raw, floor, "custom-density", {"density": density.describe(), "method": result.method})


@dataclass(frozen=True)
class ScheduleSpec:
    """Declarative recipe for :func:`generate`."""

    family: str
    T: int
    params: Mapping[str, Any] = field(default_factory=dict)
    alpha_bar_floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        family = _ALIASES.get(self.family, self.family)
        if family not in FAMILIES:
            raise ScheduleValidationError(f"unknown schedule family {self.family!r}; choose from {FAMILIES}")
        object.__setattr__(self, "family", family)
        _steps(self.T)
        _check_floor(self.alpha_bar_floor)
        allowed = {
            "constant-variance": set(),
            "cv-quadratic": set(),
            "fisher-cosine": set(),
            "entropy": {"sigma0_sq", "entropy_form"},
            "linear-beta": {"beta_start", "beta_end"},
            "custom-density": {"density", "method"},
        }[family]
        extra = set(self.params) - allowed
        if extra:
            raise ScheduleValidationError(f"unexpected parameters for {family}: {sorted(extra)}")
        if family == "custom-density" and not isinstance(self.params.get("density"),
                                                         sampler_design.DesignDensity):
            raise ScheduleValidationError("custom-density needs a DesignDensity under params['density']")

    def with_steps(self, T: int) -> "ScheduleSpec":
        return ScheduleSpec(self.family, T, dict(self.params), self.alpha_bar_floor)


def generate(spec: ScheduleSpec) -> NoiseSchedule:
    p = dict(spec.params)
    floor = spec.alpha_bar_floor
    if spec.family == "constant-variance":
        return constant_variance(spec.T, floor)
    if spec.family == "cv-quadratic":
        return cv_quadratic(spec.T, floor)
    if spec.family == "fisher-cosine":
        return fisher_cosine(spec.T, floor)
    if spec.family == "entropy":
        return entropy(spec.T, p.get("sigma0_sq", ou_core.SIGMA0_SQ_MAIN), p.get("entropy_form", "derived"), floor)
    if spec.family == "linear-beta":
        return linear_beta(spec.T, p.get("beta_start", 1e-4), p.get("beta_end", 0.02), floor)
    return custom_density(spec.T, p["density"], p.get("method", "auto"), floor)


def schedules_close(a, b, rtol: float = RTOL, atol: float = ATOL) -> bool:
    """Elementwise comparison at the toolkit's schedule tolerance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= atol + rtol * np.abs(b)))
