"""Monte Carlo and deterministic checks that a DDPM chain is an OU process observed at ``t_k``.

Two ensembles are simulated from independent sub-streams of one seed: the
DDPM recursion ``Z_k = sqrt(alpha_k) Z_{k-1} + sqrt(beta_k) eps`` and the exact
OU transition across the gaps of the observation times.  Each step's marginals
are compared with a two-sample KS test; the DDPM and OU trajectories are also
standardized with the DDPM one-step law and tested against N(0, 1), which
probes the Markov (joint) structure rather than marginals alone.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels, ou_core
from .schedules import NoiseSchedule, ObservationTimes, ScheduleSpec, generate, to_observation_times

__all__ = [
    "GaussianInit",
    "EnsembleConfig",
    "StepResult",
    "IncrementResult",
    "EquivalenceReport",
    "IdentityCheck",
    "ScalingResult",
    "ks_critical_value",
    "simulate_ddpm_chain",
    "simulate_ou_at_times",
    "marginal_identity_check",
    "run_equivalence",
    "calibration_control",
    "scaling_check",
]

ROLE_DDPM = 0
ROLE_OU = 1
ROLE_OU_CONTROL = 2

UNDERPOWERED_BELOW = 10_000
MOMENT_SIGMAS = 4.0
DEFAULT_CHUNK = 1 << 16


@dataclass(frozen=True)
class GaussianInit:
    """Random initial value ``X_0 ~ N(mean, variance)``."""

    mean: float = 0.0
    variance: float = ou_core.SIGMA0_SQ_MAIN

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("initial variance must be positive")


@dataclass(frozen=True)
class EnsembleConfig:
    """Ensemble size, seed and initial condition.

    Trajectories are generated in fixed-size chunks, each from its own
    sub-stream keyed by ``(seed, scheme, role, chunk)``, so results do not depend on
    ``workers``.  ``scheme`` selects a disjoint family of keys
    (``"independent"``: role first, ``"paired"``: chunk first); the DDPM and OU
    ensembles never share draws under either scheme.
    """

    n_samples: int = 200_000
    seed: int = 0
    x0: Union[float, GaussianInit] = 1.0
    scheme: str = "independent"
    chunk_size: int = DEFAULT_CHUNK
    workers: int = 1

    def __post_init__(self):
        if not (isinstance(self.n_samples, (int, np.integer)) and self.n_samples >= 2):
            raise ValueError("n_samples must be an integer >= 2")
        if not isinstance(self.seed, (int, np.integer)):
            raise ValueError("seed must be an integer")
        if self.scheme not in ("independent", "paired"):
            raise ValueError("scheme must be 'independent' or 'paired'")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("chunk_size and workers must be positive")
        if not isinstance(self.x0, GaussianInit):
            object.__setattr__(self, "x0", float(self.x0))

    @property
    def deterministic_start(self) -> bool:
        return not isinstance(self.x0, GaussianInit)

    def to_dict(self) -> dict:
        x0 = {"mean": self.x0.mean, "variance": self.x0.variance} if isinstance(self.x0, GaussianInit) else self.x0
        return {"n_samples": int(self.n_samples), "seed": int(self.seed), "x0": x0, "scheme": self.scheme}


def _rng(cfg: EnsembleConfig, role: int, chunk: int) -> np.random.Generator:
    # the leading tag keeps the two schemes from ever sharing a stream
    key = (0, role, chunk) if cfg.scheme == "independent" else (1, chunk, role)
    seq = np.random.SeedSequence(entropy=int(cfg.seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=key)
    return np.random.default_rng(seq)


def _simulate(decay, scale, cfg: EnsembleConfig, role: int) -> np.ndarray:
    """Ensemble of AR(1) trajectories, shape (n, T + 1) with the initial value in column 0."""
    T = len(decay)
    n = int(cfg.n_samples)
    starts = list(range(0, n, cfg.chunk_size))
    out = np.empty((n, T + 1))

    def run(idx):
        lo = starts[idx]
        m = min(cfg.chunk_size, n - lo)
        rng = _rng(cfg, role, idx)
        if isinstance(cfg.x0, GaussianInit):
            z0 = rng.normal(cfg.x0.mean, math.sqrt(cfg.x0.variance), m)
        else:
            z0 = np.full(m, cfg.x0)
        noise = rng.standard_normal((m, T))
        out[lo:lo + m, 0] = z0
        out[lo:lo + m, 1:] = _kernels.ar1_recurrence(z0, decay, scale, noise)

    if cfg.workers == 1 or len(starts) == 1:
        for idx in range(len(starts)):
            run(idx)
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            list(pool.map(run, range(len(starts))))
    return out


def simulate_ddpm_chain(s: NoiseSchedule, cfg: EnsembleConfig, *, include_initial: bool = False,
                        role: int = ROLE_DDPM) -> np.ndarray:
    """Iterate the DDPM recursion; returns (n, T), or (n, T + 1) with ``Z_0`` first."""
    traj = _simulate(np.sqrt(s.alphas), np.sqrt(s.betas), cfg, role)
    return traj if include_initial else traj[:, 1:]


def simulate_ou_at_times(times: ObservationTimes, cfg: EnsembleConfig, *, params: ou_core.OUParams = ou_core.DDPM_PRESET,
                         include_initial: bool = False, role: int = ROLE_OU) -> np.ndarray:
    """Sample the OU process exactly at ``times`` (no discretization error)."""
    obs = times if isinstance(times, ObservationTimes) else ObservationTimes(np.asarray(times, dtype=float))
    decay, scale = ou_core.transition_coefficients(params, obs.gaps)
    traj = _simulate(np.atleast_1d(decay), np.atleast_1d(scale), cfg, role)
    return traj if include_initial else traj[:, 1:]


@dataclass(frozen=True)
class IdentityCheck:
    """Largest relative mismatch of ``exp(-2 t_k) = alpha_bar_k`` and ``exp(-(t_k - t_{k-1})) = sqrt(alpha_k)``."""

    max_error: float
    excluded_steps: tuple
    excluded_errors: tuple

    def __float__(self):
        return self.max_error


def marginal_identity_check(s: NoiseSchedule) -> IdentityCheck:
    times = to_observation_times(s).times
    gaps = np.diff(np.concatenate([[0.0], times]))
    err_bar = np.abs(np.exp(-2.0 * times) - s.alpha_bars) / s.alpha_bars
    sqrt_alpha = np.sqrt(s.alphas)
    with np.errstate(divide="ignore", invalid="ignore"):
        err_gap = np.abs(np.exp(-gaps) - sqrt_alpha) / sqrt_alpha
    err = np.maximum(err_bar, err_gap)
    # A clamped alpha_bar breaks the gap identity at its own step and the next one.
    clamped = s.clamped_mask
    excluded = clamped | np.concatenate([[False], clamped[:-1]])
    kept = err[~excluded]
    return IdentityCheck(
        max_error=float(kept.max()) if kept.size else 0.0,
        excluded_steps=tuple(int(k) + 1 for k in np.flatnonzero(excluded)),
        excluded_errors=tuple(float(e) for e in err[excluded]),
    )


def ks_critical_value(alpha: float) -> float:
    """Asymptotic Kolmogorov critical value ``sqrt(-log(alpha/2)/2)``; 1.628 at alpha = 0.01."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(-0.5 * math.log(alpha / 2.0))


@dataclass(frozen=True)
class StepResult:
    k: int
    t_k: float
    ks_statistic: Optional[float]
    ks_threshold: float
    mean_ddpm: float
    mean_ou: float
    var_ddpm: float
    var_ou: float
    mean_expected: float
    var_expected: float
    moments_ok: bool
    skipped: bool = False

    @property
    def ks_ok(self) -> bool:
        return self.skipped or self.ks_statistic < self.ks_threshold


@dataclass(frozen=True)
class IncrementResult:
    k: int
    standardized_increment_ks: Optional[float]
    ou_standardized_increment_ks: Optional[float]
    threshold: float
    skipped: bool = False

    @property
    def ok(self) -> bool:
        return self.skipped or (self.standardized_increment_ks < self.threshold
                                and self.ou_standardized_increment_ks < self.threshold)


@dataclass
class EquivalenceReport:
    schedule: NoiseSchedule
    config: EnsembleConfig
    alpha_level: float
    correction: str
    per_step: list
    increment_checks: list
    identity_error: float
    underpowered: bool
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "fail" if self.failures else "pass"

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_ks(self) -> float:
        vals = [r.ks_statistic for r in self.per_step if not r.skipped]
        return max(vals) if vals else 0.0

    def to_dict(self) -> dict:
        from .io import schedule_to_dict

        return {
            "format_version": 1,
            "schedule": schedule_to_dict(self.schedule),
            "config": self.config.to_dict(),
            "alpha_level": self.alpha_level,
            "correction": self.correction,
            "backend": _kernels.BACKEND,
            "identity_error": self.identity_error,
            "underpowered": self.underpowered,
            "per_step": [asdict(r) for r in self.per_step],
            "increment_checks": [asdict(r) for r in self.increment_checks],
            "verdict": self.verdict,
            "failures": list(self.failures),
            "notes": list(self.notes),
            "warnings": list(self.warnings),
        }


def _per_test_alpha(alpha: float, m: int, correction: str) -> float:
    if correction == "none" or m <= 1:
        return alpha
    if correction == "sidak":
        return -math.expm1(math.log1p(-alpha) / m)
    raise ValueError("correction must be 'none' or 'sidak'")


def _expected_moments(s: NoiseSchedule, cfg: EnsembleConfig):
    ab = np.asarray(s.alpha_bars)
    if isinstance(cfg.x0, GaussianInit):
        return cfg.x0.mean * np.sqrt(ab), 1.0 - ab + cfg.x0.variance * ab
    return cfg.x0 * np.sqrt(ab), 1.0 - ab


def _standardized_increments(traj: np.ndarray, s: NoiseSchedule, steps: np.ndarray) -> np.ndarray:
    """(Z_k - sqrt(alpha_k) Z_{k-1}) / sqrt(beta_k) for the given 1-based steps; shape (len(steps), n)."""
    idx = steps
    cur = traj[:, idx].T
    prev = traj[:, idx - 1].T
    a = np.sqrt(s.alphas[idx - 1])[:, None]
    b = np.sqrt(s.betas[idx - 1])[:, None]
    return (cur - a * prev) / b


def _compare(s: NoiseSchedule, cfg: EnsembleConfig, first: np.ndarray, second: np.ndarray, times: np.ndarray,
             alpha_level: float, correction: str) -> EquivalenceReport:
    if not 0 < alpha_level <= 0.1:
        raise ValueError("alpha_level must lie in (0, 0.1]")
    n = int(cfg.n_samples)
    T = s.T
    mean_exp, var_exp = _expected_moments(s, cfg)
    notes, warnings_, failures = [], [], []
    underpowered = n < UNDERPOWERED_BELOW
    if underpowered:
        warnings_.append(f"underpowered: n_samples={n} < {UNDERPOWERED_BELOW}; moment bounds are not enforced")

    degenerate = var_exp <= 0.0
    live = np.flatnonzero(~degenerate) + 1
    for k in np.flatnonzero(degenerate) + 1:
        notes.append(f"step {k}: zero-variance marginal, KS skipped")

    c_two = ks_critical_value(_per_test_alpha(alpha_level, len(live), correction))
    two_thr = c_two * math.sqrt(2.0 / n)
    ks = np.full(T, np.nan)
    if live.size:
        a = np.sort(first[:, live].T, axis=1)
        b = np.sort(second[:, live].T, axis=1)
        ks[live - 1] = _kernels.ks_2samp_sorted_rows(a, b)
        del a, b

    m1 = first[:, 1:].mean(axis=0)
    m2 = second[:, 1:].mean(axis=0)
    v1 = first[:, 1:].var(axis=0, ddof=1)
    v2 = second[:, 1:].var(axis=0, ddof=1)
    per_step = []
    for i in range(T):
        k = i + 1
        v = var_exp[i]
        mean_bound = MOMENT_SIGMAS * math.sqrt(v / n)
        var_bound = MOMENT_SIGMAS * v * math.sqrt(2.0 / n)
        moments_ok = bool(
            abs(m1[i] - mean_exp[i]) <= mean_bound and abs(m2[i] - mean_exp[i]) <= mean_bound
            and abs(v1[i] - v) <= var_bound and abs(v2[i] - v) <= var_bound
        ) if not degenerate[i] else bool(np.allclose([m1[i], m2[i]], mean_exp[i]))
        row = StepResult(
            k=k, t_k=float(times[i]),
            ks_statistic=None if degenerate[i] else float(ks[i]),
            ks_threshold=two_thr,
            mean_ddpm=float(m1[i]), mean_ou=float(m2[i]), var_ddpm=float(v1[i]), var_ou=float(v2[i]),
            mean_expected=float(mean_exp[i]), var_expected=float(v),
            moments_ok=moments_ok, skipped=bool(degenerate[i]),
        )
        per_step.append(row)
        if not row.ks_ok or (not moments_ok and not underpowered):
            failures.append(k)

    # beta_k = 0 steps have no noise to standardize
    inc_steps = np.flatnonzero(np.asarray(s.betas) > 0) + 1
    for k in np.flatnonzero(np.asarray(s.betas) <= 0) + 1:
        notes.append(f"step {k}: beta = 0, increment test skipped")
    c_one = ks_critical_value(_per_test_alpha(alpha_level, len(inc_steps), correction))
    one_thr = c_one / math.sqrt(n)
    inc_first = np.full(T, np.nan)
    inc_second = np.full(T, np.nan)
    if inc_steps.size:
        inc_first[inc_steps - 1] = _kernels.ks_normal_sorted_rows(
            np.sort(_standardized_increments(first, s, inc_steps), axis=1))
        inc_second[inc_steps - 1] = _kernels.ks_normal_sorted_rows(
            np.sort(_standardized_increments(second, s, inc_steps), axis=1))
    increments = []
    for i in range(T):
        skipped = bool(s.betas[i] <= 0)
        row = IncrementResult(
            k=i + 1,
            standardized_increment_ks=None if skipped else float(inc_first[i]),
            ou_standardized_increment_ks=None if skipped else float(inc_second[i]),
            threshold=one_thr, skipped=skipped,
        )
        increments.append(row)
        if not row.ok and row.k not in failures:
            failures.append(row.k)

    return EquivalenceReport(
        schedule=s, config=cfg, alpha_level=alpha_level, correction=correction,
        per_step=per_step, increment_checks=increments,
        identity_error=marginal_identity_check(s).max_error,
        underpowered=underpowered, failures=sorted(failures), notes=notes, warnings=warnings_,
    )


def run_equivalence(s: NoiseSchedule, cfg: EnsembleConfig, alpha_level: float = 0.01, *,
                    times: Optional[ObservationTimes] = None, correction: str = "sidak") -> EquivalenceReport:
    """Simulate both processes and test them step by step.

    Args:
        times: observation times for the OU ensemble; defaults to the
            schedule's own.  Passing distorted times is how negative
            controls are run.
        correction: ``"sidak"`` splits ``alpha_level`` across the per-step
            tests of each family so the verdict has family-wise level
            ``alpha_level``; ``"none"`` applies ``alpha_level`` to every
            test individually.
    """
    obs = times if times is not None else to_observation_times(s)
    ddpm = simulate_ddpm_chain(s, cfg, include_initial=True)
    ou = simulate_ou_at_times(obs, cfg, include_initial=True)
    return _compare(s, cfg, ddpm, ou, to_observation_times(s).times, alpha_level, correction)


def calibration_control(s: NoiseSchedule, cfg: EnsembleConfig, alpha_level: float = 0.01, *,
                        correction: str = "sidak") -> EquivalenceReport:
    """Same battery with two independent OU ensembles: the rejection rate under the null."""
    obs = to_observation_times(s)
    first = simulate_ou_at_times(obs, cfg, include_initial=True, role=ROLE_OU)
    second = simulate_ou_at_times(obs, cfg, include_initial=True, role=ROLE_OU_CONTROL)
    return _compare(s, cfg, first, second, obs.times, alpha_level, correction)


@dataclass(frozen=True)
class ScalingResult:
    family: str
    T: int
    M: int
    max_gap: float
    gaps: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"family": self.family, "T": self.T, "M": self.M, "max_gap": self.max_gap,
                "gaps": [float(g) for g in self.gaps]}


def scaling_check(spec: ScheduleSpec, M: int) -> ScalingResult:
    """Compare ``alpha_bar_k`` at ``T`` with ``alpha_bar'_{M k}`` at ``M T``."""
    if not (isinstance(M, (int, np.integer)) and M >= 2):
        raise ValueError("M must be an integer >= 2")
    coarse = generate(spec)
    fine = generate(spec.with_steps(spec.T * int(M)))
    aligned = fine.alpha_bars[int(M) - 1::int(M)]
    gaps = np.abs(aligned - coarse.alpha_bars)
    return ScalingResult(spec.family, spec.T, int(M), float(gaps.max()), gaps)
