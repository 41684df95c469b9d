"""Density-to-schedule engine.

A design density ``pi(theta)`` on ``theta = exp(-t) in (0, 1]`` is turned into a
schedule by inverse transform sampling: the survival CDF
``F(theta) = int_theta^1 pi(u) du / Z`` is solved at the marks ``k/T`` and the
roots give ``alpha_bar_k = theta_k**2``.  Forward time runs from ``theta = 1``
(``k = 0``, not stored) down to ``theta = 0`` (``k = T``).

Built-in densities carry closed-form CDFs and inverses; every density can also
be pushed through the numeric path (adaptive quadrature plus bracketed root
finding), which is how custom densities are handled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import ou_core
from .errors import DomainError, InversionError, NonIntegrableError

__all__ = [
    "DesignDensity",
    "InverseCdfResult",
    "fisher_sqrt",
    "cv_inverse",
    "auto_variance_increment",
    "custom",
    "normalize",
    "survival_cdf",
    "invert_at_marks",
    "reparametrization_check",
]

QUAD_EPSABS = 1e-10
# The CDF feeds a root finder that must resolve theta to ~1e-14, so it is
# integrated well past the normalization tolerance.
CDF_EPSABS = 1e-15
CDF_EPSREL = 1e-14
ROOT_XTOL = 1e-15
ROOT_MAXITER = 200
OVERFLOW_GUARD = 1e12
ACCEPT_ABSERR = 1e-11
_BELOW_ONE = math.nextafter(1.0, 0.0)
_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class DesignDensity:
    """A sampling density over ``theta``.

    Attributes:
        kind: ``"fisher-sqrt"``, ``"cv-inverse"``, ``"auto-variance"`` or ``"custom"``.
        evaluator: unnormalized density, vectorized or scalar, positive on (0, 1).
        singular_at_one: integrate in ``u = arcsin(theta)`` to tame an
            integrable singularity at ``theta = 1``.
        normalization: closed-form ``Z`` if known.
        analytic_cdf: closed-form normalized survival CDF.
        analytic_alpha_bar: closed-form root ``theta(c)**2`` at mark ``c``.
        time_density: the density rewritten in ``t``, for invariance checks.
    """

    kind: str
    evaluator: Callable[[float], float] = field(repr=False)
    singular_at_one: bool
    name: str = ""
    normalization: Optional[float] = None
    analytic_cdf: Optional[Callable[[float], float]] = field(default=None, repr=False)
    analytic_alpha_bar: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    time_density: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    @property
    def has_analytic_path(self) -> bool:
        return self.analytic_alpha_bar is not None and self.normalization is not None

    def describe(self) -> dict:
        return {"kind": self.kind, "name": self.name or self.kind, "singular_at_one": self.singular_at_one}


@dataclass(frozen=True)
class InverseCdfResult:
    thetas: np.ndarray
    alpha_bars: np.ndarray
    normalization: float
    method: str

    def __len__(self):
        return len(self.thetas)


def _fisher_alpha_bar(c):
    # cos^2(c pi/2), split so both ends keep full relative precision and c=1/2 gives exactly 1/2.
    c = np.asarray(c, dtype=float)
    head = 0.5 * (1.0 + np.cos(math.pi * c))
    tail = np.sin(0.5 * math.pi * (1.0 - c)) ** 2
    return np.where(c <= 0.5, head, tail)


def fisher_sqrt() -> DesignDensity:
    """``pi(theta) = 1/sqrt(1 - theta^2)``; its marks give the cosine schedule.

    This is ``1/sqrt(var[X_t])``.  The Fisher information of the marginal with
    respect to its mean is ``1/var[X_t]``, so the density is its square root;
    the step from there to a density over ``theta`` is taken as a modelling
    choice rather than derived.
    """
    return DesignDensity(
        kind="fisher-sqrt",
        evaluator=_fisher_evaluator,
        singular_at_one=True,
        normalization=ou_core.FISHER_NORMALIZATION,
        analytic_cdf=lambda theta: 1.0 - (2.0 / math.pi) * np.arcsin(theta),
        analytic_alpha_bar=_fisher_alpha_bar,
        time_density=ou_core.fisher_density_in_time,
    )


def _cv_evaluator(theta):
    if isinstance(theta, float):
        return theta / math.sqrt((1.0 - theta) * (1.0 + theta))
    theta = np.asarray(theta, dtype=float)
    return theta / np.sqrt((1.0 - theta) * (1.0 + theta))


def _fisher_evaluator(theta):
    if isinstance(theta, float):
        if not 0.0 <= theta < 1.0:
            raise DomainError("theta must lie in [0, 1)")
        return 1.0 / math.sqrt((1.0 - theta) * (1.0 + theta))
    return ou_core.fisher_density_unnormalized(theta)


def _linear_evaluator(theta):
    if isinstance(theta, float):
        return 2.0 * theta
    return 2.0 * np.asarray(theta, dtype=float)


def cv_inverse() -> DesignDensity:
    """``pi(theta) = 1/CV = theta/sqrt(1 - theta^2)``; marks are quadratic in alpha_bar."""
    return DesignDensity(
        kind="cv-inverse",
        evaluator=_cv_evaluator,
        singular_at_one=True,
        normalization=1.0,
        analytic_cdf=lambda theta: np.sqrt((1.0 - np.asarray(theta)) * (1.0 + np.asarray(theta))),
        analytic_alpha_bar=lambda c: (1.0 - np.asarray(c)) * (1.0 + np.asarray(c)),
        # 1/CV written directly in t; differs from pi(theta)*theta, so not invariant.
        time_density=lambda t: 1.0 / np.sqrt(np.expm1(2.0 * np.asarray(t, dtype=float))),
    )


def auto_variance_increment() -> DesignDensity:
    """``pi(theta) = 2 theta``: equal steps in auto-variance ``1 - theta^2``."""
    return DesignDensity(
        kind="auto-variance",
        evaluator=_linear_evaluator,
        singular_at_one=False,
        normalization=1.0,
        analytic_cdf=lambda theta: (1.0 - np.asarray(theta)) * (1.0 + np.asarray(theta)),
        analytic_alpha_bar=lambda c: 1.0 - np.asarray(c, dtype=float),
    )


def custom(evaluator: Callable[[float], float], *, singular_at_one: bool, name: str = "",
           time_density=None) -> DesignDensity:
    """Wrap a user density.  The singularity flag is mandatory; nothing is auto-detected.

    The evaluator must be side-effect free.
    """
    return DesignDensity(kind="custom", evaluator=evaluator, singular_at_one=bool(singular_at_one),
                         name=name, time_density=time_density)


def _evaluate(d: DesignDensity, theta: float) -> float:
    return float(d.evaluator(theta))


class _Variable:
    """Integration variable ``x`` with ``theta = sin(x)`` (singular) or ``theta = x``."""

    def __init__(self, d: DesignDensity):
        self.d = d
        self.singular = d.singular_at_one
        self.top = 0.5 * math.pi if self.singular else 1.0

    def theta(self, x: float) -> float:
        return math.sin(x) if self.singular else x

    def from_theta(self, theta: float) -> float:
        return math.asin(theta) if self.singular else theta

    def integrand(self, x: float) -> float:
        if self.singular:
            # Jacobian taken from the rounded theta itself (cos(asin(s))), so that
            # density and Jacobian see the same point even where sin(x) rounds
            # to within a few ulps of one.
            s = min(math.sin(x), _BELOW_ONE)
            return _evaluate(self.d, s) * math.sqrt((1.0 - s) * (1.0 + s))
        return _evaluate(self.d, x)

    def integral(self, a: float, b: float, epsabs: float = CDF_EPSABS, epsrel: float = CDF_EPSREL) -> float:
        """``int_a^b`` of the density in this variable."""
        if a >= b:
            return 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            try:
                out = integrate.quad(self.integrand, a, b, epsabs=epsabs, epsrel=epsrel,
                                     limit=200, full_output=1)
            except (ZeroDivisionError, OverflowError, DomainError) as exc:
                raise NonIntegrableError(f"quadrature of {self.d.kind} density failed: {exc}") from exc
        value, abserr = out[0], out[1]
        # Requested tolerances sit at the integrand's roundoff floor; QUADPACK then
        # reports roundoff trouble, which is harmless when its error estimate is tiny.
        if len(out) > 3 and not (abserr <= ACCEPT_ABSERR and _benign(out[3])):
            raise NonIntegrableError(f"quadrature of {self.d.kind} density failed: {out[3].splitlines()[0]}")
        if not math.isfinite(value) or abs(value) > OVERFLOW_GUARD:
            raise NonIntegrableError(f"{self.d.kind} density integral diverges (estimate {value!r})")
        return value


def _benign(message: str) -> bool:
    message = message.lower()
    return "roundoff" in message or "maximum number of subdivisions" in message


def normalize(d: DesignDensity, method: str = "auto") -> float:
    """Normalization ``Z = int_0^1 pi(theta) dtheta``.

    Args:
        method: ``"auto"`` uses a closed form when the density has one,
            ``"numeric"`` always integrates.
    """
    _check_method(method)
    if method != "numeric" and d.normalization is not None:
        return float(d.normalization)
    var = _Variable(d)
    z = var.integral(0.0, var.top, epsabs=QUAD_EPSABS, epsrel=CDF_EPSREL)
    if z <= 0:
        raise NonIntegrableError(f"{d.kind} density integrates to a non-positive value {z!r}")
    return z


def _check_method(method):
    if method not in ("auto", "analytic", "numeric"):
        raise ValueError(f"unknown method {method!r}")


def survival_cdf(d: DesignDensity, theta: float, method: str = "auto", *, normalization=None) -> float:
    """``int_theta^1 pi(u) du / Z`` for ``theta in (0, 1]``."""
    _check_method(method)
    if not (0.0 < theta <= 1.0):
        raise DomainError(f"theta must lie in (0, 1], got {theta!r}")
    if method != "numeric" and d.analytic_cdf is not None:
        return float(d.analytic_cdf(theta))
    if method == "analytic":
        raise ValueError(f"{d.kind} density has no closed-form CDF")
    z = normalization if normalization is not None else normalize(d, method="numeric")
    var = _Variable(d)
    return var.integral(var.from_theta(theta), var.top) / z


def _walk_roots(var: _Variable, targets, *, from_top: bool):
    """Roots ``x`` of ``int_x^top = target`` (or ``int_0^x`` when walking up from zero).

    Targets are visited in increasing order, so each root lies between the
    previous root and the far end.  Each root is found by Newton steps on the
    accumulated integral (the derivative is the density itself), falling back
    to bisection whenever a step leaves the bracket.
    """
    roots = []
    anchor = var.top if from_top else 0.0
    mass = 0.0
    for target in targets:
        lo, hi = (0.0, anchor) if from_top else (anchor, var.top)

        x = 0.5 * (lo + hi)
        for _ in range(ROOT_MAXITER):
            piece = var.integral(x, anchor) if from_top else var.integral(anchor, x)
            r = mass + piece - target
            if r == 0.0:
                break
            # residual decreases in x when walking down from the top, increases otherwise
            if (r > 0) == from_top:
                lo = x
            else:
                hi = x
            slope = var.integrand(x) if 0.0 < x < var.top else float("nan")
            step = r / slope if from_top else -r / slope
            candidate = x + step if math.isfinite(step) else float("nan")
            if not (lo <= candidate <= hi):
                candidate = 0.5 * (lo + hi)
            if abs(candidate - x) <= ROOT_XTOL + 4 * _EPS * abs(x) or hi - lo <= ROOT_XTOL:
                break
            x = candidate
        else:
            raise InversionError(f"root finding did not converge for target mass {target!r}")
        mass += piece
        anchor = x
        roots.append(x)
    return roots


def invert_at_marks(d: DesignDensity, T: int, method: str = "auto") -> InverseCdfResult:
    """Solve ``F(theta_k) = k/T`` for ``k = 1..T``.

    The analytic path uses each density's closed-form root.  The numeric path
    integrates the density (in ``u = arcsin(theta)`` for singular densities) and
    solves for each root to an absolute tolerance of 1e-15 in the integration
    variable.  Marks up to 1/2 are measured from ``theta = 1`` and the rest
    from ``theta = 0``, so both tails keep their relative precision.
    ``theta_T = 0`` is set directly: the last mark is the limiting distribution.
    """
    _check_method(method)
    if not (isinstance(T, (int, np.integer)) and T >= 1):
        raise ValueError(f"T must be a positive integer, got {T!r}")
    T = int(T)
    marks = np.arange(1, T + 1, dtype=float) / T

    if method != "numeric" and d.has_analytic_path:
        alpha_bars = np.asarray(d.analytic_alpha_bar(marks), dtype=float)
        alpha_bars[-1] = 0.0
        return InverseCdfResult(np.sqrt(alpha_bars), alpha_bars, float(d.normalization), "analytic")
    if method == "analytic":
        raise ValueError(f"{d.kind} density has no closed-form inverse")

    _probe_positive(d)
    z = normalize(d, method="numeric")
    var = _Variable(d)
    upper_ks = [k for k in range(1, T) if 2 * k <= T]
    lower_ks = [k for k in range(T - 1, 0, -1) if 2 * k > T]
    roots = {}
    for k, x in zip(upper_ks, _walk_roots(var, [k / T * z for k in upper_ks], from_top=True)):
        roots[k] = x
    for k, x in zip(lower_ks, _walk_roots(var, [(T - k) / T * z for k in lower_ks], from_top=False)):
        roots[k] = x
    thetas = np.array([var.theta(roots[k]) for k in range(1, T)] + [0.0])
    alpha_bars = thetas * thetas
    if np.any(np.diff(thetas) >= 0):
        raise InversionError(f"{d.kind} CDF is not strictly monotone; roots are out of order")
    return InverseCdfResult(thetas, alpha_bars, z, "numeric")


def _probe_positive(d: DesignDensity, n: int = 64):
    probe = (np.arange(n) + 0.5) / n
    values = np.array([_evaluate(d, x) for x in probe])
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise InversionError(f"{d.kind} density is not positive on (0, 1)")


def reparametrization_check(d: DesignDensity, grid) -> float:
    """Max gap between ``pi(theta) * theta`` and the density written in ``t = -log(theta)``.

    Zero (to roundoff) means the density transforms as a density under the
    change of variable; only the Fisher density is expected to pass.
    """
    if d.time_density is None:
        raise ValueError(f"{d.kind} density has no time-domain form to compare against")
    theta = np.atleast_1d(np.asarray(grid, dtype=float))
    if theta.size == 0:
        raise ValueError("grid must be non-empty")
    if np.any((theta <= 0) | (theta >= 1)):
        raise DomainError("grid must lie in (0, 1)")
    pushed = np.asarray(d.evaluator(theta), dtype=float) * theta
    in_time = np.asarray(d.time_density(-np.log(theta)), dtype=float)
    return float(np.max(np.abs(pushed - in_time)))
