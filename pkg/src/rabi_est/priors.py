"""Prior distributions over the transition frequency.

Three families: a flat window prior, the reparametrization-invariant prior
proportional to the square root of the classical Fisher information, and an
informative Gaussian. Priors are immutable after construction (the Jeffreys
normalizer is computed once, at construction) and safe to share.

The Gaussian log-density is the untruncated normal; downstream posterior
quadrature truncates to the window and renormalizes, while its Fisher
information keeps the textbook untruncated value 1/sigma^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import FieldConfig
from .errors import DegenerateSupport, DomainError
from .fisher import cfi_values
from .numerics import DEFAULT_TOL, Tolerance, default_step, integrate

__all__ = [
    "PriorKind",
    "SupportWindow",
    "Prior",
    "log_density",
    "dlog_density",
    "prior_fisher",
    "jeffreys_normalizer",
    "window_mass",
    "truncated_density",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class PriorKind(str, Enum):
    UNIFORM = "uniform"
    JEFFREYS = "jeffreys"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class SupportWindow:
    """Frequency window [lower, upper] the estimate is known to lie in."""

    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not 0.0 < self.lower < self.upper:
            raise DomainError(
                f"window requires 0 < lower < upper, got [{self.lower}, {self.upper}]"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class Prior:
    kind: PriorKind
    window: SupportWindow
    mean: float | None = None
    sigma: float | None = None
    field: FieldConfig | None = None
    normalizer: float | None = None

    @classmethod
    def uniform(cls, window: SupportWindow) -> "Prior":
        return cls(kind=PriorKind.UNIFORM, window=window)

    @classmethod
    def jeffreys(
        cls, window: SupportWindow, field: FieldConfig, tol: Tolerance = DEFAULT_TOL
    ) -> "Prior":
        norm = jeffreys_normalizer(field, window, tol)
        return cls(kind=PriorKind.JEFFREYS, window=window, field=field, normalizer=norm)

    @classmethod
    def gaussian(cls, window: SupportWindow, mean: float, sigma: float) -> "Prior":
        if not sigma > 0:
            raise DomainError(f"sigma must be positive, got {sigma}")
        return cls(kind=PriorKind.GAUSSIAN, window=window, mean=mean, sigma=sigma)


def jeffreys_normalizer(
    field: FieldConfig, window: SupportWindow, tol: Tolerance = DEFAULT_TOL
) -> float:
    """Quadrature of sqrt(CFI) over the window.

    Isolated degenerate points (probability pinned at 1) contribute nothing
    and are zeroed out of the integrand. Raises DegenerateSupport when the
    integral is indistinguishable from zero at the requested tolerance.
    """

    def integrand(x: np.ndarray) -> np.ndarray:
        vals = cfi_values(field, x)
        return np.sqrt(np.nan_to_num(vals, nan=0.0))

    norm = integrate(integrand, window.lower, window.upper, tol)
    if norm <= tol.abs_tol:
        raise DegenerateSupport(
            "sqrt(CFI) integrates to zero on the window; Jeffreys prior undefined"
        )
    return norm


def log_density(prior: Prior, omega0):
    """Natural log of the prior density; -inf outside the window for the
    uniform and Jeffreys families. Accepts scalar or array input."""
    x = np.asarray(omega0, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    w = prior.window
    if prior.kind is PriorKind.UNIFORM:
        inside = (x >= w.lower) & (x <= w.upper)
        vals = np.where(inside, -math.log(w.width), -np.inf)
    elif prior.kind is PriorKind.GAUSSIAN:
        z = (x - prior.mean) / prior.sigma
        vals = -0.5 * z * z - math.log(prior.sigma) - _LOG_SQRT_2PI
    else:
        inside = (x >= w.lower) & (x <= w.upper)
        f = cfi_values(prior.field, x)
        f = np.nan_to_num(f, nan=0.0)
        with np.errstate(divide="ignore"):
            vals = 0.5 * np.log(f) - math.log(prior.normalizer)
        vals = np.where(inside, vals, -np.inf)
    return float(vals[0]) if scalar else vals


def _jeffreys_dlog(prior: Prior, x: np.ndarray) -> np.ndarray:
    """Central finite difference of the Jeffreys log-density, with the step
    shrunk near the window edges so both stencil points stay inside."""
    w = prior.window
    h = np.minimum.reduce(
        [np.maximum(1e-6, 1e-7 * np.abs(x)), 0.5 * (x - w.lower), 0.5 * (w.upper - x)]
    )
    return (log_density(prior, x + h) - log_density(prior, x - h)) / (2.0 * h)


def dlog_density(prior: Prior, omega0: float) -> float:
    """Derivative of the log prior density, strictly inside the window."""
    w = prior.window
    if not w.lower < omega0 < w.upper:
        raise DomainError(
            f"omega0={omega0} is not strictly inside the window [{w.lower}, {w.upper}]"
        )
    if prior.kind is PriorKind.UNIFORM:
        return 0.0
    if prior.kind is PriorKind.GAUSSIAN:
        return -(omega0 - prior.mean) / prior.sigma**2
    return float(_jeffreys_dlog(prior, np.asarray([omega0]))[0])


def prior_fisher(prior: Prior, tol: Tolerance = DEFAULT_TOL) -> float:
    """Fisher information of the prior itself.

    Uniform: identically zero. Gaussian: the untruncated closed form
    1/sigma^2. Jeffreys: quadrature of (dlog density)^2 * density over the
    window (shrunk by a hair so the difference stencil stays inside); the
    integral diverges logarithmically when sqrt(CFI) has a zero inside the
    window, in which case the quadrature raises NonConvergence.
    """
    if prior.kind is PriorKind.UNIFORM:
        return 0.0
    if prior.kind is PriorKind.GAUSSIAN:
        return 1.0 / prior.sigma**2

    def integrand(x: np.ndarray) -> np.ndarray:
        d = _jeffreys_dlog(prior, x)
        return d * d * np.exp(log_density(prior, x))

    w = prior.window
    pad = 1e-7 * w.width
    return integrate(integrand, w.lower + pad, w.upper - pad, tol)


def window_mass(prior: Prior) -> float:
    """Prior probability mass inside the window (1 except for the Gaussian)."""
    if prior.kind is not PriorKind.GAUSSIAN:
        return 1.0
    w = prior.window
    scale = prior.sigma * math.sqrt(2.0)
    return 0.5 * (
        math.erf((w.upper - prior.mean) / scale) - math.erf((w.lower - prior.mean) / scale)
    )


def truncated_density(prior: Prior, omega0):
    """Window-renormalized prior density, zero outside the window."""
    x = np.asarray(omega0, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    w = prior.window
    inside = (x >= w.lower) & (x <= w.upper)
    vals = np.where(inside, np.exp(log_density(prior, x)) / window_mass(prior), 0.0)
    return float(vals[0]) if scalar else vals
