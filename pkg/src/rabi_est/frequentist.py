"""Frequentist estimators: the MVU estimator of the detection probability and
the maximum-likelihood estimator of the transition frequency.

The ML inversion exploits the closed detection-probability formula: with
S = inv_sinc(sqrt(xbar)/(b0 |sin theta|)) the candidate frequencies are the
two roots of a quadratic,

    omega0_hat = omega - 2 b0 cos(theta) +/- 2 sqrt(S^2 - b0^2 sin^2(theta)),

valid on the principal sinc branch. Negative roots are rejected (the
transition frequency is positive); two positive roots leave the estimate
ambiguous and the choice to the caller, which matches the experimental
procedure of retuning the drive until one root turns negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import FieldConfig, dprob_domega0, prob_detect
from .errors import (
    DegenerateData,
    DomainError,
    NoRealRoot,
    SincDomainViolated,
)
from .numerics import inv_sinc

__all__ = [
    "Dataset",
    "RootStatus",
    "Ambiguity",
    "Root",
    "EstimateResult",
    "ValidityReport",
    "mvu_p1",
    "validity",
    "ml_estimate",
    "log_likelihood",
    "log_likelihood_counts",
    "loglik_curvature",
]


@dataclass(frozen=True)
class Dataset:
    """Sufficient statistic of the binary record: n trials, k photon counts.

    k is an integer for real data; fractional counts are accepted so curve
    scans can treat the average count rate as a continuous abscissa. n = 0
    encodes the no-data case used by posterior sanity checks (the likelihood
    is then constant).
    """

    n: int
    k: float

    def __post_init__(self) -> None:
        if not self.n >= 0:
            raise DomainError(f"trial count n must be >= 0, got {self.n}")
        if not 0 <= self.k <= self.n:
            raise DomainError(f"count k must lie in [0, n], got k={self.k}, n={self.n}")

    @property
    def xbar(self) -> float:
        if self.n == 0:
            raise DomainError("xbar is undefined for an empty dataset")
        return self.k / self.n


class RootStatus(str, Enum):
    ACCEPTED = "Accepted"
    REJECTED_NEGATIVE = "RejectedNegative"
    BOUNDARY = "Boundary"


class Ambiguity(str, Enum):
    UNAMBIGUOUS = "Unambiguous"
    AMBIGUOUS = "Ambiguous"
    NO_REAL_ROOT = "NoRealRoot"
    SINC_DOMAIN_VIOLATED = "SincDomainViolated"


@dataclass(frozen=True)
class Root:
    value: float
    status: RootStatus


@dataclass(frozen=True)
class EstimateResult:
    roots: tuple[Root, ...]
    ambiguity: Ambiguity

    @property
    def accepted(self) -> tuple[float, ...]:
        return tuple(r.value for r in self.roots if r.status is RootStatus.ACCEPTED)


@dataclass(frozen=True)
class ValidityReport:
    """Inversion feasibility: sinc domain and real-distinct-root conditions."""

    sinc_ok: bool
    real_distinct: bool
    s_value: float


def mvu_p1(data: Dataset) -> float:
    """Minimum-variance unbiased estimate of the detection probability: k/n."""
    return data.xbar


def validity(xbar: float, cfg: FieldConfig) -> ValidityReport:
    """Check the two inversion conditions for an observed count rate."""
    if not 0.0 <= xbar <= 1.0:
        raise DomainError(f"xbar must lie in [0, 1], got {xbar}")
    bsin = cfg.b0 * abs(math.sin(cfg.theta))
    ratio = math.sqrt(xbar) / bsin
    if ratio > 1.0:
        return ValidityReport(sinc_ok=False, real_distinct=False, s_value=math.nan)
    s = inv_sinc(ratio)
    return ValidityReport(sinc_ok=True, real_distinct=s * s > bsin * bsin, s_value=s)


def ml_estimate(xbar: float, cfg: FieldConfig) -> EstimateResult:
    """Maximum-likelihood candidates for the transition frequency.

    Raises DegenerateData for xbar = 0 (the likelihood is then independent of
    the frequency), SincDomainViolated when the sinc inverse is undefined and
    NoRealRoot when the quadratic discriminant is nonpositive. An observed
    rate of exactly 1 always fails one of the latter two conditions.
    """
    if not 0.0 <= xbar <= 1.0:
        raise DomainError(f"xbar must lie in [0, 1], got {xbar}")
    if xbar == 0.0:
        raise DegenerateData("xbar = 0 carries no information about the frequency")
    report = validity(xbar, cfg)
    if not report.sinc_ok:
        raise SincDomainViolated(
            f"sqrt(xbar)={math.sqrt(xbar):.6g} exceeds b0*|sin theta|="
            f"{cfg.b0 * abs(math.sin(cfg.theta)):.6g}"
        )
    if not report.real_distinct:
        raise NoRealRoot("S^2 - b0^2 sin^2(theta) <= 0; estimates are not real and distinct")
    if xbar == 1.0:
        raise DegenerateData("xbar = 1 carries no information about the frequency")

    bsin = cfg.b0 * abs(math.sin(cfg.theta))
    center = cfg.omega - 2.0 * cfg.b0 * math.cos(cfg.theta)
    delta = 2.0 * math.sqrt(report.s_value**2 - bsin * bsin)
    roots = []
    for value in (center + delta, center - delta):
        if value > 0.0:
            status = RootStatus.ACCEPTED
        elif value < 0.0:
            status = RootStatus.REJECTED_NEGATIVE
        else:
            status = RootStatus.BOUNDARY
        roots.append(Root(value=value, status=status))
    n_accepted = sum(1 for r in roots if r.status is RootStatus.ACCEPTED)
    ambiguity = Ambiguity.AMBIGUOUS if n_accepted == 2 else Ambiguity.UNAMBIGUOUS
    return EstimateResult(roots=tuple(roots), ambiguity=ambiguity)


def log_likelihood_counts(n: float, k: float, p1) -> float:
    """Binomial log-likelihood k*ln(p) + (n-k)*ln(1-p) + ln C(n, k).

    The binomial coefficient uses log-gamma so fractional counts are allowed.
    Probabilities pinned at 0 or 1 give -inf unless the counts agree exactly.
    Accepts scalar or array p1.
    """
    log_binom = math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)
    p = np.asarray(p1, dtype=float)
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        term1 = np.where(k == 0.0, 0.0, k * np.log(p))
        term2 = np.where(k == n, 0.0, (n - k) * np.log1p(-p))
    vals = log_binom + term1 + term2
    vals = np.where(np.isnan(vals), -np.inf, vals)
    return float(vals[0]) if scalar else vals


def log_likelihood(data: Dataset, cfg: FieldConfig, omega0) -> float:
    """Log-likelihood of the dataset at a candidate transition frequency."""
    return log_likelihood_counts(data.n, data.k, prob_detect(cfg, omega0))


def loglik_curvature(data: Dataset, cfg: FieldConfig, omega0: float) -> float:
    """Second derivative of the log-likelihood at a stationary point,

        -n / (p (1-p)) * (dp/domega0)^2,

    the closed form of the ML second-derivative test. Negative whenever the
    probability derivative is nonzero, confirming a maximum.
    """
    p = float(prob_detect(cfg, omega0))
    if p <= 0.0 or p >= 1.0:
        raise DegenerateData(f"probability {p} pinned at 0 or 1; curvature undefined")
    dp = float(dprob_domega0(cfg, omega0))
    return -data.n / (p * (1.0 - p)) * dp * dp
