"""Classical and quantum Fisher information for the transition frequency.

The closed forms below come from the photon-count statistics of the driven
two-level system evaluated at gate time t = 1. ``cfi`` uses the explicit
rational-trigonometric expression whose removable singularities cancel
analytically; it only degenerates where the detection probability is pinned
at 1 (zero-variance data), which is reported as DegenerateProbability.

Raw values are in t = 1 units; the omega^2-scaled variants used for the
dimensionless landscape maps are a separate explicit transform
(:func:`paper_scaled`), since that scaling degenerates at omega = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import FieldConfig, _detuning, ddensity_domega0, q_factor
from .errors import DegenerateProbability, DomainError

__all__ = [
    "FisherPoint",
    "cfi",
    "cfi_values",
    "qfi",
    "qfi_values",
    "fisher_gap",
    "sld_matrix",
    "required_samples",
    "paper_scaled",
]

# Guard band on rho00 near 1 where the CFI denominator underflows.
_EPS = 1e-12


@dataclass(frozen=True)
class FisherPoint:
    """Classical information, quantum information and their gap at one point."""

    cfi: float
    qfi: float
    gap: float


def _cfi_parts(cfg: FieldConfig, omega0, t: float = 1.0):
    """Numerator and denominator of the closed-form CFI, plus q^2*(1-rho00)."""
    b = cfg.b0 * np.sin(cfg.theta)
    d = _detuning(cfg, omega0)
    q = q_factor(cfg, omega0)
    half = 0.5 * q * t
    s = np.sin(half)
    shape = s - half * np.cos(half)
    num = 16.0 * b * b * d * d * shape * shape
    # q^2 - 4 b^2 sin^2(qt/2) == q^2 * (1 - rho00); vanishes only at rho00 = 1
    resid = q * q - 4.0 * b * b * s * s
    return num, q**4 * resid, resid, q * q


def cfi(cfg: FieldConfig, omega0: float) -> float:
    """Classical Fisher information of a single binary detection at t = 1.

    Raises DegenerateProbability when the detection probability sits within
    1e-12 of 1 and the numerator does not vanish with it; a vanishing
    numerator yields the limiting value 0.
    """
    num, den, resid, q2 = _cfi_parts(cfg, omega0)
    if resid <= _EPS * q2:
        if num == 0.0:
            return 0.0
        raise DegenerateProbability(
            "detection probability is 1 within guard; CFI denominator underflows"
        )
    return float(num / den)


def cfi_values(cfg: FieldConfig, omega0s: np.ndarray) -> np.ndarray:
    """Vectorized CFI over an array of omega0 values.

    Degenerate points (probability pinned at 1 with nonvanishing numerator)
    come back as NaN instead of raising, so grid scans and quadratures can
    tag them cell by cell.
    """
    num, den, resid, q2 = _cfi_parts(cfg, np.asarray(omega0s, dtype=float))
    bad = resid <= _EPS * q2
    out = np.divide(num, den, out=np.zeros_like(num), where=~bad)
    out[bad & (num != 0.0)] = np.nan
    return out


def _qfi_formula(cfg: FieldConfig, omega0, t: float = 1.0):
    b = cfg.b0 * np.sin(cfg.theta)
    d = _detuning(cfg, omega0)
    q = q_factor(cfg, omega0)
    qt = q * t
    cos_qt = np.cos(qt)
    sin_qt = np.sin(qt)
    d2 = d * d
    x = 2.0 - 2.0 * cos_qt - qt * sin_qt
    y = (q * q - 2.0 * d2) * (1.0 - cos_qt) / q + d2 * t * sin_qt
    z = qt * cos_qt - sin_qt
    return (4.0 * b * b / q**6) * ((4.0 * b * b * d2 / (q * q)) * x * x + y * y + d2 * z * z)


def qfi(cfg: FieldConfig, omega0: float) -> float:
    """Quantum Fisher information (projective-measurement optimum) at t = 1."""
    return float(_qfi_formula(cfg, omega0))


def qfi_values(cfg: FieldConfig, omega0s: np.ndarray) -> np.ndarray:
    """Vectorized QFI over an array of omega0 values."""
    return _qfi_formula(cfg, np.asarray(omega0s, dtype=float))


def fisher_gap(cfg: FieldConfig, omega0: float) -> FisherPoint:
    """CFI, QFI and the gap QFI - CFI bundled for one configuration."""
    f = cfi(cfg, omega0)
    h = qfi(cfg, omega0)
    return FisherPoint(cfi=f, qfi=h, gap=h - f)


def sld_matrix(cfg: FieldConfig, omega0: float) -> np.ndarray:
    """Symmetric logarithmic derivative L = 2 * d(rho)/d(omega0).

    For a pure state the SLD is twice the density-matrix derivative; L^2 is a
    scalar multiple of the identity and trace(L^2 rho) recovers the QFI.
    """
    drho00, drho01 = ddensity_domega0(cfg, omega0)
    return 2.0 * np.array(
        [[drho00, drho01], [np.conj(drho01), -drho00]], dtype=complex
    )


def required_samples(cfi_scaled: float, accuracy: float) -> float:
    """Number of IID detections for a target variance: N = 1/(accuracy * CFI).

    Not rounded; callers may take the ceiling.
    """
    if not cfi_scaled > 0:
        raise DomainError(f"cfi_scaled must be positive, got {cfi_scaled}")
    if not accuracy > 0:
        raise DomainError(f"accuracy must be positive, got {accuracy}")
    return 1.0 / (accuracy * cfi_scaled)


def paper_scaled(value, cfg: FieldConfig):
    """Dimensionless omega^2 scaling applied to a raw Fisher quantity."""
    return value * cfg.omega**2
