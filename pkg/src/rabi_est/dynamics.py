"""Closed-form dynamics of a two-level system driven by a gyrating magnetic field.

Everything is expressed in dimensionless form with the detector gate time
normalized to t = 1: ``omega`` is the drive's angular speed times the gate
time, ``b0`` the magnetic coupling (gyromagnetic factor times field strength
times gate time) and ``theta`` the gyration angle. The system starts in the
excited state; a photon is registered with probability ``rho00 = |c0|^2``.

The ``t`` keyword on the evaluators exists for tests that probe intermediate
times; production code always evaluates at the gate boundary t = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import central_diff

__all__ = [
    "FieldConfig",
    "DensityState",
    "q_factor",
    "amplitudes",
    "density_state",
    "prob_detect",
    "dprob_domega0",
    "ddensity_domega0",
    "ode_residual",
]


@dataclass(frozen=True)
class FieldConfig:
    """Dimensionless drive parameters of the gyrating magnetic field."""

    omega: float
    b0: float
    theta: float

    def __post_init__(self) -> None:
        if not self.b0 > 0:
            raise DomainError(f"b0 must be positive, got {self.b0}")
        if not 0.0 < self.theta < math.pi:
            raise DomainError(f"theta must lie in (0, pi), got {self.theta}")


@dataclass(frozen=True)
class DensityState:
    """Independent entries of the pure-state density matrix."""

    rho00: float
    rho01: complex

    def __post_init__(self) -> None:
        if not -1e-12 <= self.rho00 <= 1.0 + 1e-12:
            raise DomainError(f"rho00 must be a probability, got {self.rho00}")
        if abs(self.rho01) ** 2 > self.rho00 * (1.0 - self.rho00) + 1e-12:
            raise DomainError("coherence exceeds the pure-state bound")


def _detuning(cfg: FieldConfig, omega0):
    """omega - omega0 - 2*b0*cos(theta), the recurring detuning combination."""
    return cfg.omega - omega0 - 2.0 * cfg.b0 * np.cos(cfg.theta)


def q_factor(cfg: FieldConfig, omega0):
    """Generalized Rabi frequency.

    Evaluated as the hypotenuse of the detuning combination and
    2*b0*sin(theta), a sum of squares that is strictly positive for any
    b0 > 0 and theta in (0, pi). Accepts scalar or array ``omega0``.
    """
    return np.hypot(_detuning(cfg, omega0), 2.0 * cfg.b0 * np.sin(cfg.theta))


def amplitudes(cfg: FieldConfig, omega0, t: float = 1.0):
    """Probability amplitudes (c0, c1) for the start-in-excited-state problem."""
    d = _detuning(cfg, omega0)
    q = q_factor(cfg, omega0)
    half = 0.5 * q * t
    c0 = -2.0j * np.exp(-0.5j * cfg.omega * t) * (cfg.b0 * np.sin(cfg.theta) / q) * np.sin(half)
    c1 = np.exp(0.5j * cfg.omega * t) * (np.cos(half) - 1.0j * (d / q) * np.sin(half))
    return c0, c1


def density_state(cfg: FieldConfig, omega0: float, t: float = 1.0) -> DensityState:
    """Density-matrix entries rho00 = |c0|^2 and rho01 = c0 * conj(c1)."""
    c0, c1 = amplitudes(cfg, omega0, t)
    return DensityState(rho00=float(abs(c0) ** 2), rho01=complex(c0 * np.conj(c1)))


def prob_detect(cfg: FieldConfig, omega0, t: float = 1.0):
    """Photon detection probability 4*b0^2*sin^2(theta)/q^2 * sin^2(q t/2).

    Accepts scalar or array ``omega0``.
    """
    b = cfg.b0 * np.sin(cfg.theta)
    q = q_factor(cfg, omega0)
    return (2.0 * b / q) ** 2 * np.sin(0.5 * q * t) ** 2


def dprob_domega0(cfg: FieldConfig, omega0, t: float = 1.0):
    """Analytic derivative of the detection probability with respect to omega0.

    Chain rule through dq/domega0 = -detuning/q gives
    8 b^2 d sin(qt/2) [sin(qt/2) - (qt/2) cos(qt/2)] / q^4 with
    b = b0 sin(theta) and d the detuning combination. Accepts arrays.
    """
    b = cfg.b0 * np.sin(cfg.theta)
    d = _detuning(cfg, omega0)
    q = q_factor(cfg, omega0)
    half = 0.5 * q * t
    s = np.sin(half)
    return 8.0 * b * b * d * s * (s - half * np.cos(half)) / q**4


def ddensity_domega0(cfg: FieldConfig, omega0, t: float = 1.0):
    """Analytic derivatives (drho00, drho01) with respect to omega0.

    The coherence derivative follows from rho01 written as
    b e^{-i omega t} [d (1 - cos qt)/q^2 - i sin(qt)/q]. Accepts arrays.
    """
    b = cfg.b0 * np.sin(cfg.theta)
    d = _detuning(cfg, omega0)
    q = q_factor(cfg, omega0)
    qt = q * t
    cos_qt = np.cos(qt)
    sin_qt = np.sin(qt)
    dre = -((q * q - 2.0 * d * d) * (1.0 - cos_qt) + d * d * qt * sin_qt) / q**4
    dim = d * (qt * cos_qt - sin_qt) / q**3
    drho01 = b * np.exp(-1.0j * cfg.omega * t) * (dre + 1.0j * dim)
    return dprob_domega0(cfg, omega0, t), drho01


def ode_residual(cfg: FieldConfig, omega0: float, t: float) -> tuple[complex, complex]:
    """Residuals of the two coupled amplitude ODEs at time t.

    Time derivatives of the closed-form amplitudes are taken by central
    differences (h = 1e-6); a correct solution leaves both residuals below
    about 1e-6. Test oracle only.
    """
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    a = 0.5 * omega0 + cfg.b0 * np.cos(cfg.theta)
    b = cfg.b0 * np.sin(cfg.theta)
    h = 1e-6

    def c0_at(s: float) -> complex:
        return complex(amplitudes(cfg, omega0, s)[0])

    def c1_at(s: float) -> complex:
        return complex(amplitudes(cfg, omega0, s)[1])

    dc0 = central_diff(c0_at, t, h)
    dc1 = central_diff(c1_at, t, h)
    c0, c1 = amplitudes(cfg, omega0, t)
    r0 = dc0 - (-1.0j * a * c0 - 1.0j * b * np.exp(-1.0j * cfg.omega * t) * c1)
    r1 = dc1 - (1.0j * a * c1 - 1.0j * b * np.exp(1.0j * cfg.omega * t) * c0)
    return complex(r0), complex(r1)
