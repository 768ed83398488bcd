"""Scalar figures of merit for spin-dependent photon counting.

Contrast, shot-noise-limited SNR, the gating enhancement factor and its
quadratic measurement-time speedup, and the CW magnetic-resonance
sensitivity. All functions are pure algebra over count or rate pairs; no
model evaluation happens here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import MetricError


@dataclass(frozen=True)
class CountPair:
    """Detected counts per channel: n0 = MW off (reference), n1 = MW on."""

    n0: float
    n1: float

    def __post_init__(self):
        if not (self.n0 >= 0 and self.n1 >= 0):
            raise ValueError(f"counts must be non-negative, got ({self.n0}, {self.n1})")


@dataclass(frozen=True)
class RatePair:
    """Detected steady rates (counts/s) per channel, background included."""

    r0: float
    r1: float

    def __post_init__(self):
        if not (self.r0 >= 0 and self.r1 >= 0):
            raise ValueError(f"rates must be non-negative, got ({self.r0}, {self.r1})")


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 defaults; injectable so results can be pinned bit-exactly."""

    planck_h: float = 6.62607015e-34  # J s
    electron_g: float = 2.00231930436256
    bohr_magneton: float = 9.2740100783e-24  # J/T

    def __post_init__(self):
        if not (self.planck_h > 0 and self.electron_g > 0 and self.bohr_magneton > 0):
            raise ValueError("physical constants must be strictly positive")


def contrast(p: CountPair) -> float:
    """Readout contrast C = (N0 - N1) / N0.

    Negative values are reported as-is (inverted dip), not clamped.
    """
    if p.n0 == 0:
        raise MetricError("undefined contrast: reference channel N0 has zero counts")
    return (p.n0 - p.n1) / p.n0


def snr(p: CountPair) -> float:
    """Shot-noise-limited SNR = (N0 - N1) / sqrt(N0 + N1)."""
    total = p.n0 + p.n1
    if total == 0:
        raise MetricError("undefined SNR: both channels have zero counts")
    return (p.n0 - p.n1) / math.sqrt(total)


def ef_theoretical(contrast: float, bg_ratio: float) -> float:
    """Ideal SNR enhancement from gating out all background.

    EF = sqrt(1 + 2/(2 - C) * n_BG/n0), assuming the gate removes the
    background completely while keeping the full signal.
    """
    if bg_ratio < 0:
        raise MetricError(f"background ratio must be >= 0, got {bg_ratio}")
    if contrast >= 2:
        raise MetricError(f"contrast must be < 2, got {contrast}")
    return math.sqrt(1.0 + 2.0 / (2.0 - contrast) * bg_ratio)


def speedup(ef: float) -> float:
    """Measurement-time speedup SF = EF^2 at equal target SNR."""
    return ef * ef


def ef_empirical(gated: CountPair, ungated: CountPair) -> float:
    """Measured enhancement factor: SNR(gated) / SNR(ungated)."""
    return snr(gated) / snr(ungated)


def sensitivity_cw(
    linewidth: float, rates: RatePair, constants: PhysicalConstants | None = None
) -> float:
    """Shot-noise-limited CW magnetic-field sensitivity in T / sqrt(Hz).

    eta = 4/(3 sqrt(3)) * h/(g_e mu_B) * dnu * sqrt(R0) / (R0 - R1)
    with dnu the resonance FWHM and R0 > R1 the off/on-resonance rates.
    """
    if constants is None:
        constants = PhysicalConstants()
    if not linewidth > 0:
        raise MetricError(f"linewidth must be > 0, got {linewidth}")
    if rates.r0 <= rates.r1:
        raise MetricError("non-positive ODMR dip")
    prefactor = 4.0 / (3.0 * math.sqrt(3.0))
    quantum = constants.planck_h / (constants.electron_g * constants.bohr_magneton)
    return prefactor * quantum * linewidth * math.sqrt(rates.r0) / (rates.r0 - rates.r1)
