"""Multi-exponential fluorescence decay model and gated photon-count integrals.

The emitter is described by independent exponential decay components split
into three groups: spin-0 fluorescence, spin-1 fluorescence, and short-lived
background emission, plus a time-independent detector dark rate. With a
Gaussian instrument response of width ``irf_sigma`` each component becomes an
exponentially modified Gaussian (EMG).

All count integrals have closed forms for ``irf_sigma = 0``; the EMG case
falls back to adaptive quadrature. Counts are "per pulse": multiply by the
repetition rate for steady-state rates.

Spin selection: operations take a selector that is either the string
``"ms0"`` / ``"ms1"`` or a float weight ``w`` in [0, 1] meaning a population
mixture ``(1 - w) * spin0 + w * spin1``. Driving the spin transition never
changes the emitted amplitude per excited population, only how the population
is shared between the two decay branches, so a partially saturated MW-on
channel is the mixture with ``w = C_sat``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import erfc, erfcx

from .errors import GateError
from .histogram import TcspcHistogram
from .quadrature import adaptive_simpson

SpinSelector = Union[str, float]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class DecayComponent:
    """One exponential decay component.

    amplitude: counts/ns at the pulse instant, per excitation cycle.
    lifetime:  1/e decay time in ns.
    """

    amplitude: float
    lifetime: float
    label: str = ""

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if not self.lifetime > 0:
            raise ValueError(f"lifetime must be > 0, got {self.lifetime}")

    def scaled(self, factor: float) -> "DecayComponent":
        return DecayComponent(self.amplitude * factor, self.lifetime, self.label)


@dataclass(frozen=True)
class GateWindow:
    """Detection window [t_start, t_end) in ns after the pulse trigger."""

    t_start: float
    t_end: float = math.inf

    def __post_init__(self):
        if not (0 <= self.t_start < self.t_end):
            raise ValueError(
                f"gate window requires 0 <= t_start < t_end, got [{self.t_start}, {self.t_end})"
            )

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.t_end)

    @property
    def length(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class PulseTrain:
    """Periodic excitation at rep_rate Hz; period in ns."""

    rep_rate: float

    def __post_init__(self):
        if not self.rep_rate > 0:
            raise ValueError(f"rep_rate must be > 0, got {self.rep_rate}")

    @property
    def period(self) -> float:
        return 1e9 / self.rep_rate


def _components(value, group: str) -> tuple[DecayComponent, ...]:
    comps = tuple(value)
    for c in comps:
        if not isinstance(c, DecayComponent):
            raise ValueError(f"{group} entries must be DecayComponent, got {type(c).__name__}")
    return comps


@dataclass(frozen=True)
class FluorescenceModel:
    """Full emitter model: two spin branches, background, dark rate, IRF."""

    spin0: tuple[DecayComponent, ...]
    spin1: tuple[DecayComponent, ...]
    background: tuple[DecayComponent, ...] = ()
    dark_rate: float = 0.0  # counts/ns, flat in time
    irf_sigma: float = 0.0  # ns, Gaussian IRF width
    pulse_time: float = 0.0  # ns, excitation instant within the period

    def __post_init__(self):
        object.__setattr__(self, "spin0", _components(self.spin0, "spin0"))
        object.__setattr__(self, "spin1", _components(self.spin1, "spin1"))
        object.__setattr__(self, "background", _components(self.background, "background"))
        if not self.spin0 or not self.spin1:
            raise ValueError("spin0 and spin1 must each contain at least one component")
        if not self.dark_rate >= 0:
            raise ValueError("dark_rate must be >= 0")
        if not self.irf_sigma >= 0:
            raise ValueError("irf_sigma must be >= 0")
        if not self.pulse_time >= 0:
            raise ValueError("pulse_time must be >= 0")

    def spin_components(self, spin: SpinSelector) -> tuple[DecayComponent, ...]:
        """Signal components for the selected spin state or mixture weight."""
        w = spin_weight(spin)
        if w == 0.0:
            return self.spin0
        if w == 1.0:
            return self.spin1
        return tuple(c.scaled(1.0 - w) for c in self.spin0) + tuple(
            c.scaled(w) for c in self.spin1
        )

    def scaled(self, factor: float) -> "FluorescenceModel":
        """Model with all emission amplitudes scaled; dark rate is detector
        property and stays fixed."""
        if not factor >= 0:
            raise ValueError("scale factor must be >= 0")
        return FluorescenceModel(
            spin0=tuple(c.scaled(factor) for c in self.spin0),
            spin1=tuple(c.scaled(factor) for c in self.spin1),
            background=tuple(c.scaled(factor) for c in self.background),
            dark_rate=self.dark_rate,
            irf_sigma=self.irf_sigma,
            pulse_time=self.pulse_time,
        )


def folded_model(model: FluorescenceModel, train: PulseTrain) -> FluorescenceModel:
    """Model corrected for decay tails wrapping into later pulse periods.

    The steady-state intensity under a pulse train is the single-pulse decay
    summed over all earlier pulses; for an exponential the geometric series
    folds into an amplitude factor 1/(1 - e^(-T/tau)) per component. Off by
    default everywhere else: apply explicitly when tail pile-up matters
    (period within a few lifetimes).
    """
    period = train.period

    def lift(comp: DecayComponent) -> DecayComponent:
        return comp.scaled(1.0 / -math.expm1(-period / comp.lifetime))

    return FluorescenceModel(
        spin0=tuple(lift(c) for c in model.spin0),
        spin1=tuple(lift(c) for c in model.spin1),
        background=tuple(lift(c) for c in model.background),
        dark_rate=model.dark_rate,
        irf_sigma=model.irf_sigma,
        pulse_time=model.pulse_time,
    )


def spin_weight(spin: SpinSelector) -> float:
    """Normalize a spin selector to a mixture weight in [0, 1]."""
    if isinstance(spin, str):
        if spin == "ms0":
            return 0.0
        if spin == "ms1":
            return 1.0
        raise ValueError(f"unknown spin selector {spin!r}, expected 'ms0', 'ms1' or a weight")
    w = float(spin)
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"spin mixture weight must be in [0, 1], got {w}")
    return w


@dataclass(frozen=True)
class GatedCounts:
    """Per-pulse counts inside a gate window, split by origin."""

    signal: float
    background: float
    dark: float

    @property
    def total(self) -> float:
        return self.signal + self.background + self.dark


def _emg_intensity(amplitude: float, lifetime: float, sigma: float, dt) -> np.ndarray:
    """Exponential decay convolved with a Gaussian IRF, evaluated at dt = t - t_p.

    I(dt) = (A/2) exp(sigma^2/(2 tau^2) - dt/tau) erfc(sigma/(sqrt2 tau) - dt/(sqrt2 sigma))

    For large dt/sigma the exp factor overflows while erfc underflows; using
    the identity exp(x) erfc(z) = erfcx(z) exp(x - z^2) with
    x - z^2 = -dt^2/(2 sigma^2) keeps every factor bounded when z >= 0.
    """
    dt = np.asarray(dt, dtype=float)
    z = sigma / (_SQRT2 * lifetime) - dt / (_SQRT2 * sigma)
    out = np.empty_like(z)
    pos = z >= 0
    if np.any(pos):
        out[pos] = erfcx(z[pos]) * np.exp(-0.5 * (dt[pos] / sigma) ** 2)
    if np.any(~pos):
        # z < 0 implies the plain exponent is already decaying; erfc(z) < 2.
        neg = ~pos
        out[neg] = np.exp(0.5 * (sigma / lifetime) ** 2 - dt[neg] / lifetime) * erfc(z[neg])
    return 0.5 * amplitude * out


def expected_intensity(model: FluorescenceModel, spin: SpinSelector, t) -> np.ndarray | float:
    """Expected detection intensity in counts/ns at time t (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    dt = t_arr - model.pulse_time
    total = np.full(dt.shape, model.dark_rate, dtype=float)
    comps = model.spin_components(spin) + model.background
    if model.irf_sigma == 0.0:
        after = dt >= 0
        for c in comps:
            vals = np.zeros(dt.shape)
            vals[after] = c.amplitude * np.exp(-dt[after] / c.lifetime)
            total += vals
    else:
        for c in comps:
            total += _emg_intensity(c.amplitude, c.lifetime, model.irf_sigma, dt)
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(total)
    return total


def gated_counts_exponential(comp: DecayComponent, gate: GateWindow) -> float:
    """Closed-form per-pulse counts of one pure exponential inside a gate.

    n = A tau (exp(-t0/tau) - exp(-t1/tau)); the unbounded-gate limit drops
    the second term.
    """
    upper = 0.0 if not gate.bounded else math.exp(-gate.t_end / comp.lifetime)
    return comp.amplitude * comp.lifetime * (math.exp(-gate.t_start / comp.lifetime) - upper)


def _component_gated(comp: DecayComponent, gate: GateWindow, sigma: float, pulse_time: float) -> float:
    if sigma == 0.0:
        # Shift into time-after-pulse; intensity is zero before the pulse.
        t0 = max(gate.t_start - pulse_time, 0.0)
        t1 = gate.t_end - pulse_time
        if t1 <= 0.0:
            return 0.0
        shifted = GateWindow(t0, t1)
        return gated_counts_exponential(comp, shifted)
    if not gate.bounded:
        raise GateError("quadrature requires finite window")
    if comp.amplitude == 0.0:
        return 0.0
    return adaptive_simpson(
        lambda t: float(_emg_intensity(comp.amplitude, comp.lifetime, sigma, t - pulse_time)),
        gate.t_start,
        gate.t_end,
    )


def gated_counts(model: FluorescenceModel, spin: SpinSelector, gate: GateWindow) -> GatedCounts:
    """Per-pulse counts in the gate, split into signal / background / dark."""
    signal = sum(
        _component_gated(c, gate, model.irf_sigma, model.pulse_time)
        for c in model.spin_components(spin)
    )
    bg = sum(
        _component_gated(c, gate, model.irf_sigma, model.pulse_time) for c in model.background
    )
    # 0 * inf from an unbounded gate must stay 0, not NaN
    dark = 0.0 if model.dark_rate == 0.0 else model.dark_rate * gate.length
    return GatedCounts(signal=float(signal), background=float(bg), dark=float(dark))


def steady_rate(
    model: FluorescenceModel, spin: SpinSelector, gate_onset: float, train: PulseTrain
) -> float:
    """Steady-state detected rate (counts/s) with the gate open from
    gate_onset to the end of each period."""
    if not gate_onset >= 0:
        raise GateError(f"gate onset must be >= 0, got {gate_onset}")
    if gate_onset >= train.period:
        raise GateError("gate exceeds pulse period")
    window = GateWindow(gate_onset, train.period)
    return train.rep_rate * gated_counts(model, spin, window).total


def histogram_expectation(
    model: FluorescenceModel,
    spin: SpinSelector,
    train: PulseTrain,
    bin_width: float,
    integration_time: float,
    channel: str = "mw_off",
) -> TcspcHistogram:
    """Expected (real-valued) TCSPC histogram over one period.

    Bin b holds integration_time * f_L * integral of the intensity over
    [b*dt, (b+1)*dt). The bin width must tile the period exactly.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    period = train.period
    n_float = period / bin_width
    n_bins = round(n_float)
    if n_bins < 1 or abs(n_bins * bin_width - period) > 1e-9 * period:
        raise ValueError(
            f"bin width {bin_width} ns does not tile the {period} ns period exactly"
        )
    edges = np.arange(n_bins + 1) * bin_width
    per_bin = np.full(n_bins, model.dark_rate * bin_width, dtype=float)
    comps = model.spin_components(spin) + model.background
    if model.irf_sigma == 0.0:
        shifted = np.clip(edges - model.pulse_time, 0.0, None)
        for c in comps:
            decay = np.exp(-shifted / c.lifetime)
            per_bin += c.amplitude * c.lifetime * (decay[:-1] - decay[1:])
    else:
        for c in comps:
            for b in range(n_bins):
                per_bin[b] += adaptive_simpson(
                    lambda t, c=c: float(
                        _emg_intensity(c.amplitude, c.lifetime, model.irf_sigma, t - model.pulse_time)
                    ),
                    edges[b],
                    edges[b + 1],
                )
    counts = per_bin * (integration_time * train.rep_rate)
    return TcspcHistogram(
        bin_width=bin_width,
        counts=counts,
        channel=channel,
        integration_time=integration_time,
        rep_rate=train.rep_rate,
    )
