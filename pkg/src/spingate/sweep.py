"""Grid sweeps over gate onset and laser repetition rate.

Optimization is exhaustive over explicit grids: the objectives are smooth
1-D/2-D curves and exact reproducibility matters more than speed. Ties are
broken toward the smallest gate onset (and smallest repetition rate for the
joint optimum) by taking the first maximum on an ascending grid.

Channel counts follow the MW toggling scheme: each channel integrates for
``integration_time * duty``, the MW-off channel sees the pure spin-0 decay
and the MW-on channel the population mixture with weight ``c_sat``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decay import FluorescenceModel, PulseTrain, steady_rate
from .metrics import (
    CountPair,
    PhysicalConstants,
    RatePair,
    contrast,
    sensitivity_cw,
    snr,
)

POWER_MODES = ("constant-pulse-energy", "constant-mean-power")


@dataclass(frozen=True)
class SweepConfig:
    """Knobs shared by the gate and repetition-rate sweeps."""

    integration_time: float = 1.0  # s, total over both channels
    mw_duty: float = 0.5  # fraction of time on each channel
    tau_c_resolution: float = 0.1  # ns
    tau_c_max: float | None = None  # ns; None -> 0.8 * period
    rate_grid: tuple[float, ...] | None = None  # Hz
    linewidth: float | None = None  # Hz; enables sensitivity columns
    c_sat: float = 0.15  # MW-on mixture weight
    power_mode: str = "constant-pulse-energy"
    reference_rate: float = 40e6  # Hz; amplitude anchor for constant-mean-power
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if not self.integration_time > 0:
            raise ValueError("integration_time must be > 0")
        if not 0 < self.mw_duty < 1:
            raise ValueError("mw_duty must be in (0, 1)")
        if not self.tau_c_resolution > 0:
            raise ValueError("tau_c_resolution must be > 0")
        if self.tau_c_max is not None and not self.tau_c_max >= 0:
            raise ValueError("tau_c_max must be >= 0")
        if not 0 <= self.c_sat < 1:
            raise ValueError("c_sat must be in [0, 1)")
        if self.power_mode not in POWER_MODES:
            raise ValueError(f"unknown power mode {self.power_mode!r}, expected one of {POWER_MODES}")
        if self.linewidth is not None and not self.linewidth > 0:
            raise ValueError("linewidth must be > 0 when given")
        if not self.reference_rate > 0:
            raise ValueError("reference_rate must be > 0")
        if self.rate_grid is not None:
            grid = tuple(float(r) for r in self.rate_grid)
            if any(r <= 0 for r in grid):
                raise ValueError("rate_grid entries must be > 0")
            object.__setattr__(self, "rate_grid", grid)


def _as_readonly(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GateSweepReport:
    """Figure-of-merit columns over a gate-onset grid."""

    tau_c_grid: np.ndarray  # ns
    contrast: np.ndarray
    shot_noise: np.ndarray  # sqrt(N0 + N1)
    snr: np.ndarray
    ef: np.ndarray  # vs the tau_c = 0 baseline
    eta: np.ndarray | None  # T/sqrt(Hz); None without a linewidth
    optimum: int  # index of max SNR (first on ties)

    def __post_init__(self):
        for name in ("tau_c_grid", "contrast", "shot_noise", "snr", "ef"):
            object.__setattr__(self, name, _as_readonly(getattr(self, name)))
        if self.eta is not None:
            object.__setattr__(self, "eta", _as_readonly(self.eta))
        n = self.tau_c_grid.size
        lengths = [self.contrast.size, self.shot_noise.size, self.snr.size, self.ef.size]
        if self.eta is not None:
            lengths.append(self.eta.size)
        if n == 0 or any(m != n for m in lengths):
            raise ValueError("report columns must be non-empty and of equal length")
        if not 0 <= self.optimum < n:
            raise ValueError("optimum index out of range")
        if self.snr[self.optimum] != np.max(self.snr):
            raise ValueError("optimum index does not attain the maximum SNR")


@dataclass(frozen=True)
class RepRateSweepReport:
    """Per-repetition-rate summary, each rate swept over its own gate grid."""

    rate_grid: np.ndarray  # Hz
    mode: str
    snr_ungated: np.ndarray
    snr_gated: np.ndarray  # at that rate's optimal gate
    eta_ungated: np.ndarray | None
    eta_gated: np.ndarray | None
    tau_c_opt: np.ndarray  # ns, per rate

    def __post_init__(self):
        for name in ("rate_grid", "snr_ungated", "snr_gated", "tau_c_opt"):
            object.__setattr__(self, name, _as_readonly(getattr(self, name)))
        for name in ("eta_ungated", "eta_gated"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, _as_readonly(getattr(self, name)))
        if self.mode not in POWER_MODES:
            raise ValueError(f"unknown power mode {self.mode!r}")
        n = self.rate_grid.size
        cols = [self.snr_ungated, self.snr_gated, self.tau_c_opt]
        cols += [c for c in (self.eta_ungated, self.eta_gated) if c is not None]
        if n == 0 or any(c.size != n for c in cols):
            raise ValueError("report columns must be non-empty and of equal length")
        periods = 1e9 / self.rate_grid
        if np.any(self.tau_c_opt >= periods):
            raise ValueError("per-rate optimal tau_c must stay below the period")


def _gate_grid(train: PulseTrain, cfg: SweepConfig) -> np.ndarray:
    upper = 0.8 * train.period if cfg.tau_c_max is None else cfg.tau_c_max
    if upper >= train.period:
        raise ValueError(
            f"tau_c_max {upper} ns must stay below the {train.period} ns period"
        )
    grid = np.arange(0.0, upper + 0.5 * cfg.tau_c_resolution, cfg.tau_c_resolution)
    if grid.size == 0:
        raise ValueError("empty gate grid")
    return grid


def _channel_rates(
    model: FluorescenceModel, train: PulseTrain, tau_c: float, c_sat: float
) -> tuple[float, float]:
    r0 = steady_rate(model, "ms0", tau_c, train)
    r1 = steady_rate(model, c_sat, tau_c, train)
    return r0, r1


def sweep_gate(model: FluorescenceModel, train: PulseTrain, cfg: SweepConfig) -> GateSweepReport:
    """Sweep the gate onset and tabulate contrast, shot noise, SNR, EF, eta."""
    grid = _gate_grid(train, cfg)
    per_channel_time = cfg.integration_time * cfg.mw_duty

    contrasts = np.empty(grid.size)
    shot = np.empty(grid.size)
    snrs = np.empty(grid.size)
    etas = np.empty(grid.size) if cfg.linewidth is not None else None
    for i, tau_c in enumerate(grid):
        r0, r1 = _channel_rates(model, train, float(tau_c), cfg.c_sat)
        pair = CountPair(r0 * per_channel_time, r1 * per_channel_time)
        contrasts[i] = contrast(pair)
        shot[i] = np.sqrt(pair.n0 + pair.n1)
        snrs[i] = snr(pair)
        if etas is not None:
            etas[i] = sensitivity_cw(cfg.linewidth, RatePair(r0, r1), cfg.constants)

    # EF baseline is always the ungated (tau_c = 0) SNR, whether or not the
    # grid includes 0, so ef[0] == 1 exactly for default grids.
    if grid[0] == 0.0:
        snr0 = snrs[0]
    else:
        r0, r1 = _channel_rates(model, train, 0.0, cfg.c_sat)
        snr0 = snr(CountPair(r0 * per_channel_time, r1 * per_channel_time))
    # enhancement over a zero-SNR baseline is undefined, not infinite
    ef = snrs / snr0 if snr0 != 0.0 else np.full(grid.size, np.nan)

    optimum = int(np.argmax(snrs))
    return GateSweepReport(
        tau_c_grid=grid,
        contrast=contrasts,
        shot_noise=shot,
        snr=snrs,
        ef=ef,
        eta=etas,
        optimum=optimum,
    )


def optimal_gate(report: GateSweepReport) -> float:
    """Gate onset (ns) maximizing SNR; ties resolve to the smallest onset."""
    return float(report.tau_c_grid[report.optimum])


def _rate_scale(rate: float, cfg: SweepConfig) -> float:
    """Amplitude scale for one repetition rate under the power convention.

    constant-pulse-energy keeps per-pulse amplitudes fixed;
    constant-mean-power scales amplitude as 1/f_L, normalized to unity at the
    reference rate.
    """
    if cfg.power_mode == "constant-pulse-energy":
        return 1.0
    return cfg.reference_rate / rate


def sweep_rep_rate(model: FluorescenceModel, cfg: SweepConfig) -> RepRateSweepReport:
    """Sweep the repetition rate, re-optimizing the gate at every rate."""
    if not cfg.rate_grid:
        raise ValueError("rate_grid must be a non-empty sequence of rates")
    rates = np.asarray(cfg.rate_grid, dtype=float)

    snr_u = np.empty(rates.size)
    snr_g = np.empty(rates.size)
    eta_u = np.empty(rates.size) if cfg.linewidth is not None else None
    eta_g = np.empty(rates.size) if cfg.linewidth is not None else None
    tau_opt = np.empty(rates.size)

    per_channel_time = cfg.integration_time * cfg.mw_duty
    for i, rate in enumerate(rates):
        scaled = model.scaled(_rate_scale(float(rate), cfg))
        train = PulseTrain(float(rate))
        report = sweep_gate(scaled, train, cfg)
        best = report.optimum
        tau_opt[i] = report.tau_c_grid[best]
        snr_g[i] = report.snr[best]
        if report.tau_c_grid[0] == 0.0:
            snr_u[i] = report.snr[0]
        else:
            r0, r1 = _channel_rates(scaled, train, 0.0, cfg.c_sat)
            snr_u[i] = snr(CountPair(r0 * per_channel_time, r1 * per_channel_time))
        if eta_u is not None:
            r0, r1 = _channel_rates(scaled, train, 0.0, cfg.c_sat)
            eta_u[i] = sensitivity_cw(cfg.linewidth, RatePair(r0, r1), cfg.constants)
            eta_g[i] = report.eta[best]

    return RepRateSweepReport(
        rate_grid=rates,
        mode=cfg.power_mode,
        snr_ungated=snr_u,
        snr_gated=snr_g,
        eta_ungated=eta_u,
        eta_gated=eta_g,
        tau_c_opt=tau_opt,
    )


def joint_optimum(model: FluorescenceModel, cfg: SweepConfig) -> tuple[float, float]:
    """Best (tau_c, rep_rate) over the product grid.

    Rates are visited in ascending order and a candidate replaces the
    incumbent only on strictly larger SNR, so ties resolve to the smallest
    rate; within one rate optimal_gate already prefers the smallest onset.
    """
    if not cfg.rate_grid:
        raise ValueError("rate_grid must be a non-empty sequence of rates")
    best_snr = -np.inf
    best = (0.0, 0.0)
    for rate in sorted(cfg.rate_grid):
        scaled = model.scaled(_rate_scale(float(rate), cfg))
        train = PulseTrain(float(rate))
        report = sweep_gate(scaled, train, cfg)
        candidate = report.snr[report.optimum]
        if candidate > best_snr:
            best_snr = float(candidate)
            best = (optimal_gate(report), float(rate))
    return best
