"""Canonical synthetic emitter models.

Two scenarios recur in tests and examples:

* "bulk": NV centers in bulk diamond over a short-lived SiV background
  (lifetimes 12 / 8 ns vs 1.7 ns), moderate background, 20 MHz excitation.
* "fnd": NV centers in ~200 nm fluorescent nanodiamonds on a nitrocellulose
  substrate whose broadband background decays with ~4 ns; FND lifetimes are
  longer than bulk (here 25 / 14 ns, m_S=+-1 shortened by the same ~0.56
  ratio seen in nanodiamond ensembles) and the background dominates, with
  10 MHz excitation.

Background strength is specified indirectly: either as a background:signal
ratio (peak-amplitude or integrated-count flavor) or by the ungated ODMR
contrast it dilutes the signal down to.
"""

from __future__ import annotations

from .decay import DecayComponent, FluorescenceModel, GateWindow, PulseTrain, gated_counts_exponential

BULK_REP_RATE = 20e6  # Hz
FND_REP_RATE = 10e6  # Hz
BULK_C_SAT = 0.15
FND_C_SAT = 0.4


def background_amplitude(
    ratio: float,
    bg_lifetime: float,
    spin0: tuple[DecayComponent, ...],
    period: float,
    mode: str = "amplitude",
) -> float:
    """Background amplitude realizing a background:signal ratio.

    mode="amplitude": ratio of peak amplitudes, A_bg = ratio * sum(A_spin0).
    mode="integrated": ratio of per-period counts, solved so that the
    background integral over [0, period) equals ratio times the spin-0 one.
    """
    if not ratio >= 0:
        raise ValueError(f"background ratio must be >= 0, got {ratio}")
    if mode == "amplitude":
        return ratio * sum(c.amplitude for c in spin0)
    if mode == "integrated":
        window = GateWindow(0.0, period)
        signal = sum(gated_counts_exponential(c, window) for c in spin0)
        unit_bg = gated_counts_exponential(DecayComponent(1.0, bg_lifetime), window)
        return ratio * signal / unit_bg
    raise ValueError(f"unknown ratio mode {mode!r}, expected 'amplitude' or 'integrated'")


def bulk_model(
    noise_ratio: float = 3.0,
    ratio_mode: str = "integrated",
    rep_rate: float = BULK_REP_RATE,
) -> FluorescenceModel:
    """Bulk-diamond NV over SiV background (3:1 integrated by default)."""
    spin0 = (DecayComponent(1.0, 12.0, "NV ms0"),)
    spin1 = (DecayComponent(1.0, 8.0, "NV ms1"),)
    a_bg = background_amplitude(noise_ratio, 1.7, spin0, PulseTrain(rep_rate).period, ratio_mode)
    return FluorescenceModel(
        spin0=spin0,
        spin1=spin1,
        background=(DecayComponent(a_bg, 1.7, "SiV"),),
    )


def fnd_background_amplitude(
    target_ungated_contrast: float,
    c_sat: float,
    spin0: tuple[DecayComponent, ...],
    spin1: tuple[DecayComponent, ...],
    bg_lifetime: float,
    period: float,
) -> float:
    """Background amplitude that dilutes the ungated contrast to a target.

    Ungated contrast with mixing weight c_sat is
        C_u = c_sat * (n0 - n1) / (n0 + n_bg)
    over a full period; solve for the background amplitude.
    """
    if not 0 < target_ungated_contrast < 1:
        raise ValueError("target ungated contrast must be in (0, 1)")
    window = GateWindow(0.0, period)
    n0 = sum(gated_counts_exponential(c, window) for c in spin0)
    n1 = sum(gated_counts_exponential(c, window) for c in spin1)
    unit_bg = gated_counts_exponential(DecayComponent(1.0, bg_lifetime), window)
    needed = c_sat * (n0 - n1) / target_ungated_contrast - n0
    if needed < 0:
        raise ValueError(
            "target contrast exceeds the background-free contrast; no background can realize it"
        )
    return needed / unit_bg


def fnd_model(
    ungated_contrast: float = 0.012,
    c_sat: float = FND_C_SAT,
    rep_rate: float = FND_REP_RATE,
) -> FluorescenceModel:
    """Nanodiamond NV over strong nitrocellulose background.

    The background amplitude is solved so the full-period contrast equals
    ungated_contrast (default 1.2%) at the given saturation weight, which
    puts the integrated background near 13:1.
    """
    spin0 = (DecayComponent(1.0, 25.0, "FND ms0"),)
    spin1 = (DecayComponent(1.0, 14.0, "FND ms1"),)
    a_bg = fnd_background_amplitude(
        ungated_contrast, c_sat, spin0, spin1, 4.0, PulseTrain(rep_rate).period
    )
    return FluorescenceModel(
        spin0=spin0,
        spin1=spin1,
        background=(DecayComponent(a_bg, 4.0, "NC substrate"),),
    )
