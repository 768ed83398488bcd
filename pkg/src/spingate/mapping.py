"""Per-pixel SNR maps of confocal scans, with bicubic upsampling.

A scan stores four count planes: {mw_off, mw_on} x {gated, ungated}. The SNR
plane is (N_off - N_on)/sqrt(N_off + N_on) on raw per-pixel counts; pixels
with zero total counts get SNR 0 and are marked in a flag plane so they stay
distinguishable from genuinely zero-difference pixels.

Upsampling uses the Catmull-Rom bicubic kernel, separable and edge-clamped.
Output sample j maps to input coordinate j/factor, so every original node
lands exactly on an output sample. The four kernel weights are normalized by
their sum (analytically 1) so constant inputs are reproduced bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHANNEL_KINDS = ("gated", "ungated")


def _plane(arr) -> np.ndarray:
    out = np.asarray(arr, dtype=float).copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ScanMap:
    """Raster scan: four (ny, nx) count planes plus geometry."""

    pitch: float  # um between pixel centers
    dwell: float  # s per pixel
    mw_off_gated: np.ndarray
    mw_on_gated: np.ndarray
    mw_off_ungated: np.ndarray
    mw_on_ungated: np.ndarray

    def __post_init__(self):
        if not self.pitch > 0:
            raise ValueError("pitch must be > 0")
        if not self.dwell > 0:
            raise ValueError("dwell must be > 0")
        planes = {}
        shape = None
        for name in ("mw_off_gated", "mw_on_gated", "mw_off_ungated", "mw_on_ungated"):
            p = _plane(getattr(self, name))
            if p.ndim != 2 or p.size == 0:
                raise ValueError(f"{name} must be a non-empty 2-D array")
            if np.any(p < 0):
                raise ValueError(f"{name} must be non-negative")
            if shape is None:
                shape = p.shape
            elif p.shape != shape:
                raise ValueError(f"count planes disagree in shape: {p.shape} vs {shape}")
            planes[name] = p
        for name, p in planes.items():
            object.__setattr__(self, name, p)

    @property
    def ny(self) -> int:
        return int(self.mw_off_gated.shape[0])

    @property
    def nx(self) -> int:
        return int(self.mw_off_gated.shape[1])

    def channel_planes(self, kind: str) -> tuple[np.ndarray, np.ndarray]:
        """(mw_off, mw_on) planes for 'gated' or 'ungated'."""
        if kind == "gated":
            return self.mw_off_gated, self.mw_on_gated
        if kind == "ungated":
            return self.mw_off_ungated, self.mw_on_ungated
        raise ValueError(f"unknown channel kind {kind!r}, expected one of {CHANNEL_KINDS}")


@dataclass(frozen=True)
class SnrMap:
    """Upsampled SNR plane plus the pixel-resolution zero-count flags."""

    values: np.ndarray  # (ny * factor, nx * factor)
    factor: int
    zero_flags: np.ndarray  # (ny, nx) bool: True where total counts were zero
    method: str = "catmull-rom"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        flags = np.asarray(self.zero_flags, dtype=bool).copy()
        if values.ndim != 2 or flags.ndim != 2:
            raise ValueError("values and zero_flags must be 2-D")
        if not np.all(np.isfinite(values)):
            raise ValueError("SNR values must be finite")
        if self.factor < 1:
            raise ValueError("factor must be >= 1")
        if values.shape != (flags.shape[0] * self.factor, flags.shape[1] * self.factor):
            raise ValueError("values shape must be pixel shape times factor")
        values.setflags(write=False)
        flags.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "zero_flags", flags)


def _catmull_rom_weights(s: np.ndarray) -> np.ndarray:
    """Weights for samples at offsets -1, 0, 1, 2 around fractional position s."""
    s2 = s * s
    s3 = s2 * s
    w = np.stack(
        [
            -0.5 * s3 + s2 - 0.5 * s,
            1.5 * s3 - 2.5 * s2 + 1.0,
            -1.5 * s3 + 2.0 * s2 + 0.5 * s,
            0.5 * s3 - 0.5 * s2,
        ],
        axis=-1,
    )
    # Analytic row sum is 1; normalizing removes float residue so constants
    # pass through bit-exactly.
    return w / w.sum(axis=-1, keepdims=True)


def _upsample_axis(arr: np.ndarray, factor: int) -> np.ndarray:
    """Catmull-Rom upsample along the last axis, edge-clamped.

    Evaluated in delta form, center + sum w_k (v_k - center): identical
    analytically (the weights sum to 1) but exact for constant data and at
    grid nodes, where every difference vanishes.
    """
    n = arr.shape[-1]
    out_n = n * factor
    pos = np.arange(out_n) / factor
    base = np.floor(pos).astype(int)
    frac = pos - base
    weights = _catmull_rom_weights(frac)  # (out_n, 4)
    idx = np.clip(base[:, None] + np.arange(-1, 3)[None, :], 0, n - 1)  # (out_n, 4)
    gathered = arr[..., idx]  # (..., out_n, 4)
    center = gathered[..., 1]
    return center + np.einsum("...ok,ok->...o", gathered - center[..., None], weights)


def catmull_rom_upsample(arr: np.ndarray, factor: int) -> np.ndarray:
    """Separable bicubic upsample of a 2-D array by an integer factor."""
    if int(factor) != factor or factor < 1:
        raise ValueError(f"interpolation factor must be a positive integer, got {factor}")
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D array")
    if factor == 1:
        return arr.copy()
    step = _upsample_axis(arr, int(factor))
    return _upsample_axis(np.swapaxes(step, 0, 1), int(factor)).swapaxes(0, 1)


def snr_map(scan: ScanMap, channel: str, interp_factor: int = 4) -> SnrMap:
    """Per-pixel SNR plane of one channel kind, bicubically upsampled."""
    off, on = scan.channel_planes(channel)
    total = off + on
    zero = total == 0
    snr_px = np.zeros_like(total)
    nonzero = ~zero
    snr_px[nonzero] = (off[nonzero] - on[nonzero]) / np.sqrt(total[nonzero])
    return SnrMap(
        values=catmull_rom_upsample(snr_px, interp_factor),
        factor=int(interp_factor),
        zero_flags=zero,
    )
