"""Windowed directional Fourier decay as a discrete wavefront-set probe.

At frequency radius ``sigma`` the image is multiplied by a Gaussian window
of width ``WINDOW_WIDTH * sigma**-0.5`` (peak value 1) centred at ``x0``,
and the Fourier sum is evaluated on an arc of half-angle ``CONE_HALF_ANGLE``
about ``xi0``.  The magnitude at that scale is the largest value on the arc.

With this parabolic window a jump across a smooth curve gives magnitudes
~ sigma**-1.5 in the normal direction (1/sigma from the jump times the
window length along the curve).  The Sobolev order is read off as
``alpha* = -decay - d/2`` with d = 2, which maps that -1.5 to 1/2.  The
window normalisation is part of the estimator; changing it shifts alpha*.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import Grid2, Image
from .phantom import Phantom, WavefrontSample, conormal_samples
from .xray import LineSet, is_visible

__all__ = [
    "WavefrontEstimate",
    "VisibilityRow",
    "directional_decay",
    "sobolev_strength",
    "visibility_report",
    "default_scales",
    "gradient_edges",
    "CONE_HALF_ANGLE",
    "WINDOW_WIDTH",
]

CONE_HALF_ANGLE = np.deg2rad(15.0)
WINDOW_WIDTH = 1.0
N_CONE = 31
# slopes steeper than this are read as faster than any tested polynomial
SMOOTH_DECAY = -4.0
# magnitudes below this fraction of the windowed mass are numerical noise
NOISE_FLOOR = 1e-11
# a sampled jump leaves ~1e-4..1e-3 of the windowed mass in every direction
# (pixelation); a true jump stays above ~4e-2 up to sigma = 256
DISCRETIZATION_FLOOR = 3e-3


@dataclass(frozen=True)
class WavefrontEstimate:
    sample: WavefrontSample
    decay_exponent: float
    magnitude: float
    scales: tuple[float, ...] = ()
    magnitudes: tuple[float, ...] = ()
    floor: float = 0.0

    @property
    def singular(self) -> bool:
        return bool(np.isfinite(self.decay_exponent) and self.decay_exponent > SMOOTH_DECAY
                    and self.magnitude > self.floor)

    @property
    def alpha_star(self) -> float:
        if not self.singular:
            return float("inf")
        return -self.decay_exponent - 1.0


def default_scales(grid: Grid2, count: int = 4) -> list[float]:
    """``count`` dyadic radii ending at the largest power of two below Nyquist / 4."""
    top = 2.0 ** np.floor(np.log2(grid.nyquist() / 4))
    return [top / 2 ** k for k in range(count - 1, -1, -1)]


def _check_scales(grid: Grid2, scales: Sequence[float]) -> np.ndarray:
    sc = np.asarray(sorted(float(s) for s in scales))
    if sc.size < 3:
        raise ValueError(f"need at least 3 scales, got {sc.size}")
    if np.any(sc <= 0):
        raise ValueError("scales must be positive")
    ratios = sc[1:] / sc[:-1]
    if not np.allclose(ratios, 2.0, rtol=1e-9):
        raise ValueError(f"scales must be dyadic (ratio 2), got {sc.tolist()}")
    if sc[-1] >= grid.nyquist():
        raise ValueError(f"scale {sc[-1]:g} is not below the grid Nyquist frequency {grid.nyquist():.6g}")
    return sc


def _window_box(grid: Grid2, x0, width: float):
    # index range covering +-6 window widths
    r = 6.0 * width
    lo = np.searchsorted(grid.x, np.asarray(x0) - r)
    hi = np.searchsorted(grid.x, np.asarray(x0) + r, side="right")
    return slice(int(lo[0]), int(hi[0])), slice(int(lo[1]), int(hi[1]))


def _cone_magnitude(img: Image, x0, xi0, sigma: float) -> tuple[float, float]:
    grid = img.grid
    width = WINDOW_WIDTH / np.sqrt(sigma)
    si, sj = _window_box(grid, x0, width)
    x1, x2 = grid.x[si], grid.x[sj]
    win = np.exp(-((x1[:, None] - x0[0]) ** 2 + (x2[None, :] - x0[1]) ** 2) / (2 * width ** 2))
    sub = img.values[si, sj] * win
    # coordinates relative to x0 keep the phases small and the result shift-invariant
    d1, d2 = x1 - x0[0], x2 - x0[1]
    base = np.arctan2(xi0[1], xi0[0])
    phis = base + np.linspace(-CONE_HALF_ANGLE, CONE_HALF_ANGLE, N_CONE)
    e1 = np.exp(-1j * sigma * np.cos(phis)[:, None] * d1[None, :])
    e2 = np.exp(-1j * sigma * np.sin(phis)[:, None] * d2[None, :])
    vals = np.einsum("ki,ij,kj->k", e1, sub, e2) * grid.h ** 2
    ref = np.sum(np.abs(sub)) * grid.h ** 2
    return float(np.max(np.abs(vals))), float(ref)


def directional_decay(img: Image, x0, xi0, scales: Optional[Sequence[float]] = None,
                      sample: Optional[WavefrontSample] = None) -> WavefrontEstimate:
    grid = img.grid
    x0 = np.asarray(x0, float)
    xi0 = np.asarray(xi0, float)
    if np.any(np.abs(x0) > grid.extent):
        raise ValueError(f"x0 = {x0.tolist()} is outside the grid square")
    if abs(np.linalg.norm(xi0) - 1.0) > 1e-9:
        raise ValueError("xi0 must be a unit codirection")
    sc = _check_scales(grid, scales if scales is not None else default_scales(grid))
    mags, refs = zip(*(_cone_magnitude(img, x0, xi0, s) for s in sc))
    mags = np.array(mags)
    floor = NOISE_FLOOR * max(refs)
    jump_floor = DISCRETIZATION_FLOOR * refs[-1]
    if sample is None:
        sample = WavefrontSample(tuple(x0), tuple(xi0))
    if floor == 0 or mags[-1] <= floor:
        slope = -np.inf
    else:
        slope = float(np.polyfit(np.log(sc), np.log(np.maximum(mags, floor)), 1)[0])
    return WavefrontEstimate(sample, slope, float(mags[-1]), tuple(sc), tuple(mags), jump_floor)


def sobolev_strength(img: Image, sample: WavefrontSample,
                     scales: Optional[Sequence[float]] = None) -> float:
    """Critical Sobolev order alpha* = -decay - 1 (inf when numerically smooth)."""
    return directional_decay(img, sample.x0, sample.xi0, scales, sample).alpha_star


@dataclass(frozen=True)
class VisibilityRow:
    sample: WavefrontSample
    predicted: bool
    estimate: WavefrontEstimate

    @property
    def magnitude(self) -> float:
        return self.estimate.magnitude

    def as_record(self) -> dict:
        s = self.sample
        return {
            "x0_1": s.x0[0], "x0_2": s.x0[1], "xi0_1": s.xi0[0], "xi0_2": s.xi0[1],
            "predicted": int(self.predicted),
            "decay_exponent": self.estimate.decay_exponent,
            "magnitude": self.estimate.magnitude,
            "alpha_star": self.estimate.alpha_star,
        }


def visibility_report(phantom: Phantom, ls: LineSet, recon_img: Image, samples: int = 64,
                      scales: Optional[Sequence[float]] = None) -> list[VisibilityRow]:
    """Predicted visibility and measured edge strength for each conormal sample."""
    rows = []
    for smp in conormal_samples(phantom, samples):
        est = directional_decay(recon_img, smp.x0, smp.xi0, scales, smp)
        rows.append(VisibilityRow(smp, is_visible(ls, smp.x0, smp.xi0), est))
    return rows


def gradient_edges(img: Image, threshold: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Edge pixels by non-maximum suppression of the gradient magnitude.

    A node is an edge when its central-difference gradient magnitude is a
    local maximum along the (quantised) gradient direction and exceeds
    ``threshold`` times the largest magnitude.  Returns (edge mask, magnitude).
    """
    v = np.real(img.values)
    gx, gy = np.gradient(v, img.grid.h)
    mag = np.hypot(gx, gy)
    ang = np.mod(np.arctan2(gy, gx), np.pi)
    sector = np.rint(ang / (np.pi / 4)).astype(int) % 4
    offs = [(1, 0), (1, 1), (0, 1), (-1, 1)]
    pad = np.pad(mag, 1)
    n1, n2 = mag.shape
    keep = np.zeros(mag.shape, bool)
    for k, (di, dj) in enumerate(offs):
        fwd = pad[1 + di:1 + di + n1, 1 + dj:1 + dj + n2]
        bwd = pad[1 - di:1 - di + n1, 1 - dj:1 - dj + n2]
        keep |= (sector == k) & (mag >= fwd) & (mag >= bwd)
    keep[[0, -1], :] = False
    keep[:, [0, -1]] = False
    return keep & (mag > threshold * mag.max()), mag
