"""Fourier multipliers |D_s|^alpha (sinograms) and |D|^alpha (images).

Both are applied by zero-padded FFTs with the regularised symbol
``|xi|^alpha * (1 - psi(|xi| / cutoff))`` where ``psi`` is a fixed smooth
bump equal to 1 on [0, 1/2] and 0 on [1, inf).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import zeta

from .grid import Image, trapezoid_weights
from .xray import Sinogram

__all__ = ["FilterSpec", "bump", "multiplier", "riesz_1d", "frac_laplacian_2d", "fourier_slice_check"]


def _smooth_step(x):
    # C-infinity transition: 0 for x <= 0, 1 for x >= 1
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def bump(r):
    """psi(r): 1 on [0, 1/2], 0 on [1, inf), C-infinity in between."""
    r = np.abs(np.asarray(r, float))
    return 1.0 - _smooth_step(2.0 * r - 1.0)


@dataclass(frozen=True)
class FilterSpec:
    alpha: float
    cutoff: Optional[float] = None  # None -> one DFT bin if alpha < 0 else 0
    padding: int = 2

    def __post_init__(self):
        if self.padding < 2:
            raise ValueError(f"padding factor must be >= 2, got {self.padding}")
        if self.cutoff is not None and self.cutoff < 0:
            raise ValueError(f"cutoff must be >= 0, got {self.cutoff}")

    def resolved_cutoff(self, bin_width: float) -> float:
        if self.cutoff is not None:
            return float(self.cutoff)
        return float(bin_width) if self.alpha < 0 else 0.0


def multiplier(freq, alpha: float, cutoff: float) -> np.ndarray:
    """|freq|^alpha (1 - psi(|freq| / cutoff)); zero at freq = 0 when singular."""
    r = np.abs(np.asarray(freq, float))
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(r > 0, r ** alpha, 1.0 if alpha == 0 else 0.0)
    if cutoff > 0:
        m = m * (1.0 - bump(r / cutoff))
    return m


_KERNEL_OVERSAMPLE = 8


def _aperiodic_symbol(m_len: int, ds: float, alpha: float, cutoff_bins: Optional[float]):
    """DFT (length ``m_len``) of the band-limited kernel of |sigma|^alpha, truncated
    to lags |j| < m_len / 2.

    Sampling |sigma|^alpha directly on the padded DFT grid periodises the
    kernel, whose slowly decaying tails then wrap around and bias the low
    frequencies.  The kernel is instead taken from a grid ``_KERNEL_OVERSAMPLE``
    times longer and cut to the lags an ``m_len``-point linear convolution can use.
    """
    big = _KERNEL_OVERSAMPLE * m_len
    sigma = 2 * np.pi * np.fft.fftfreq(big, d=ds)
    bin_big = 2 * np.pi / (big * ds)
    cutoff = cutoff_bins * (2 * np.pi / (m_len * ds)) if cutoff_bins is not None else None
    spec = FilterSpec(alpha, cutoff)
    rc = spec.resolved_cutoff(bin_big)
    kern = np.fft.ifft(multiplier(sigma, alpha, rc)).real / ds
    if rc == 0 and alpha > -1 and alpha != 0:
        # the periodic sum over the |sigma|^alpha kink at 0 overshoots the
        # integral by a constant (generalised Euler-Maclaurin); remove it
        kern -= zeta(-alpha) * bin_big ** (1 + alpha) / np.pi
    kern *= ds
    half = m_len // 2
    short = np.zeros(m_len)
    short[:half] = kern[:half]
    short[-(half - 1):] = kern[-(half - 1):]
    return np.fft.fft(short)


def riesz_1d(sino: Sinogram, spec: FilterSpec) -> Sinogram:
    """Apply |D_s|^alpha along the offset axis, angle by angle."""
    g = sino.geometry
    m_len = spec.padding * g.ns
    bin_w = 2 * np.pi / (m_len * g.ds)
    if spec.alpha == 0 and spec.resolved_cutoff(bin_w) == 0:
        return Sinogram(g, sino.values)
    cutoff_bins = spec.resolved_cutoff(bin_w) / bin_w
    mult = _aperiodic_symbol(m_len, g.ds, spec.alpha, cutoff_bins)
    vals = sino.values
    spec_vals = np.fft.fft(vals, n=m_len, axis=0) * mult[:, None]
    out = np.fft.ifft(spec_vals, axis=0)[: g.ns]
    if not np.iscomplexobj(vals):
        out = out.real
    return Sinogram(g, out)


def frac_laplacian_2d(img: Image, spec: FilterSpec) -> Image:
    """|D|^alpha = (-Laplacian)^(alpha/2) by a zero-padded 2D FFT."""
    g = img.grid
    vals = img.values
    vmax = np.max(np.abs(vals))
    edge = max(np.abs(vals[0]).max(), np.abs(vals[-1]).max(),
               np.abs(vals[:, 0]).max(), np.abs(vals[:, -1]).max())
    if vmax > 0 and edge > 1e-8 * vmax:
        warnings.warn(
            f"image does not decay at the grid boundary (edge/max = {edge / vmax:.2e}); "
            "expect wrap-around and truncation artefacts",
            RuntimeWarning,
            stacklevel=2,
        )
    m_len = spec.padding * g.n
    k = 2 * np.pi * np.fft.fftfreq(m_len, d=g.h)
    r = np.hypot(k[:, None], k[None, :])
    mult = multiplier(r, spec.alpha, spec.resolved_cutoff(2 * np.pi / (m_len * g.h)))
    out = np.fft.ifft2(np.fft.fft2(vals, s=(m_len, m_len)) * mult)[: g.n, : g.n]
    if not np.iscomplexobj(vals):
        out = out.real
    return Image(g, out)


def fourier_slice_check(img: Image, sino: Sinogram, sigma: float, omega_index: int):
    """Return (1D transform of the s-profile at sigma, 2D transform of f at sigma w_perp)."""
    g = sino.geometry
    ws = trapezoid_weights(g.ns, g.ds)
    lhs = np.sum(ws * np.exp(-1j * sigma * g.s) * sino.values[:, omega_index])
    th = g.theta[omega_index]
    xi1, xi2 = -sigma * np.sin(th), sigma * np.cos(th)
    grid = img.grid
    w = trapezoid_weights(grid.n, grid.h)
    x = grid.x
    # separable direct sum: exp(-i (xi1 x1 + xi2 x2))
    ex1 = w * np.exp(-1j * xi1 * x)
    ex2 = w * np.exp(-1j * xi2 * x)
    rhs = ex1 @ img.values @ ex2
    return complex(lhs), complex(rhs)
