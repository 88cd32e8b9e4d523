"""scikit-learn style wrappers around the forward model, the inversions and
the wavefront probe, plus the input checks they share."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .grid import Grid2, Image
from .microlocal import WavefrontEstimate, directional_decay
from .phantom import WavefrontSample
from .recon import METHODS, reconstruct
from .spectral import FilterSpec
from .xray import LineSet, Sinogram, SinogramGeometry, mask, radon

__all__ = [
    "RadonTransform",
    "Reconstructor",
    "WavefrontEstimator",
    "check_image",
    "check_sinogram",
    "check_line_set",
]


def check_image(img, name: str = "image") -> Image:
    """Accept an Image, or a square 2D array on [-1, 1]^2."""
    if isinstance(img, Image):
        return img
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be an Image or a square 2D array, got shape {arr.shape}")
    return Image(Grid2(arr.shape[0], 1.0), arr)


def check_sinogram(sino, name: str = "sinogram") -> Sinogram:
    if not isinstance(sino, Sinogram):
        raise TypeError(f"{name} must be a Sinogram, got {type(sino).__name__}")
    return sino


def check_line_set(lines) -> LineSet:
    if lines is None:
        return LineSet.full()
    if isinstance(lines, LineSet):
        return lines
    if isinstance(lines, str):
        return LineSet.parse(lines)
    raise TypeError(f"cannot interpret {lines!r} as a line set")


class RadonTransform(TransformerMixin, BaseEstimator):
    """Image -> sinogram, optionally restricted to a line set."""

    def __init__(self, ns: int = 256, nw: int = 256, s_max: float = 1.5, lines=None):
        self.ns = ns
        self.nw = nw
        self.s_max = s_max
        self.lines = lines

    def fit(self, X=None, y=None):
        self.geometry_ = SinogramGeometry(self.ns, self.s_max, self.nw)
        self.lines_ = check_line_set(self.lines)
        return self

    def transform(self, X) -> Sinogram:
        check_is_fitted(self, "geometry_")
        sino = radon(check_image(X), self.geometry_)
        return sino if self.lines_.kind == "full" else mask(sino, self.lines_)


class Reconstructor(TransformerMixin, BaseEstimator):
    """Sinogram -> image by ``fbp``, ``normal`` or ``backprojection``."""

    def __init__(self, method: str = "fbp", n: int = 256, extent: float = 1.5, alpha: float = 1.0,
                 cutoff: Optional[float] = None, padding: int = 2, lines=None):
        self.method = method
        self.n = n
        self.extent = extent
        self.alpha = alpha
        self.cutoff = cutoff
        self.padding = padding
        self.lines = lines

    def fit(self, X=None, y=None):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        self.grid_ = Grid2(self.n, self.extent)
        self.filter_ = FilterSpec(self.alpha, self.cutoff, self.padding)
        self.lines_ = check_line_set(self.lines)
        return self

    def transform(self, X) -> Image:
        check_is_fitted(self, "grid_")
        sino = check_sinogram(X)
        if self.lines_.kind != "full":
            sino = mask(sino, self.lines_)
        return reconstruct(sino, self.grid_, self.method, self.filter_)

    predict = transform


class WavefrontEstimator(BaseEstimator):
    """Directional decay of a fitted image at given (x0, xi0) samples."""

    def __init__(self, scales: Optional[Sequence[float]] = None):
        self.scales = scales

    def fit(self, X, y=None):
        self.image_ = check_image(X)
        return self

    def predict(self, samples) -> list[WavefrontEstimate]:
        check_is_fitted(self, "image_")
        out = []
        for s in samples:
            smp = s if isinstance(s, WavefrontSample) else WavefrontSample(tuple(s[0]), tuple(s[1]))
            out.append(directional_decay(self.image_, smp.x0, smp.xi0, self.scales, smp))
        return out

    def transform(self, samples) -> np.ndarray:
        """Columns: decay exponent, finest magnitude, alpha*."""
        est = self.predict(samples)
        return np.array([[e.decay_exponent, e.magnitude, e.alpha_star] for e in est])
