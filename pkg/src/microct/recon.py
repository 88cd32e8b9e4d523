"""Reconstruction drivers: FBP, normal-operator inversion, plain backprojection."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import i0e

from .grid import Grid2, Image, rel_l2_error, trapezoid_weights
from .phantom import Phantom
from .spectral import FilterSpec, frac_laplacian_2d, riesz_1d
from .xray import LineSet, Sinogram, SinogramGeometry, backproject, mask, radon

__all__ = [
    "ReconReport",
    "fbp",
    "normal_inversion",
    "normal_operator",
    "masked_recon",
    "reconstruct",
    "interior_mask",
    "METHODS",
]

METHODS = ("fbp", "normal", "backprojection")


def fbp(sino: Sinogram, grid: Grid2, spec: Optional[FilterSpec] = None) -> Image:
    """f = (1 / 4 pi) R* |D_s| R f."""
    spec = spec or FilterSpec(1.0)
    return backproject(riesz_1d(sino, spec), grid) * (1.0 / (4 * np.pi))


def _far_field(sino: Sinogram, grid: Grid2):
    """Gaussian with the data's mass and centroid: (R*R of it, 4 pi times it).

    R*R f decays like 2 M / |x| and the grid cuts that tail off; |D| then
    turns the missing tail into a bias over the whole image.  Subtracting
    the R*R image of a matched Gaussian (known in closed form) leaves a
    remainder decaying like |x|^-3.
    """
    geom = sino.geometry
    w = trapezoid_weights(geom.ns, geom.ds)
    per_angle = w @ sino.values.real
    mass = float(np.mean(per_angle))
    X, Y = grid.mesh()
    if mass == 0.0:
        z = np.zeros_like(X)
        return z, z
    # first moment along w_perp equals c . w_perp for every angle
    mom = w @ (geom.s[:, None] * sino.values.real)
    th = geom.theta
    A = np.stack([-np.sin(th), np.cos(th)], 1)
    c = np.linalg.lstsq(A, mom / mass, rcond=None)[0]
    a = geom.s_max / 4
    r2 = (X - c[0]) ** 2 + (Y - c[1]) ** 2
    amp = mass / (np.pi * a * a)
    # 4 pi |D|^-1 exp(-|x|^2 / a^2) = 2 pi^(3/2) a exp(-z) I0(z), z = |x|^2 / (2 a^2)
    bp = amp * 2 * np.pi ** 1.5 * a * i0e(r2 / (2 * a * a))
    return bp, 4 * np.pi * amp * np.exp(-r2 / (a * a))


def normal_inversion(sino: Sinogram, grid: Grid2, spec: Optional[FilterSpec] = None) -> Image:
    """f = (1 / 4 pi) |D| R* R f, with the 1/|x| far field handled analytically."""
    spec = spec or FilterSpec(1.0)
    if spec.alpha != 1.0:
        raise ValueError(f"normal inversion needs alpha = 1, got {spec.alpha}")
    bp = backproject(sino, grid)
    far_bp, far_img = _far_field(sino, grid)
    with warnings.catch_warnings():
        # the remainder still reaches the grid edge, the warning is expected
        warnings.simplefilter("ignore", RuntimeWarning)
        out = frac_laplacian_2d(Image(grid, bp.values - far_bp), spec)
    return Image(grid, (out.values + far_img) / (4 * np.pi))


def normal_operator(img: Image, geom: SinogramGeometry) -> Image:
    """R* R img (equal to 4 pi |D|^-1 img in the continuum)."""
    return backproject(radon(img, geom), img.grid)


def reconstruct(sino: Sinogram, grid: Grid2, method: str = "fbp",
                spec: Optional[FilterSpec] = None) -> Image:
    if method == "fbp":
        return fbp(sino, grid, spec)
    if method == "normal":
        return normal_inversion(sino, grid, spec)
    if method == "backprojection":
        return backproject(sino, grid)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def interior_mask(phantom: Phantom, grid: Grid2, band: int = 3) -> np.ndarray:
    """Nodes farther than ``band`` pixels from every component boundary."""
    X, Y = grid.mesh()
    keep = np.ones(X.shape, bool)
    for comp in phantom.components:
        # distance to an ellipse boundary, to first order in the level function
        lv = comp.level(X, Y)
        u, v = comp._to_unit(X, Y)
        a, b = comp.axes
        grad = 2 * np.hypot(u / a, v / b)
        dist = np.abs(lv - 1.0) / np.maximum(grad, 1e-300)
        keep &= dist > band * grid.h
    return keep


@dataclass(frozen=True)
class ReconReport:
    image: Image
    method: str
    mask: LineSet
    rel_error_vs_truth: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "mask": self.mask.describe(),
            "rel_error_vs_truth": self.rel_error_vs_truth,
            "n": self.image.grid.n,
            "extent": self.image.grid.extent,
        }


def masked_recon(sino: Sinogram, ls: LineSet, grid: Grid2, method: str = "fbp",
                 truth: Optional[Image] = None, truth_mask: Optional[np.ndarray] = None,
                 spec: Optional[FilterSpec] = None) -> ReconReport:
    """Reconstruct from the zero-filled restriction of ``sino`` to ``ls``."""
    img = reconstruct(mask(sino, ls), grid, method, spec)
    err = rel_l2_error(img, truth, truth_mask) if truth is not None else None
    return ReconReport(img, method, ls, err)
