"""Microlocal tomography toolkit: X-ray transform and inversion, wavefront
probes, and quasimode experiments for the Gel'fand and Calderón problems."""
__version__ = "0.1.0"

from .grid import Grid2, Image, SpaceTimeGrid, load_image, save_image
from .phantom import Disc, Ellipse, Phantom, load_phantom, rasterize, unit_disc
from .xray import LineSet, Sinogram, SinogramGeometry, SupportError, backproject, radon
from .spectral import FilterSpec, frac_laplacian_2d, riesz_1d
from .recon import fbp, normal_inversion, reconstruct
from .estimators import RadonTransform, Reconstructor, WavefrontEstimator

__all__ = [
    "Grid2", "Image", "SpaceTimeGrid", "load_image", "save_image",
    "Disc", "Ellipse", "Phantom", "load_phantom", "rasterize", "unit_disc",
    "LineSet", "Sinogram", "SinogramGeometry", "SupportError", "backproject", "radon",
    "FilterSpec", "frac_laplacian_2d", "riesz_1d",
    "fbp", "normal_inversion", "reconstruct",
    "RadonTransform", "Reconstructor", "WavefrontEstimator",
]
