"""Discrete Radon transform, backprojection and line-set geometry.

Lines are parametrised as ``x = s * w_perp + t * w`` with
``w = (cos th, sin th)`` and ``w_perp = (-sin th, cos th)``.  Angles are
sampled on the full circle ``th_k = 2 pi k / nw``; every line therefore
appears twice, as ``(s, th)`` and ``(-s, th + pi)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import map_coordinates

from .grid import Grid2, Image, read_sidecar, trapezoid_weights, write_sidecar

__all__ = [
    "SinogramGeometry",
    "Sinogram",
    "LineSet",
    "SupportError",
    "check_support",
    "check_sinogram_support",
    "radon",
    "backproject",
    "is_visible",
    "mask",
    "line_coordinates",
    "save_sinogram",
    "load_sinogram",
]


class SupportError(ValueError):
    """Image mass outside the disc covered by the sinogram offsets."""


@dataclass(frozen=True)
class SinogramGeometry:
    ns: int
    s_max: float
    nw: int

    def __post_init__(self):
        if self.ns < 2 or self.nw < 2:
            raise ValueError(f"need ns, nw >= 2, got ns={self.ns}, nw={self.nw}")
        if not self.s_max > 0:
            raise ValueError(f"s_max must be positive, got {self.s_max}")
        object.__setattr__(self, "ns", int(self.ns))
        object.__setattr__(self, "nw", int(self.nw))
        object.__setattr__(self, "s_max", float(self.s_max))

    @property
    def s(self) -> np.ndarray:
        return np.linspace(-self.s_max, self.s_max, self.ns)

    @property
    def ds(self) -> float:
        return 2.0 * self.s_max / (self.ns - 1)

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.nw) / self.nw

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.nw

    def omega(self, k: int) -> np.ndarray:
        th = self.theta[k]
        return np.array([np.cos(th), np.sin(th)])

    def weights(self) -> np.ndarray:
        """Quadrature weights on (s, w): trapezoid in s, periodic rule in angle."""
        return np.outer(trapezoid_weights(self.ns, self.ds), np.full(self.nw, self.dtheta))


@dataclass(frozen=True, eq=False)
class Sinogram:
    geometry: SinogramGeometry
    values: np.ndarray  # shape (ns, nw)

    def __post_init__(self):
        v = np.asarray(self.values)
        g = self.geometry
        if v.shape != (g.ns, g.nw):
            raise ValueError(f"sinogram shape {v.shape} does not match {(g.ns, g.nw)}")
        if not np.all(np.isfinite(v)):
            raise ValueError("sinogram contains non-finite values")
        v = v.astype(complex if np.iscomplexobj(v) else float, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other: "Sinogram") -> "Sinogram":
        if other.geometry != self.geometry:
            raise ValueError("sinogram geometry mismatch")
        return Sinogram(self.geometry, self.values + other.values)

    def __mul__(self, c) -> "Sinogram":
        return Sinogram(self.geometry, self.values * c)

    __rmul__ = __mul__

    def inner(self, other: "Sinogram") -> complex:
        return complex(np.sum(self.geometry.weights() * self.values * np.conj(other.values)))


@dataclass(frozen=True, eq=False)
class LineSet:
    """A set of (non-oriented) lines.

    ``kind`` is one of ``"full"``, ``"limited_angle"`` (``a`` = half
    aperture about the x-axis), ``"exterior"`` (``rho`` = excluded radius)
    or ``"custom"`` (boolean ``custom_mask`` over a sinogram geometry).
    """

    kind: str = "full"
    a: Optional[float] = None
    rho: Optional[float] = None
    custom_mask: Optional[np.ndarray] = None
    geometry: Optional[SinogramGeometry] = None

    def __post_init__(self):
        if self.kind == "limited_angle":
            if self.a is None or not 0 < self.a < np.pi / 2:
                raise ValueError(f"limited-angle aperture must lie in (0, pi/2), got {self.a}")
        elif self.kind == "exterior":
            if self.rho is None or not self.rho > 0:
                raise ValueError(f"exterior radius must be positive, got {self.rho}")
        elif self.kind == "custom":
            if self.custom_mask is None or self.geometry is None:
                raise ValueError("custom line set needs custom_mask and geometry")
            m = np.asarray(self.custom_mask, bool)
            if m.shape != (self.geometry.ns, self.geometry.nw):
                raise ValueError("custom mask shape does not match geometry")
            object.__setattr__(self, "custom_mask", m)
        elif self.kind != "full":
            raise ValueError(f"unknown line-set kind {self.kind!r}")

    @classmethod
    def full(cls) -> "LineSet":
        return cls("full")

    @classmethod
    def limited_angle(cls, a: float) -> "LineSet":
        return cls("limited_angle", a=a)

    @classmethod
    def exterior(cls, rho: float) -> "LineSet":
        return cls("exterior", rho=rho)

    @classmethod
    def custom(cls, custom_mask, geometry: SinogramGeometry) -> "LineSet":
        return cls("custom", custom_mask=custom_mask, geometry=geometry)

    @classmethod
    def parse(cls, text: str) -> "LineSet":
        """Parse ``full``, ``limited:<a>`` or ``exterior:<rho>``."""
        name, _, arg = text.partition(":")
        if name == "full":
            return cls.full()
        if name in ("limited", "limited_angle"):
            return cls.limited_angle(float(arg))
        if name == "exterior":
            return cls.exterior(float(arg))
        raise ValueError(f"cannot parse line set {text!r}")

    def describe(self) -> str:
        if self.kind == "limited_angle":
            return f"limited:{self.a:.17g}"
        if self.kind == "exterior":
            return f"exterior:{self.rho:.17g}"
        return self.kind

    def contains(self, s, theta) -> np.ndarray:
        """Membership of lines given by (s, theta) arrays (any representative)."""
        s = np.asarray(s, float)
        theta = np.asarray(theta, float)
        if self.kind == "full":
            return np.ones(np.broadcast(s, theta).shape, bool)
        if self.kind == "limited_angle":
            # angle between the (unoriented) direction and the x-axis
            ang = np.arccos(np.clip(np.abs(np.cos(theta)), 0.0, 1.0))
            return np.broadcast_to(ang < self.a, np.broadcast(s, theta).shape).copy()
        if self.kind == "exterior":
            return np.broadcast_to(np.abs(s) > self.rho, np.broadcast(s, theta).shape).copy()
        g = self.geometry
        s_c, th_c = _canonical(s, theta)
        i = np.clip(np.rint((s_c + g.s_max) / g.ds).astype(int), 0, g.ns - 1)
        k = np.rint(np.mod(th_c, 2 * np.pi) / g.dtheta).astype(int) % g.nw
        inside = np.abs(s_c) <= g.s_max + 0.5 * g.ds
        return self.custom_mask[i, k] & inside


def _canonical(s, theta):
    """Representative with s >= 0; for s == 0 the angle is taken in [0, pi)."""
    s = np.asarray(s, float)
    theta = np.mod(np.asarray(theta, float), 2 * np.pi)
    flip = (s < 0) | ((s == 0) & (theta >= np.pi))
    return np.where(flip, -s, s), np.mod(np.where(flip, theta + np.pi, theta), 2 * np.pi)


def line_coordinates(x0, xi0) -> tuple[float, float]:
    """Canonical (s, theta) of the line through ``x0`` with direction ``xi0_perp``."""
    x0 = np.asarray(x0, float)
    xi = np.asarray(xi0, float)
    w = np.array([-xi[1], xi[0]])
    theta = np.arctan2(w[1], w[0])
    s = float(x0 @ np.array([-w[1], w[0]]))
    s_c, th_c = _canonical(s, theta)
    return float(s_c), float(th_c)


def is_visible(ls: LineSet, x0, xi0) -> bool:
    """True when the line through ``x0`` orthogonal to ``xi0`` belongs to ``ls``."""
    xi = np.asarray(xi0, float)
    if abs(np.linalg.norm(xi) - 1.0) > 1e-9:
        raise ValueError("xi0 must be a unit codirection")
    s, th = line_coordinates(x0, xi)
    return bool(ls.contains(s, th))


def _check_support(image: Image, s_max: float) -> None:
    X, Y = image.grid.mesh()
    outside = np.hypot(X, Y) >= s_max
    vmax = np.max(np.abs(image.values))
    if vmax == 0 or not outside.any():
        return
    worst = np.max(np.abs(image.values[outside]))
    if worst > 1e-12 * vmax:
        raise SupportError(
            f"image has mass {worst:.3g} outside |x| < s_max = {s_max:g}; "
            "use a larger s_max (or a smaller support)"
        )


def check_support(image: Image, s_max: float) -> None:
    """Raise SupportError unless ``image`` vanishes on |x| >= s_max."""
    _check_support(image, s_max)


def check_sinogram_support(sino: Sinogram, rel_tol: float = 1e-6) -> None:
    """Raise SupportError when the data do not vanish at |s| = s_max (truncated object)."""
    v = np.abs(sino.values)
    vmax = v.max()
    edge = max(v[0].max(), v[-1].max())
    if vmax > 0 and edge > rel_tol * vmax:
        raise SupportError(
            f"sinogram does not vanish at |s| = s_max = {sino.geometry.s_max:g} "
            f"(edge/max = {edge / vmax:.3g}); the object is not supported in |x| < s_max, "
            "use a larger s_max")


def radon(image: Image, geom: SinogramGeometry) -> Sinogram:
    """Line integrals by bilinear interpolation and a trapezoid rule along each ray.

    The ray step is half the grid spacing.
    """
    _check_support(image, geom.s_max)
    g = image.grid
    step = 0.5 * g.h
    nt = int(np.ceil(2 * geom.s_max / step)) + 1
    t = np.linspace(-geom.s_max, geom.s_max, nt)
    wt = trapezoid_weights(nt, t[1] - t[0])
    s = geom.s
    vals = np.asarray(image.values)
    parts = [vals.real, vals.imag] if np.iscomplexobj(vals) else [vals]
    out = np.zeros((geom.ns, geom.nw), dtype=vals.dtype)
    scale = 1.0 / g.h
    for k in range(geom.nw):
        w = geom.omega(k)
        wp = np.array([-w[1], w[0]])
        px = (s[:, None] * wp[0] + t[None, :] * w[0] + g.extent) * scale
        py = (s[:, None] * wp[1] + t[None, :] * w[1] + g.extent) * scale
        coords = np.stack([px.ravel(), py.ravel()])
        acc = 0
        for j, part in enumerate(parts):
            samp = map_coordinates(part, coords, order=1, mode="constant", cval=0.0)
            acc = acc + (1j if j else 1) * (samp.reshape(px.shape) @ wt)
        out[:, k] = acc
    return Sinogram(geom, out)


def backproject(sino: Sinogram, grid: Grid2) -> Image:
    """Discrete adjoint-style backprojection R* h(y) = sum_k h(y . w_k_perp, w_k) dtheta."""
    geom = sino.geometry
    X, Y = grid.mesh()
    s = geom.s
    vals = sino.values
    out = np.zeros(X.shape, dtype=vals.dtype)
    for k in range(geom.nw):
        th = geom.theta[k]
        p = -X * np.sin(th) + Y * np.cos(th)
        col = vals[:, k]
        if np.iscomplexobj(col):
            out += np.interp(p, s, col.real, left=0.0, right=0.0) + 1j * np.interp(
                p, s, col.imag, left=0.0, right=0.0)
        else:
            out += np.interp(p, s, col, left=0.0, right=0.0)
    return Image(grid, out * geom.dtheta)


def mask(sino: Sinogram, ls: LineSet) -> Sinogram:
    """Zero every bin whose line is outside ``ls``."""
    geom = sino.geometry
    S, TH = np.meshgrid(geom.s, geom.theta, indexing="ij")
    keep = ls.contains(S, TH)
    return Sinogram(geom, np.where(keep, sino.values, 0.0))


def save_sinogram(sino: Sinogram, path):
    g = sino.geometry
    return write_sidecar(path, {"ns": g.ns, "nw": g.nw, "s_max": g.s_max}, sino.values)


def load_sinogram(path) -> Sinogram:
    header, raw = read_sidecar(path)
    geom = SinogramGeometry(int(header["ns"]), float(header["s_max"]), int(header["nw"]))
    return Sinogram(geom, raw.reshape(geom.ns, geom.nw))
