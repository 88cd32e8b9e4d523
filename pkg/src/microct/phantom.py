"""Piecewise-constant disc/ellipse phantoms with exact line integrals."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid import Grid2, Image

__all__ = [
    "Disc",
    "Ellipse",
    "Phantom",
    "WavefrontSample",
    "rasterize",
    "analytic_radon",
    "conormal_samples",
    "load_phantom",
    "unit_disc",
]

_BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class Ellipse:
    """Ellipse ``{c + R(rotation) (a cos t, b sin t) r : r <= 1}`` with value."""

    center: tuple[float, float]
    axes: tuple[float, float]
    rotation: float = 0.0
    value: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "axes", tuple(float(a) for a in self.axes))
        if len(self.center) != 2 or len(self.axes) != 2:
            raise ValueError("center and axes need two entries")
        if min(self.axes) <= 0:
            raise ValueError(f"semi-axes must be positive, got {self.axes}")
        if self.value == 0:
            raise ValueError("component value must be non-zero")

    def _to_unit(self, x1, x2):
        """Affine map sending the ellipse onto the unit disc."""
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        d1 = np.asarray(x1, float) - self.center[0]
        d2 = np.asarray(x2, float) - self.center[1]
        u = (c * d1 + s * d2) / self.axes[0]
        v = (-s * d1 + c * d2) / self.axes[1]
        return u, v

    def level(self, x1, x2):
        """Implicit function: < 1 inside, = 1 on the boundary."""
        u, v = self._to_unit(x1, x2)
        return u * u + v * v

    def boundary_point(self, t):
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        p = self.axes[0] * np.cos(t)
        q = self.axes[1] * np.sin(t)
        return np.stack([self.center[0] + c * p - s * q, self.center[1] + s * p + c * q], -1)

    def outward_normal(self, t):
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        p = np.cos(t) / self.axes[0]
        q = np.sin(t) / self.axes[1]
        n = np.stack([c * p - s * q, s * p + c * q], -1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def chord(self, s, omega):
        """Length of the intersection with the line ``s w_perp + t w``."""
        s = np.asarray(s, float)
        w = np.asarray(omega, float)
        wp = np.array([-w[1], w[0]])
        px, py = self._to_unit(s * wp[0], s * wp[1])
        c, sn = np.cos(self.rotation), np.sin(self.rotation)
        dx = (c * w[0] + sn * w[1]) / self.axes[0]
        dy = (-sn * w[0] + c * w[1]) / self.axes[1]
        dd = dx * dx + dy * dy
        pd = px * dx + py * dy
        disc = pd * pd - dd * (px * px + py * py - 1.0)
        return np.where(disc > 0, 2.0 * np.sqrt(np.maximum(disc, 0.0)) / dd, 0.0)

    def to_dict(self) -> dict:
        return {"type": "ellipse", "center": list(self.center), "axes": list(self.axes),
                "rotation": self.rotation, "value": self.value}


def Disc(center=(0.0, 0.0), radius: float = 1.0, value: float = 1.0) -> Ellipse:
    return Ellipse(center, (radius, radius), 0.0, value)


Component = Ellipse


def _closures_meet(a: Ellipse, b: Ellipse, m: int = 2048) -> bool:
    t = np.linspace(0, 2 * np.pi, m, endpoint=False)
    for p, q in ((a, b), (b, a)):
        pts = p.boundary_point(t)
        if np.any(q.level(pts[:, 0], pts[:, 1]) <= 1.0):
            return True
        if q.level(*p.center) <= 1.0:
            return True
    return False


@dataclass(frozen=True)
class Phantom:
    components: tuple[Ellipse, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("phantom needs at least one component")
        for i in range(len(comps)):
            for j in range(i + 1, len(comps)):
                if _closures_meet(comps[i], comps[j]):
                    raise ValueError(f"components {i} and {j} overlap or touch")
        object.__setattr__(self, "components", comps)

    def to_json(self) -> str:
        return json.dumps([c.to_dict() for c in self.components], indent=2)

    @classmethod
    def from_dicts(cls, items: Sequence[dict]) -> "Phantom":
        comps = []
        for d in items:
            kind = d.get("type", "disc")
            if kind == "disc":
                comps.append(Disc(d.get("center", (0, 0)), d["radius"], d.get("value", 1.0)))
            elif kind == "ellipse":
                comps.append(Ellipse(d.get("center", (0, 0)), d["axes"],
                                     d.get("rotation", 0.0), d.get("value", 1.0)))
            else:
                raise ValueError(f"unknown component type {kind!r}")
        return cls(tuple(comps))


def unit_disc(value: float = 1.0) -> Phantom:
    return Phantom((Disc((0.0, 0.0), 1.0, value),))


def load_phantom(path) -> Phantom:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data["components"]
    return Phantom.from_dicts(data)


def rasterize(phantom: Phantom, grid: Grid2) -> Image:
    """Nodal values of sum c_j 1_{D_j}; nodes on a boundary get c_j / 2."""
    X, Y = grid.mesh()
    out = np.zeros_like(X)
    for comp in phantom.components:
        lv = comp.level(X, Y)
        out += comp.value * np.where(np.abs(lv - 1.0) <= _BOUNDARY_TOL, 0.5, (lv < 1.0).astype(float))
    return Image(grid, out)


def analytic_radon(phantom: Phantom, s, omega) -> np.ndarray | float:
    """Exact line integral along ``s w_perp + t w`` (s may be an array)."""
    omega = np.asarray(omega, float)
    if abs(np.hypot(*omega) - 1.0) > 1e-9:
        raise ValueError("omega must be a unit vector")
    total = sum(c.value * c.chord(s, omega) for c in phantom.components)
    return float(total) if np.ndim(total) == 0 else total


@dataclass(frozen=True)
class WavefrontSample:
    """Point/codirection pair; ``strength`` is a Sobolev order (1/2 for jumps)."""

    x0: tuple[float, float]
    xi0: tuple[float, float]
    strength: float = 0.5
    analytic: bool = True
    component: int = field(default=0, compare=False)

    def __post_init__(self):
        xi = np.asarray(self.xi0, float)
        if abs(np.linalg.norm(xi) - 1.0) > 1e-9:
            raise ValueError("xi0 must be a unit codirection")
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        object.__setattr__(self, "xi0", tuple(float(v) for v in xi))


def conormal_samples(phantom: Phantom, per_component: int) -> list[WavefrontSample]:
    """Equally spaced (in the ellipse parameter) boundary points with outward normals."""
    if per_component < 1:
        raise ValueError("need at least one sample per component")
    t = 2 * np.pi * np.arange(per_component) / per_component
    out = []
    for k, comp in enumerate(phantom.components):
        pts = comp.boundary_point(t)
        nrm = comp.outward_normal(t)
        out.extend(WavefrontSample(tuple(p), tuple(v), 0.5, True, k) for p, v in zip(pts, nrm))
    return out
