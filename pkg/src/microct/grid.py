"""Uniform node-centred grids, sampled images and trapezoidal quadrature.

Every image lives on the square ``[-extent, extent]**2`` sampled at ``n``
nodes per axis, boundary nodes included.  Arrays use ``ij`` indexing:
``values[i, j]`` is the value at ``(x[i], x[j])``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "Grid2",
    "Image",
    "SpaceTimeGrid",
    "sample",
    "integrate",
    "rel_l2_error",
    "trapezoid_weights",
    "save_image",
    "load_image",
]


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h, dtype=float)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class Grid2:
    n: int
    extent: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs n >= 2 samples per axis, got {self.n}")
        if not np.isfinite(self.extent) or self.extent <= 0:
            raise ValueError(f"grid extent must be positive, got {self.extent}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "extent", float(self.extent))

    @property
    def h(self) -> float:
        return 2.0 * self.extent / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.n)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")

    def weights(self) -> np.ndarray:
        w = trapezoid_weights(self.n, self.h)
        return np.outer(w, w)

    def nyquist(self) -> float:
        """Largest angular frequency resolved by the grid (pi / h)."""
        return np.pi / self.h


@dataclass(frozen=True, eq=False)
class Image:
    grid: Grid2
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"image values have shape {v.shape}, grid expects {(self.grid.n, self.grid.n)}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("image contains non-finite values")
        if not np.iscomplexobj(v):
            v = v.astype(float, copy=False)
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other: "Image") -> "Image":
        _check_same_grid(self, other)
        return Image(self.grid, self.values + other.values)

    def __sub__(self, other: "Image") -> "Image":
        _check_same_grid(self, other)
        return Image(self.grid, self.values - other.values)

    def __mul__(self, c) -> "Image":
        return Image(self.grid, self.values * c)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.sqrt(integrate(Image(self.grid, np.abs(self.values) ** 2)).real))


@dataclass(frozen=True)
class SpaceTimeGrid:
    spatial: Grid2
    nt: int
    T: float

    def __post_init__(self):
        if int(self.nt) != self.nt or self.nt < 2:
            raise ValueError(f"need nt >= 2 time samples, got {self.nt}")
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got {self.T}")
        object.__setattr__(self, "nt", int(self.nt))

    @property
    def dt(self) -> float:
        return self.T / (self.nt - 1)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt)

    @classmethod
    def with_courant(cls, spatial: Grid2, T: float, courant: float = 0.25) -> "SpaceTimeGrid":
        """Smallest ``nt`` with ``dt <= courant * h``."""
        nt = int(np.ceil(T / (courant * spatial.h))) + 1
        return cls(spatial, nt, T)


def _check_same_grid(a: Image, b: Image) -> None:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def sample(grid: Grid2, field: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Image:
    """Evaluate a vectorised ``field(x1, x2)`` at every grid node."""
    X, Y = grid.mesh()
    vals = np.asarray(field(X, Y))
    vals = np.broadcast_to(vals, X.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"field is not finite at node ({i}, {j}) = ({X[i, j]:.6g}, {Y[i, j]:.6g})"
        )
    return Image(grid, np.array(vals))


def integrate(image: Image) -> complex | float:
    """Tensor-product trapezoidal rule over the grid square."""
    w = trapezoid_weights(image.grid.n, image.grid.h)
    val = w @ image.values @ w
    return complex(val) if np.iscomplexobj(val) else float(val)


def rel_l2_error(a: Image, b: Image, mask: np.ndarray | None = None) -> float:
    """Weighted ``||a - b|| / ||b||``; ``mask`` restricts the region."""
    _check_same_grid(a, b)
    w = a.grid.weights()
    if mask is not None:
        w = w * np.asarray(mask, dtype=float)
    num = float(np.sum(w * np.abs(a.values - b.values) ** 2))
    den = float(np.sum(w * np.abs(b.values) ** 2))
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return float(np.sqrt(num / den))


# --- sidecar file format: <stem>.json header + <stem>.bin raw little-endian ---

def _stem(path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".json", ".bin") else p


def write_sidecar(path, header: dict, values: np.ndarray) -> tuple[Path, Path]:
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    complex_ = np.iscomplexobj(values)
    header = dict(header, dtype="c64" if complex_ else "f64", layout="row-major")
    dtype = "<c16" if complex_ else "<f8"
    jpath, bpath = stem.with_suffix(".json"), stem.with_suffix(".bin")
    jpath.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    np.ascontiguousarray(values, dtype=dtype).tofile(bpath)
    return jpath, bpath


def read_sidecar(path) -> tuple[dict, np.ndarray]:
    stem = _stem(path)
    header = json.loads(stem.with_suffix(".json").read_text())
    if header.get("layout", "row-major") != "row-major":
        raise ValueError(f"unsupported layout {header['layout']!r}")
    dtype = {"f64": "<f8", "c64": "<c16"}[header["dtype"]]
    raw = np.fromfile(stem.with_suffix(".bin"), dtype=dtype)
    return header, raw


def save_image(image: Image, path) -> tuple[Path, Path]:
    # "c64" means complex with 64-bit float parts (stored as complex128)
    return write_sidecar(path, {"n": image.grid.n, "extent": image.grid.extent}, image.values)


def load_image(path) -> Image:
    header, raw = read_sidecar(path)
    grid = Grid2(int(header["n"]), float(header["extent"]))
    return Image(grid, raw.reshape(grid.n, grid.n))
