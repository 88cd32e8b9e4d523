"""Wave-equation laboratory: concentrating quasimodes, a leapfrog Dirichlet
solver on the square (-1, 1)^2, hyperbolic DN pairings and the X-ray
recovery experiment.

Local coordinates around a segment: after the rigid motion sending the
segment's start point to 0 and its direction to e_n, ``x'`` is the transverse
coordinate and ``x_n`` the position along the line.  Light-cone coordinates
are ``z = (t + x_n) / 2`` and ``w = (t - x_n) / 2``, in which the wave
operator is ``d_z d_w - d_x'^2`` and the transport field 2(d_t + d_n) is 2 d_z.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad
from scipy.interpolate import RectBivariateSpline, RegularGridInterpolator

from .grid import Grid2, Image, SpaceTimeGrid, trapezoid_weights
from .spectral import _smooth_step

__all__ = [
    "Segment",
    "Potential",
    "BoundaryData",
    "WaveQuasimode",
    "WaveSolution",
    "DNPairing",
    "RecoveryRow",
    "zeta",
    "epsilon_of",
    "build_wave_quasimode",
    "quasimode_residual",
    "transport_residuals",
    "concentration_integral",
    "tube_weight",
    "solve_wave",
    "dn_pairing",
    "volume_pairing",
    "integral_identity",
    "line_integral",
    "xray_recovery_experiment",
    "discrete_energy",
    "omega_grid",
]

DIM = 2
ZETA_POWER = 6
# int_{R^2} (1 - |y|^2)_+^12 dy = pi / 13
ZETA_NORM = np.sqrt((2 * ZETA_POWER + 1) / np.pi)
# a0 = KAPPA chi(x', w): the change of variables (x_n, t) -> (z, w) has
# Jacobian 2, so this makes int |a0|^2 dx dt equal the segment length
KAPPA = 1.0 / np.sqrt(2.0)
_BOUNDARY_TOL = 1e-9


def omega_grid(n: int) -> Grid2:
    """Node grid on the closed square [-1, 1]^2."""
    return Grid2(n, 1.0)


def zeta(y1, y2):
    """Polynomial bump sqrt(13/pi) (1 - |y|^2)_+^6, unit L^2 norm on R^2."""
    r2 = np.asarray(y1) ** 2 + np.asarray(y2) ** 2
    return ZETA_NORM * np.clip(1.0 - r2, 0.0, None) ** ZETA_POWER


def epsilon_of(lam: float) -> float:
    return float(lam) ** (-1.0 / (DIM + 8))


# --------------------------------------------------------------------------
# geometry

@dataclass(frozen=True)
class Segment:
    """Line ``eta(s) = start + s * direction`` meeting the closed square for s in [delta, L]."""

    start: tuple[float, float]
    direction: tuple[float, float]
    delta: float
    L: float

    def __post_init__(self):
        d = np.asarray(self.direction, float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("segment direction must be a unit vector")
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "direction", tuple(float(v) for v in d))
        if not 0 < self.delta < self.L:
            raise ValueError(f"need 0 < delta < L, got delta={self.delta}, L={self.L}")
        if np.max(np.abs(self.start)) <= 1.0:
            raise ValueError("segment start point must lie outside the closed square")
        for s in (self.delta, self.L):
            p = self.point(s)
            if abs(np.max(np.abs(p)) - 1.0) > _BOUNDARY_TOL:
                raise ValueError(f"segment is not maximal: point at s={s:g} is {p.tolist()}, not on the boundary")
        mid = self.point(0.5 * (self.delta + self.L))
        if np.max(np.abs(mid)) >= 1.0:
            raise ValueError("segment does not pass through the square")

    @classmethod
    def from_ray(cls, start, direction) -> "Segment":
        """Entry/exit parameters of the ray through the square (slab method)."""
        p = np.asarray(start, float)
        d = np.asarray(direction, float)
        d = d / np.linalg.norm(d)
        lo, hi = -np.inf, np.inf
        for k in range(2):
            if abs(d[k]) < 1e-15:
                if abs(p[k]) > 1.0:
                    raise ValueError("ray misses the square")
                continue
            a, b = (-1.0 - p[k]) / d[k], (1.0 - p[k]) / d[k]
            lo, hi = max(lo, min(a, b)), min(hi, max(a, b))
        if not lo < hi:
            raise ValueError("ray misses the square")
        return cls(tuple(p), tuple(d), lo, hi)

    def point(self, s) -> np.ndarray:
        return np.asarray(self.start) + np.multiply.outer(s, np.asarray(self.direction))

    def to_local(self, x1, x2):
        """(x', x_n) after the rigid motion start -> 0, direction -> e_n."""
        c, s = self.direction
        d1 = np.asarray(x1) - self.start[0]
        d2 = np.asarray(x2) - self.start[1]
        return s * d1 - c * d2, c * d1 + s * d2

    def from_local(self, xp, xn):
        c, s = self.direction
        return self.start[0] + s * xp + c * xn, self.start[1] - c * xp + s * xn

    @property
    def length(self) -> float:
        return self.L - self.delta


@dataclass(frozen=True, eq=False)
class Potential:
    """Real potential on the square grid, zero on the two outer node rings."""

    image: Image

    def __post_init__(self):
        v = self.image.values
        if np.iscomplexobj(v):
            raise ValueError("potential must be real")
        vmax = np.max(np.abs(v))
        ring = np.ones(v.shape, bool)
        ring[2:-2, 2:-2] = False
        if vmax > 0 and np.max(np.abs(v[ring])) > 1e-12 * vmax:
            raise ValueError("potential must vanish within 2 grid cells of the boundary")
        if abs(self.image.grid.extent - 1.0) > 1e-12:
            raise ValueError("potential must live on the square [-1, 1]^2")
        g = self.image.grid
        object.__setattr__(self, "_spline", RectBivariateSpline(g.x, g.x, v, kx=3, ky=3))

    @classmethod
    def zero(cls, grid: Grid2) -> "Potential":
        return cls(Image(grid, np.zeros((grid.n, grid.n))))

    @classmethod
    def from_function(cls, grid: Grid2, fn) -> "Potential":
        X, Y = grid.mesh()
        return cls(Image(grid, np.asarray(fn(X, Y), float) * np.ones_like(X)))

    @property
    def grid(self) -> Grid2:
        return self.image.grid

    @property
    def values(self) -> np.ndarray:
        return self.image.values

    def at(self, x1, x2) -> np.ndarray:
        """Bicubic interpolant, zero outside the square."""
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        out = self._spline.ev(np.clip(x1, -1, 1), np.clip(x2, -1, 1))
        return np.where((np.abs(x1) <= 1) & (np.abs(x2) <= 1), out, 0.0)

    def __sub__(self, other: "Potential") -> Image:
        return self.image - other.image


# --------------------------------------------------------------------------
# boundary data on the four sides

SIDES = ("x1=-1", "x1=+1", "x2=-1", "x2=+1")


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Side traces, ``values[k, side, j]`` at time node k.

    Sides 0/1 are the rows i = 0 / n-1 (x1 = -1 / +1) indexed by x2; sides
    2/3 are the columns j = 0 / n-1 indexed by x1.  Corners appear twice.
    """

    st: SpaceTimeGrid
    values: np.ndarray

    def __post_init__(self):
        n = self.st.spatial.n
        v = np.asarray(self.values)
        if v.shape != (self.st.nt, 4, n):
            raise ValueError(f"boundary data shape {v.shape}, expected {(self.st.nt, 4, n)}")
        if not np.all(np.isfinite(v)):
            raise ValueError("boundary data contains non-finite values")

    @classmethod
    def zeros(cls, st: SpaceTimeGrid, dtype=float) -> "BoundaryData":
        return cls(st, np.zeros((st.nt, 4, st.spatial.n), dtype))

    @classmethod
    def from_function(cls, st: SpaceTimeGrid, fn: Callable) -> "BoundaryData":
        """Trace of ``fn(x1, x2, t)`` (vectorised)."""
        x = st.spatial.x
        t = st.t[:, None]
        one = np.ones_like(x)
        cols = [fn(-one, x, t), fn(one, x, t), fn(x, -one, t), fn(x, one, t)]
        cols = [np.broadcast_to(c, (st.nt, x.size)) for c in cols]
        return cls(st, np.stack(cols, axis=1))

    def norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def _apply_boundary(u: np.ndarray, side_vals: np.ndarray) -> None:
    u[0, :] = side_vals[0]
    u[-1, :] = side_vals[1]
    u[:, 0] = side_vals[2]
    u[:, -1] = side_vals[3]


def _normal_derivative(u: np.ndarray, h: float) -> np.ndarray:
    """Outward normal derivative on each side, one-sided second order."""
    out = np.empty((4, u.shape[0]), dtype=u.dtype)
    out[0] = (3 * u[0, :] - 4 * u[1, :] + u[2, :]) / (2 * h)
    out[1] = (3 * u[-1, :] - 4 * u[-2, :] + u[-3, :]) / (2 * h)
    out[2] = (3 * u[:, 0] - 4 * u[:, 1] + u[:, 2]) / (2 * h)
    out[3] = (3 * u[:, -1] - 4 * u[:, -2] + u[:, -3]) / (2 * h)
    return out


def _laplacian_interior(u: np.ndarray, h: float) -> np.ndarray:
    return (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4 * u[1:-1, 1:-1]) / (h * h)


# --------------------------------------------------------------------------
# solver

@dataclass(frozen=True, eq=False)
class WaveSolution:
    st: SpaceTimeGrid
    direction: str
    dn: np.ndarray  # (nt, 4, n) outward normal derivative
    final: np.ndarray  # field at the last step taken (t = T forward, t = 0 backward)
    field: Optional[np.ndarray] = None  # (nt, n, n) when stored


def solve_wave(q: Optional[Potential], f: Optional[BoundaryData], st: SpaceTimeGrid,
               direction: str = "forward", initial: Optional[tuple] = None,
               source: Optional[Callable[[float], np.ndarray]] = None,
               observer: Optional[Callable[[int, np.ndarray], None]] = None,
               store: bool = False) -> WaveSolution:
    """Leapfrog solve of (d_t^2 - Laplacian + q) u = F with Dirichlet data f.

    ``forward`` starts from (u, u_t) = ``initial`` (default zero) at t = 0,
    ``backward`` from the same data at t = T.  ``observer(k, u)`` sees the
    field at every time node k of the original time axis.
    """
    g = st.spatial
    n, h, dt = g.n, g.h, st.dt
    if dt > 0.5 * h * (1 + 1e-12):
        raise ValueError(f"CFL violation: dt = {dt:.4g} > h/2 = {0.5 * h:.4g}")
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    if q is not None and q.grid != g:
        raise ValueError("potential grid does not match the space-time grid")
    if f is not None and f.st != st:
        raise ValueError("boundary data grid does not match the space-time grid")
    back = direction == "backward"
    nt = st.nt
    order = np.arange(nt)[::-1] if back else np.arange(nt)
    times = st.t[order]

    dtype = complex if (f is not None and np.iscomplexobj(f.values)) or (
        initial is not None and any(np.iscomplexobj(np.asarray(a)) for a in initial)) else float
    sides = f.values[order] if f is not None else np.zeros((nt, 4, n))
    if initial is None:
        scale = np.max(np.abs(sides)) if sides.size else 0.0
        if scale > 0 and np.max(np.abs(sides[0])) > 1e-8 * scale:
            raise ValueError("boundary data must vanish at the starting time (zero Cauchy data)")
    qv = q.values[1:-1, 1:-1] if q is not None else 0.0

    def rhs(u, k):
        r = _laplacian_interior(u, h) - qv * u[1:-1, 1:-1]
        if source is not None:
            r = r + np.asarray(source(times[k]))[1:-1, 1:-1]
        return r

    u0 = np.zeros((n, n), dtype)
    v0 = np.zeros((n, n), dtype)
    if initial is not None:
        u0[...] = initial[0]
        v0[...] = initial[1]
        if back:
            v0 = -v0
    _apply_boundary(u0, sides[0])
    u1 = u0.copy()
    u1[1:-1, 1:-1] += dt * v0[1:-1, 1:-1] + 0.5 * dt * dt * rhs(u0, 0)
    _apply_boundary(u1, sides[1])

    dn = np.empty((nt, 4, n), dtype)
    field_ = np.empty((nt, n, n), dtype) if store else None

    def record(k, u):
        ko = order[k]
        dn[ko] = _normal_derivative(u, h)
        if store:
            field_[ko] = u
        if observer is not None:
            observer(int(ko), u)

    record(0, u0)
    record(1, u1)
    prev, cur = u0, u1
    dt2 = dt * dt
    for k in range(1, nt - 1):
        nxt = np.empty_like(cur)
        nxt[1:-1, 1:-1] = 2 * cur[1:-1, 1:-1] - prev[1:-1, 1:-1] + dt2 * rhs(cur, k)
        _apply_boundary(nxt, sides[k + 1])
        record(k + 1, nxt)
        prev, cur = cur, nxt
    return WaveSolution(st, direction, dn, cur, field_)


def discrete_energy(u_prev: np.ndarray, u_next: np.ndarray, h: float, dt: float,
                    q: Optional[np.ndarray] = None) -> float:
    """Staggered leapfrog energy between two consecutive steps (conserved when f = 0)."""
    ut = (u_next - u_prev) / dt
    e = 0.5 * np.sum(np.abs(ut) ** 2)
    for ax in (0, 1):
        a = np.diff(u_next, axis=ax) / h
        b = np.diff(u_prev, axis=ax) / h
        e += 0.5 * np.sum((a * np.conj(b)).real)
    if q is not None:
        e += 0.5 * np.sum((q * u_next * np.conj(u_prev)).real)
    return float(e * h * h)


# --------------------------------------------------------------------------
# pairings

@dataclass(frozen=True)
class DNPairing:
    value: complex
    n: int
    dt: float
    T: float


def _boundary_pair(st: SpaceTimeGrid, a: np.ndarray, b: np.ndarray) -> complex:
    wt = trapezoid_weights(st.nt, st.dt)
    ws = trapezoid_weights(st.spatial.n, st.spatial.h)
    return complex(np.einsum("k,ksj,j->", wt, a * np.conj(b), ws))


def dn_pairing(q: Optional[Potential], f1: BoundaryData, f2: BoundaryData,
               solution: Optional[WaveSolution] = None) -> DNPairing:
    """(Lambda_q f1, f2) over the lateral boundary; ``solution`` reuses a forward solve of f1."""
    st = f1.st
    sol = solution or solve_wave(q, f1, st, "forward")
    return DNPairing(_boundary_pair(st, sol.dn, f2.values), st.spatial.n, st.dt, st.T)


def volume_pairing(dq: np.ndarray, u1: np.ndarray, u2: np.ndarray, st: SpaceTimeGrid) -> complex:
    """int int dq u1 conj(u2) dx dt for stored fields of shape (nt, n, n)."""
    wt = trapezoid_weights(st.nt, st.dt)
    wx = st.spatial.weights()
    return complex(np.einsum("k,kij->", wt, u1 * np.conj(u2) * (dq * wx)[None]))


def integral_identity(q1: Potential, q2: Potential, f1: BoundaryData, f2: BoundaryData):
    """Both sides of ((Lambda_q1 - Lambda_q2) f1, f2) = int int (q1 - q2) u1 conj(u2)."""
    st = f1.st
    s1 = solve_wave(q1, f1, st, "forward", store=True)
    s12 = solve_wave(q2, f1, st, "forward")
    s2 = solve_wave(q2, f2, st, "backward", store=True)
    lhs = _boundary_pair(st, s1.dn - s12.dn, f2.values)
    rhs = volume_pairing((q1 - q2).values, s1.field, s2.field, st)
    return lhs, rhs


# --------------------------------------------------------------------------
# quasimodes

@dataclass(frozen=True, eq=False)
class WaveQuasimode:
    segment: Segment
    lam: float
    eps: float
    T: float
    xp: np.ndarray  # local transverse nodes
    z: np.ndarray
    w: np.ndarray
    box_a0: np.ndarray  # (□ + q) a0 on the local (x', z, w) grid
    a_m1: np.ndarray  # a_{-1} on the local grid
    chi_scale: float = 1.0
    _interp: object = field(default=None, repr=False)

    def chi(self, xp, w):
        e = self.eps
        return self.chi_scale * zeta(np.asarray(xp) / e, np.asarray(w) / e) / e

    def phase(self, x1, x2, t):
        _, xn = self.segment.to_local(x1, x2)
        return t - xn

    def a0(self, x1, x2, t):
        xp, xn = self.segment.to_local(x1, x2)
        return KAPPA * self.chi(xp, 0.5 * (t - xn))

    def am1(self, x1, x2, t):
        xp, xn = self.segment.to_local(x1, x2)
        tt = np.broadcast_to(t, np.broadcast(xp, t).shape)
        z = 0.5 * (tt + xn)
        w = 0.5 * (tt - xn)
        pts = np.stack(np.broadcast_arrays(xp, z, w), -1)
        return self._interp(pts)

    def evaluate(self, x1, x2, t, with_correction: bool = True):
        """v = exp(i lam phi) (a0 + a_{-1} / lam)."""
        a = self.a0(x1, x2, t)
        if with_correction:
            a = a + self.am1(x1, x2, t) / self.lam
        return np.exp(1j * self.lam * self.phase(x1, x2, t)) * a

    def boundary_data(self, st: SpaceTimeGrid, with_correction: bool = True) -> BoundaryData:
        return BoundaryData.from_function(st, lambda a, b, t: self.evaluate(a, b, t, with_correction))

    def scaled(self, c: float) -> "WaveQuasimode":
        return WaveQuasimode(self.segment, self.lam, self.eps, self.T, self.xp, self.z, self.w,
                             c * self.box_a0, c * self.a_m1, c * self.chi_scale,
                             _make_interp(self.xp, self.z, self.w, c * self.a_m1))


def _make_interp(xp, z, w, arr):
    return RegularGridInterpolator((xp, z, w), arr, bounds_error=False, fill_value=0.0)


def _local_q(q: Optional[Potential], seg: Segment, xp, z, w):
    if q is None:
        return np.zeros((xp.size, z.size, w.size))
    XP, Z, W = np.meshgrid(xp, z, w, indexing="ij")
    x1, x2 = seg.from_local(XP, Z - W)
    return q.at(x1, x2)


def _second_diff(a, h, axis):
    out = np.zeros_like(a)
    sl = [slice(None)] * a.ndim
    c, p, m = list(sl), list(sl), list(sl)
    c[axis], p[axis], m[axis] = slice(1, -1), slice(2, None), slice(None, -2)
    out[tuple(c)] = (a[tuple(p)] - 2 * a[tuple(c)] + a[tuple(m)]) / (h * h)
    return out


def _first_diff(a, h, axis):
    return np.gradient(a, h, axis=axis, edge_order=2)


def build_wave_quasimode(seg: Segment, q: Optional[Potential], lam: float, T: float,
                         points_per_eps: int = 24, z_ref: float = 0.0) -> WaveQuasimode:
    """Quasimode e^{i lam phi}(a0 + a_{-1}/lam) along ``seg``.

    ``a_{-1}`` is the z-integral of (□ + q) a0 from ``z_ref``; it grows
    linearly in z - z_ref, so anchoring it inside the square keeps the
    lambda^-1 term small at moderate lambda.  Any ``z_ref`` solves the
    transport equation.
    """
    if lam < 1:
        raise ValueError(f"lambda must be >= 1, got {lam}")
    if not T > seg.L:
        raise ValueError(f"need T > L = {seg.L:g}, got T = {T:g}")
    eps = epsilon_of(lam)
    hl = eps / points_per_eps
    # two zero cells beyond the support of chi for the finite differences
    m = points_per_eps + 2
    xp = hl * np.arange(-m, m + 1)
    w = xp.copy()
    corners = np.array([[-1, -1], [-1, 1], [1, -1], [1, 1]], float)
    xn_max = np.max(seg.to_local(corners[:, 0], corners[:, 1])[1])
    z_max = 0.5 * (T + xn_max) + 2 * hl
    nz = int(np.ceil(z_max / hl)) + 1
    z = np.linspace(0.0, z_max, nz)
    hz = z[1] - z[0]

    XP, W = np.meshgrid(xp, w, indexing="ij")
    chi = KAPPA * zeta(XP / eps, W / eps) / eps  # a0 in local coordinates, (x', w)
    qloc = _local_q(q, seg, xp, z, w)
    # a0 does not depend on z, so d_z d_w a0 = 0 and only -d_x'^2 + q remains
    box_a0 = (-_second_diff(chi, hl, 0))[:, None, :] + qloc * chi[:, None, :]
    a_m1 = -(1.0 / 2j) * cumulative_trapezoid(box_a0, dx=hz, axis=1, initial=0.0)
    if z_ref != 0.0:
        if not 0.0 <= z_ref <= z_max:
            raise ValueError(f"z_ref must lie in [0, {z_max:.4g}], got {z_ref}")
        k = min(int(z_ref // hz), nz - 2)
        th = (z_ref - z[k]) / hz
        a_m1 = a_m1 - ((1 - th) * a_m1[:, k, :] + th * a_m1[:, k + 1, :])[:, None, :]
    return WaveQuasimode(seg, float(lam), eps, float(T), xp, z, w, box_a0, a_m1, 1.0,
                         _make_interp(xp, z, w, a_m1))


def _inside_mask(qm: WaveQuasimode):
    XP, Z, W = np.meshgrid(qm.xp, qm.z, qm.w, indexing="ij")
    x1, x2 = qm.segment.from_local(XP, Z - W)
    t = Z + W
    return (np.abs(x1) < 1) & (np.abs(x2) < 1) & (t > 0) & (t < qm.T)


def quasimode_residual(qm: WaveQuasimode, q: Optional[Potential]) -> float:
    """sup over the square x (0, T) of lam^-1 |(□ + q) a_{-1}|, by finite differences."""
    a = qm.a_m1
    hl = qm.xp[1] - qm.xp[0]
    hz = qm.z[1] - qm.z[0]
    box = _first_diff(_first_diff(a, hz, 1), hl, 2) - _second_diff(a, hl, 0)
    box = box + _local_q(q, qm.segment, qm.xp, qm.z, qm.w) * a
    inner = np.zeros(a.shape, bool)
    inner[2:-2, 2:-2, 2:-2] = True
    sel = inner & _inside_mask(qm)
    if not sel.any():
        return 0.0
    return float(np.max(np.abs(box[sel])) / qm.lam)


def transport_residuals(qm: WaveQuasimode, h: float = 1e-3) -> tuple[float, float]:
    """(||L a0|| / ||a0||, ||(1/i) L a_{-1} - (□ + q) a0||) with L = 2 (d_t + d_n).

    The first uses centred differences in (x, t); the second the local grid,
    where L is 2 d_z.
    """
    seg = qm.segment
    xp = np.linspace(-qm.eps, qm.eps, 41)
    xn = np.linspace(seg.delta, seg.L, 41)
    XP, XN = np.meshgrid(xp, xn, indexing="ij")
    t = XN + 0.37 * qm.eps
    x1, x2 = seg.from_local(XP, XN)
    c, s = seg.direction
    a0 = lambda dx, dt: qm.a0(x1 + dx * c, x2 + dx * s, t + dt)
    La0 = 2 * ((a0(0, h) - a0(0, -h)) / (2 * h) + (a0(h, 0) - a0(-h, 0)) / (2 * h))
    scale = np.max(np.abs(qm.chi(XP, 0 * XP))) * KAPPA
    r0 = float(np.max(np.abs(La0)) / scale)
    hz = qm.z[1] - qm.z[0]
    La1 = 2 * _first_diff(qm.a_m1, hz, 1)
    r1 = float(np.max(np.abs(La1 / 1j - qm.box_a0)[:, 1:-1, :]))
    return r0, r1


def tube_weight(seg: Segment, r_in: float, r_out: float) -> Callable:
    """psi(x, t) = 1 within distance r_in of the space-time graph (in the (x', w) plane), 0 beyond r_out."""
    def psi(x1, x2, t):
        xp, xn = seg.to_local(x1, x2)
        rho = np.hypot(xp, 0.5 * (t - xn))
        return 1.0 - _smooth_step((rho - r_in) / (r_out - r_in))
    return psi


def concentration_integral(qm: WaveQuasimode, psi: Callable, st: SpaceTimeGrid) -> float:
    """Trapezoidal int_Omega int_0^T psi |exp(i lam phi) a0|^2 dx dt."""
    g = st.spatial
    if abs(g.extent - 1.0) > 1e-12:
        raise ValueError("space-time grid must cover the square [-1, 1]^2")
    X, Y = g.mesh()
    wx = g.weights()
    wt = trapezoid_weights(st.nt, st.dt)
    xp, xn = qm.segment.to_local(X, Y)
    near = np.abs(xp) < qm.eps
    total = 0.0
    for k, t in enumerate(st.t):
        w = 0.5 * (t - xn[near])
        live = np.abs(w) < qm.eps
        if not live.any():
            continue
        a0 = KAPPA * qm.chi(xp[near][live], w[live])
        pv = psi(X[near][live], Y[near][live], t)
        total += wt[k] * np.sum(pv * a0 ** 2 * wx[near][live])
    return float(total)


def line_integral(dq: Callable, seg: Segment) -> float:
    """int_delta^L dq(gamma(s)) ds by adaptive quadrature."""
    def f(s):
        p = seg.point(s)
        return float(dq(p[0], p[1]))
    return float(quad(f, seg.delta, seg.L, limit=200, epsabs=1e-12, epsrel=1e-10)[0])


@dataclass(frozen=True)
class RecoveryRow:
    lam: float
    value: complex
    line_integral: float

    @property
    def abs_error(self) -> float:
        return abs(self.value.real - self.line_integral)

    @property
    def rel_error(self) -> float:
        return self.abs_error / abs(self.line_integral) if self.line_integral else float("inf")


def xray_recovery_experiment(q1: Potential, q2: Potential, seg: Segment, lambdas: Sequence[float],
                             T: float, courant: float = 0.5, time_stride: float = 0.01,
                             space_stride: int = 2, z_ref: Optional[float] = None) -> list[RecoveryRow]:
    """Volume integral int int (q1 - q2) u1 conj(u2) with concentrating solutions
    vs the line integral of q1 - q2 along the segment.

    ``z_ref`` defaults to the segment midpoint (see build_wave_quasimode).

    u2 is solved backward first and kept on a strided sub-lattice of the
    support of q1 - q2; the product u1 conj(u2) is slowly varying (the phases
    cancel) so a trapezoid rule on that sub-lattice suffices.
    """
    g = q1.grid
    if q2.grid != g:
        raise ValueError("potentials live on different grids")
    if not seg.length < T:
        raise ValueError(f"segment length {seg.length:g} must be < T = {T:g}")
    st = SpaceTimeGrid.with_courant(g, T, courant)
    dq = (q1 - q2).values
    spline = RectBivariateSpline(g.x, g.x, dq, kx=3, ky=3)
    lint = line_integral(lambda a, b: spline.ev(a, b), seg)
    rows = []
    nz = np.argwhere(np.abs(dq) > 0)
    if nz.size == 0:
        return [RecoveryRow(float(lam), 0j, lint) for lam in lambdas]
    (i0, j0), (i1, j1) = nz.min(0), nz.max(0) + 1
    si = slice(i0 - ((i0 % space_stride)), i1, space_stride)
    sj = slice(j0 - ((j0 % space_stride)), j1, space_stride)
    kstride = max(1, int(round(time_stride / st.dt)))
    ks = np.arange(0, st.nt, kstride)
    if ks[-1] != st.nt - 1:
        ks = np.append(ks, st.nt - 1)
    wt = _nonuniform_trapezoid(st.t[ks])
    hs = space_stride * g.h
    dq_sub = dq[si, sj]
    for lam in lambdas:
        zr = 0.5 * (seg.delta + seg.L) if z_ref is None else z_ref
        qm1 = build_wave_quasimode(seg, q1, lam, T, z_ref=zr)
        qm2 = build_wave_quasimode(seg, q2, lam, T, z_ref=zr)
        f1 = qm1.boundary_data(st)
        f2 = qm2.boundary_data(st)
        snaps = {}
        keep = set(ks.tolist())

        def grab(k, u):
            if k in keep:
                snaps[k] = u[si, sj].copy()

        solve_wave(q2, f2, st, "backward", observer=grab)
        acc = [0j]

        def pair(k, u):
            if k in keep:
                j = int(np.searchsorted(ks, k))
                acc[0] += wt[j] * np.sum(dq_sub * u[si, sj] * np.conj(snaps[k])) * hs * hs

        solve_wave(q1, f1, st, "forward", observer=pair)
        rows.append(RecoveryRow(float(lam), complex(acc[0]), lint))
    return rows


def _nonuniform_trapezoid(t: np.ndarray) -> np.ndarray:
    w = np.zeros_like(t)
    d = np.diff(t)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w
