"""Calderón-problem laboratory on a half-rectangle with a flat edge.

Coordinates are ``(x', x_n)`` with the flat boundary at ``x_n = 0`` and the
domain ``[-a, a] x [0, H]``.  Quasimodes use the complex phase
``Phi = (x' - x0) xi0 + i x_n``; amplitudes are built from their normal
Taylor jets at the edge and cut off at ``x_n = eps``.

Jets are stored as Taylor coefficients, ``jet[k] = d_n^k f(x', 0) / k!``,
with one column per tangential grid node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import pyamg
import scipy.sparse as sp
from numpy.polynomial import chebyshev as cheb
from scipy.integrate import quad
from scipy.sparse.linalg import cg

from .grid import trapezoid_weights
from .spectral import bump

__all__ = [
    "HalfGrid",
    "Conductivity",
    "CalderonQuasimode",
    "ConvergenceError",
    "MaximumPrincipleError",
    "DeterminationRow",
    "StripRow",
    "EPS",
    "default_chi",
    "build_calderon_quasimode",
    "quasimode_defect",
    "ck_constant",
    "boundary_limit_integral",
    "boundary_oracle",
    "solve_conductivity",
    "dn_pairing_elliptic",
    "alessandrini_volume",
    "boundary_determination_experiment",
    "halfspace_dn_symbol_check",
    "solver_log",
    "chi_norm2",
]

EPS = 0.25
_CHEB_EXTRA = 8


class ConvergenceError(RuntimeError):
    pass


class MaximumPrincipleError(RuntimeError):
    pass


@dataclass(frozen=True)
class HalfGrid:
    """Nodes on ``[-width, width] x [0, height]`` with spacing ``width / m``."""

    m: int
    width: float = 1.0
    height: Optional[float] = None

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"need m >= 2, got {self.m}")
        if not self.width > 0:
            raise ValueError("width must be positive")
        H = self.width if self.height is None else float(self.height)
        ratio = H / self.h
        if H <= 0 or abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(f"height {H} is not a multiple of the spacing {self.h}")
        object.__setattr__(self, "height", H)

    @property
    def h(self) -> float:
        return self.width / self.m

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.width, self.width, 2 * self.m + 1)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.height, int(round(self.height / self.h)) + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.size, self.y.size

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def weights(self) -> np.ndarray:
        return np.outer(trapezoid_weights(self.shape[0], self.h), trapezoid_weights(self.shape[1], self.h))

    def boundary_mask(self) -> np.ndarray:
        b = np.zeros(self.shape, bool)
        b[0], b[-1], b[:, 0], b[:, -1] = True, True, True, True
        return b


@dataclass(frozen=True, eq=False)
class Conductivity:
    grid: HalfGrid
    values: np.ndarray
    fn: Optional[Callable] = None

    def __post_init__(self):
        v = np.asarray(self.values, float)
        if v.shape != self.grid.shape:
            raise ValueError(f"conductivity shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("conductivity contains non-finite values")
        if v.min() <= 0:
            raise ValueError(f"conductivity must be positive, min is {v.min():.3g}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: HalfGrid, fn: Callable) -> "Conductivity":
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(fn(X, Y), X.shape), fn)

    @classmethod
    def constant(cls, grid: HalfGrid, c: float = 1.0) -> "Conductivity":
        return cls.from_function(grid, lambda x, y: np.full(np.broadcast(x, y).shape, float(c)))

    def normal_jet(self, order: int, depth: float = EPS) -> np.ndarray:
        """Taylor coefficients of gamma in x_n at the edge, shape (order + 1, nx)."""
        x = self.grid.x
        deg = order + _CHEB_EXTRA
        if self.fn is not None:
            t = np.cos(np.pi * (np.arange(2 * deg + 1) + 0.5) / (2 * deg + 1))
            yy = 0.5 * depth * (t + 1.0)
            samples = np.broadcast_to(self.fn(x[None, :], yy[:, None]), (yy.size, x.size))
        else:
            keep = self.grid.y <= depth + 1e-12
            yy = self.grid.y[keep]
            t = 2.0 * yy / depth - 1.0
            samples = self.values[:, keep].T
            deg = min(order + 2, yy.size - 1)
        coef = cheb.chebfit(t, samples, deg)
        out = np.zeros((order + 1, x.size))
        c = coef
        for k in range(order + 1):
            out[k] = cheb.chebval(-1.0, c) * (2.0 / depth) ** k / math.factorial(k)
            c = cheb.chebder(c)
        return out

    @property
    def edge(self) -> np.ndarray:
        return self.values[:, 0]


# jet algebra: arrays (K + 1, nx) of Taylor coefficients

def _jmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    K = a.shape[0]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for k in range(K):
        out[k] = np.sum(a[: k + 1] * b[k::-1], axis=0)
    return out


def _jdn(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    k = np.arange(1, a.shape[0])
    out[:-1] = k[:, None] * a[1:]
    return out


def _jdx(a: np.ndarray, h: float) -> np.ndarray:
    return np.gradient(a, h, axis=1, edge_order=2)


def _transport_jet(b, gam, eta, xi, h):
    return 2.0 * _jmul(gam, xi * _jdx(b, h) + 1j * _jdn(b)) + _jmul(eta, b)


def _divergence_jet(b, gam, h):
    return _jdx(_jmul(gam, _jdx(b, h)), h) + _jdn(_jmul(gam, _jdn(b)))


def _solve_transport_jet(start, rhs, gam, eta, xi, h, M):
    """Jet of b with b(x', 0) = start and (Lb)_k = rhs_k for k < M."""
    b = np.zeros((M + 1, start.size), complex)
    b[0] = start
    for k in range(M):
        res = _transport_jet(b, gam, eta, xi, h)[k]
        b[k + 1] = (rhs[k] - res) / (2j * gam[0] * (k + 1))
    return b


CHI_POWER = 8


def default_chi(eps: float = EPS, power: int = CHI_POWER) -> Callable:
    """(1 - (x'/eps)^2)_+^power: C^(power-1), supported in |x'| < eps, peak 1.

    A polynomial bump keeps the tangential derivatives that enter the
    normal jets moderate; C-infinity bumps with a short transition make the
    truncated Taylor extension huge at moderate lambda.
    """
    def chi(xp):
        r = np.asarray(xp, float) / eps
        return np.clip(1.0 - r * r, 0.0, None) ** power
    return chi


@dataclass(frozen=True, eq=False)
class CalderonQuasimode:
    grid: HalfGrid
    x0: float
    xi0: float
    lam: float
    N: int
    M: int
    eps: float
    chi: np.ndarray  # boundary values on grid.x
    jets: tuple  # N + 1 arrays (M + 1, nx)
    b: np.ndarray = field(repr=False)  # amplitude on the grid

    def phase(self) -> np.ndarray:
        X, Y = self.grid.mesh()
        return (X - self.x0) * self.xi0 + 1j * Y

    def grad_phase(self) -> tuple[complex, complex]:
        return complex(self.xi0), 1j

    def values(self) -> np.ndarray:
        """v = lam^-1/2 e^{i lam Phi} b."""
        return self.lam ** -0.5 * np.exp(1j * self.lam * self.phase()) * self.b

    def gradient(self) -> tuple[np.ndarray, np.ndarray]:
        """grad v with the phase differentiated exactly and b by differences."""
        h = self.grid.h
        e = self.lam ** -0.5 * np.exp(1j * self.lam * self.phase())
        bx, by = np.gradient(self.b, h, h, edge_order=2)
        p1, p2 = self.grad_phase()
        return e * (1j * self.lam * p1 * self.b + bx), e * (1j * self.lam * p2 * self.b + by)

    def boundary_values(self) -> np.ndarray:
        """v on the grid with the interior zeroed (Dirichlet data)."""
        out = np.where(self.grid.boundary_mask(), self.values(), 0.0)
        return out


def build_calderon_quasimode(gamma: Conductivity, x0: float = 0.0, xi0: float = 1.0,
                             chi: Optional[Callable] = None, N: int = 1, M: int = 4,
                             lam: float = 16.0, eps: float = EPS) -> CalderonQuasimode:
    """Quasimode concentrating at the edge point (x0, 0) with tangential frequency xi0.

    Normal derivatives of each amplitude are matched to order ``M`` by the
    jet recursion; the interior extension is the Taylor polynomial times a
    cutoff equal to 1 on [0, eps/2] and 0 beyond eps.
    """
    if gamma.values.min() <= 0:
        raise ValueError("conductivity must be positive")
    if M < 2:
        raise ValueError(f"matching order M must be >= 2, got {M}")
    if N < 1:
        raise ValueError(f"amplitude order N must be >= 1, got {N}")
    if abs(abs(xi0) - 1.0) > 1e-12:
        raise ValueError("xi0 must be a unit tangent (+1 or -1)")
    if not lam >= 1:
        raise ValueError(f"lambda must be >= 1, got {lam}")
    g = gamma.grid
    h = g.h
    chi = chi or default_chi(eps)
    chi_vals = np.asarray(chi(g.x - x0), float)
    # level j is matched to order M + 2 (N - j): its divergence feeds level
    # j + 1 and loses two normal orders
    top = M + 2 * N
    gam = gamma.normal_jet(top + 1).astype(complex)
    eta = (xi0 * _jdx(gam, h) + 1j * _jdn(gam))[: top + 1]
    gam = gam[: top + 1]
    nx = g.x.size
    full = [_solve_transport_jet(chi_vals.astype(complex), np.zeros((top + 1, nx)), gam, eta, xi0, h, top)]
    for j in range(1, N + 1):
        K = top - 2 * j
        # (1/i) L b_{-j} + P b_{-(j-1)} = 0 with P = -div(gamma grad)
        prev = full[-1]
        rhs = 1j * _divergence_jet(prev, gam[: prev.shape[0]], h)[: K + 1]
        full.append(_solve_transport_jet(np.zeros(nx, complex), rhs, gam[: K + 1], eta[: K + 1], xi0, h, K))
    jets = [jet[: M + 1] for jet in full]
    y = g.y
    powers = y[None, :] ** np.arange(M + 1)[:, None]  # (M + 1, ny)
    cut = bump(y / eps)
    b = np.zeros(g.shape, complex)
    for j, jet in enumerate(jets):
        b += lam ** -j * (jet.T @ powers) * cut[None, :]
    return CalderonQuasimode(g, float(x0), float(xi0), float(lam), N, M, eps, chi_vals, tuple(jets), b)


def quasimode_defect(qm: CalderonQuasimode, gamma: Conductivity) -> float:
    """L2 norm of div(gamma grad v) over the half-rectangle.

    The exponential is factored out exactly:
    div(gamma grad v) = lam^-1/2 e^{i lam Phi} (i lam L b + div(gamma grad b)),
    with L b and div(gamma grad b) from second-order differences of b and
    gamma.  Differencing v itself would be swamped by O((lam h)^2) phase
    errors.
    """
    if gamma.grid != qm.grid:
        raise ValueError("quasimode and conductivity live on different grids")
    h = qm.grid.h
    b, gv = qm.b, gamma.values
    bx, by = np.gradient(b, h, h, edge_order=2)
    gx, gy = np.gradient(gv, h, h, edge_order=2)
    p1, p2 = qm.grad_phase()
    eta = p1 * gx + p2 * gy
    Lb = 2 * gv * (p1 * bx + p2 * by) + eta * b
    div = np.gradient(gv * bx, h, axis=0, edge_order=2) + np.gradient(gv * by, h, axis=1, edge_order=2)
    X, Y = qm.grid.mesh()
    mod = qm.lam ** -0.5 * np.exp(-qm.lam * Y)
    dens = np.abs(mod * (1j * qm.lam * Lb + div)) ** 2
    return float(np.sqrt(np.sum(qm.grid.weights() * dens)))


def ck_constant(k: int) -> float:
    """c_k = 2 int_0^inf x^k e^{-2x} dx = k! / 2^k."""
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k}")
    return math.factorial(int(k)) / 2.0 ** int(k)


def boundary_limit_integral(qm: CalderonQuasimode, qm2: CalderonQuasimode, f: np.ndarray,
                            k: int) -> complex:
    """lam^k times the quadrature of x_n^k f grad v . conj(grad v2)."""
    if qm.lam != qm2.lam:
        raise ValueError(f"quasimodes have different lambda ({qm.lam} vs {qm2.lam})")
    if qm.grid != qm2.grid or qm.x0 != qm2.x0 or qm.xi0 != qm2.xi0:
        raise ValueError("quasimodes must share the grid, x0 and xi0")
    X, Y = qm.grid.mesh()
    f = np.broadcast_to(np.asarray(f), X.shape)
    a1, a2 = qm.gradient()
    b1, b2 = qm2.gradient()
    dens = Y ** k * f * (a1 * np.conj(b1) + a2 * np.conj(b2))
    return complex(qm.lam ** k * np.sum(qm.grid.weights() * dens))


def boundary_oracle(edge_weight: np.ndarray, chi: np.ndarray, x: np.ndarray, k: int) -> float:
    """c_k times the trapezoid integral of edge_weight |chi|^2 along the edge."""
    w = trapezoid_weights(x.size, x[1] - x[0])
    return ck_constant(k) * float(np.sum(w * edge_weight * np.abs(chi) ** 2))


# elliptic solver

_SOLVER_LOG = {"solves": 0, "max_principle_checks": 0, "max_principle_violations": 0}


def solver_log() -> dict:
    """Counters over every conductivity solve in this process."""
    return dict(_SOLVER_LOG)


def _edges(grid: HalfGrid, gv: np.ndarray):
    nx, ny = grid.shape
    idx = np.arange(nx * ny).reshape(nx, ny)
    bnd = grid.boundary_mask().ravel()
    a = np.concatenate([idx[:-1, :].ravel(), idx[:, :-1].ravel()])
    b = np.concatenate([idx[1:, :].ravel(), idx[:, 1:].ravel()])
    g = gv.ravel()
    ge = 0.5 * (g[a] + g[b])
    # edges between two boundary nodes carry half a cell
    wt = np.where(bnd[a] & bnd[b], 0.5, 1.0)
    return a, b, ge, wt


def _stiffness(grid: HalfGrid, gv: np.ndarray) -> sp.csr_matrix:
    a, b, ge, wt = _edges(grid, gv)
    c = ge * wt
    n = grid.shape[0] * grid.shape[1]
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([c, c, -c, -c])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


class _System:
    def __init__(self, gamma: Conductivity):
        self.grid = gamma.grid
        self.K = _stiffness(gamma.grid, gamma.values)
        bnd = gamma.grid.boundary_mask().ravel()
        self.inner = np.flatnonzero(~bnd)
        self.outer = np.flatnonzero(bnd)
        self.A = self.K[self.inner][:, self.inner].tocsr()
        self.B = self.K[self.inner][:, self.outer].tocsr()
        self.ml = pyamg.smoothed_aggregation_solver(self.A, symmetry="symmetric")
        self.prec = self.ml.aspreconditioner(cycle="V")

    def solve_real(self, rhs: np.ndarray) -> np.ndarray:
        nrm = np.linalg.norm(rhs)
        if nrm == 0:
            return np.zeros_like(rhs)
        budget = 10 * self.inner.size
        x, info = cg(self.A, rhs, rtol=1e-10, atol=0.0, maxiter=budget, M=self.prec)
        res = np.linalg.norm(rhs - self.A @ x) / nrm
        if info != 0 or res > 1e-9:
            raise ConvergenceError(
                f"conductivity CG did not reach relative residual 1e-10 in {budget} iterations "
                f"(info={info}, residual={res:.3g})")
        return x


_SYSTEMS: dict = {}


def _system(gamma: Conductivity) -> _System:
    key = id(gamma)
    hit = _SYSTEMS.get(key)
    if hit is None or hit[0] is not gamma:
        if len(_SYSTEMS) > 8:
            _SYSTEMS.clear()
        hit = (gamma, _System(gamma))
        _SYSTEMS[key] = hit
    return hit[1]


def _check_max_principle(u: np.ndarray, data: np.ndarray, mask: np.ndarray) -> None:
    for part in ((np.real, np.real) if not np.iscomplexobj(u) else (np.real, np.imag)):
        d = part(data)[mask]
        v = part(u)
        lo, hi = d.min(), d.max()
        tol = 1e-8 * max(hi - lo, np.abs(d).max(), 1e-300)
        _SOLVER_LOG["max_principle_checks"] += 1
        if v.min() < lo - tol or v.max() > hi + tol:
            _SOLVER_LOG["max_principle_violations"] += 1
            raise MaximumPrincipleError(
                f"discrete maximum principle violated: u in [{v.min():.6g}, {v.max():.6g}], "
                f"data in [{lo:.6g}, {hi:.6g}]")


def solve_conductivity(gamma: Conductivity, f, source=None) -> np.ndarray:
    """Solve div(gamma grad u) + source = 0 with u = f on the boundary.

    ``f`` is an array on the grid (only boundary nodes are read) or a callable
    of (x', x_n).  Edge conductivities are node averages, so the interior
    matrix is an M-matrix; without a source the maximum principle is checked
    on every solve.
    """
    g = gamma.grid
    X, Y = g.mesh()
    data = f(X, Y) if callable(f) else np.asarray(f)
    data = np.broadcast_to(data, X.shape)
    if not np.all(np.isfinite(data)):
        raise ValueError("boundary data contains non-finite values")
    sysm = _system(gamma)
    # solving for the deviation from the mean boundary value keeps
    # constant data exact (the rows of [A B] sum to zero)
    fb = data.ravel()[sysm.outer]
    base = fb.mean()
    rhs = -(sysm.B @ (fb - base))
    if source is not None:
        s = source(X, Y) if callable(source) else np.asarray(source)
        rhs = rhs + g.h ** 2 * np.broadcast_to(s, X.shape).ravel()[sysm.inner]
    out = np.array(data, dtype=np.result_type(data, rhs, float)).ravel()
    if np.iscomplexobj(rhs):
        ui = sysm.solve_real(rhs.real) + 1j * sysm.solve_real(rhs.imag)
    else:
        ui = sysm.solve_real(rhs)
    out[sysm.inner] = ui + base
    out = out.reshape(X.shape)
    _SOLVER_LOG["solves"] += 1
    if source is None:
        _check_max_principle(out, data, g.boundary_mask())
    return out


def _energy(grid: HalfGrid, weight: np.ndarray, u: np.ndarray, w: np.ndarray) -> complex:
    a, b, ge, wt = _edges(grid, weight)
    du = u.ravel()[a] - u.ravel()[b]
    dw = w.ravel()[a] - w.ravel()[b]
    return complex(np.sum(wt * ge * du * np.conj(dw)))


def dn_pairing_elliptic(gamma: Conductivity, f, g) -> complex:
    """(Lambda_gamma f, g) as the discrete energy sum gamma grad u_f . conj(grad u_g)."""
    uf = solve_conductivity(gamma, f)
    ug = solve_conductivity(gamma, g)
    return _energy(gamma.grid, gamma.values, uf, ug)


def alessandrini_volume(gamma1: Conductivity, gamma2: Conductivity, u1: np.ndarray,
                        u2: np.ndarray) -> complex:
    """Discrete int (gamma1 - gamma2) grad u1 . conj(grad u2)."""
    if gamma1.grid != gamma2.grid:
        raise ValueError("conductivities live on different grids")
    return _energy(gamma1.grid, gamma1.values - gamma2.values, u1, u2)


@dataclass(frozen=True)
class DeterminationRow:
    lam: float
    k: int
    scaled_integral: complex
    boundary_oracle: float

    @property
    def rel_error(self) -> float:
        if self.boundary_oracle == 0:
            return abs(self.scaled_integral)
        return abs(self.scaled_integral.real - self.boundary_oracle) / abs(self.boundary_oracle)

    def as_record(self) -> dict:
        return {"lambda": self.lam, "k": self.k, "scaled_integral": self.scaled_integral.real,
                "boundary_oracle": self.boundary_oracle, "rel_error": self.rel_error}


def boundary_determination_experiment(gamma1: Conductivity, gamma2: Conductivity, x0: float,
                                      lambdas: Sequence[float], order: int = 0, xi0: float = 1.0,
                                      chi: Optional[Callable] = None, N: int = 1,
                                      M: int = 4) -> list[DeterminationRow]:
    """lam^k int (gamma1 - gamma2) grad u1 . conj(grad u2) with exact solves u_j
    whose boundary data are the quasimodes, against c_k int d_n^k(gamma1 - gamma2)/k! |chi|^2.
    """
    if order not in (0, 1):
        raise ValueError(f"order must be 0 or 1, got {order}")
    g = gamma1.grid
    if gamma2.grid != g:
        raise ValueError("conductivities live on different grids")
    diff_jet = gamma1.normal_jet(order) - gamma2.normal_jet(order)
    if order == 1:
        scale = max(np.abs(gamma1.edge).max(), 1.0)
        if np.abs(gamma1.edge - gamma2.edge).max() > 1e-10 * scale:
            raise ValueError("order-1 determination needs gamma1 = gamma2 on the boundary")
    rows = []
    for lam in lambdas:
        qm1 = build_calderon_quasimode(gamma1, x0, xi0, chi, N, M, lam)
        qm2 = build_calderon_quasimode(gamma2, x0, xi0, chi, N, M, lam)
        u1 = solve_conductivity(gamma1, qm1.boundary_values())
        u2 = solve_conductivity(gamma2, qm2.boundary_values())
        val = lam ** order * alessandrini_volume(gamma1, gamma2, u1, u2)
        oracle = boundary_oracle(diff_jet[order], qm1.chi, g.x, order)
        rows.append(DeterminationRow(float(lam), order, val, oracle))
    return rows


@dataclass(frozen=True)
class StripRow:
    xi: float
    ratio: float
    oracle: float

    @property
    def rel_error(self) -> float:
        # xi = 0 rows hold the flux itself against an oracle of 0
        if self.oracle == 0:
            return abs(self.ratio)
        return abs(self.ratio - self.oracle) / self.oracle


def halfspace_dn_symbol_check(frequencies: Sequence[float], height: float = 2.0, width: float = 1.0,
                              m: int = 128) -> list[StripRow]:
    """-d_n u / (|xi| f) on the edge of a strip for f = cos(xi x'), gamma = 1.

    The top and side data are the traces of the exact strip solution
    cos(xi x') sinh(xi (H - x_n)) / sinh(xi H), so the oracle is coth(xi H).
    The normal derivative is the second-order one-sided difference.  For
    xi = 0 the data are constant and the row holds the mean flux itself.
    """
    grid = HalfGrid(m, width, height)
    gamma = Conductivity.constant(grid)
    h = grid.h
    x = grid.x
    rows = []
    for xi in frequencies:
        xi = float(xi)
        if xi == 0:
            u = solve_conductivity(gamma, lambda xp, xn: np.ones_like(xp))
            dn = -(-3 * u[:, 0] + 4 * u[:, 1] - u[:, 2]) / (2 * h)
            rows.append(StripRow(0.0, float(np.mean(dn)), 0.0))
            continue
        exact = lambda xp, xn: np.cos(xi * xp) * np.sinh(xi * (height - xn)) / np.sinh(xi * height)
        u = solve_conductivity(gamma, exact)
        dn = -(-3 * u[:, 0] + 4 * u[:, 1] - u[:, 2]) / (2 * h)
        f = np.cos(xi * x)
        w = trapezoid_weights(x.size, h)
        ratio = float(np.sum(w * dn * f) / (abs(xi) * np.sum(w * f * f)))
        rows.append(StripRow(xi, ratio, 1.0 / np.tanh(abs(xi) * height)))
    return rows


def chi_norm2(chi: Callable, eps: float = EPS) -> float:
    """int |chi|^2 dx' by adaptive quadrature."""
    return float(quad(lambda s: float(chi(s)) ** 2, -eps, eps, limit=200)[0])
