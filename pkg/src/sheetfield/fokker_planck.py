"""Fokker-Planck equation for the law of a constant-coefficient sheet SPDE.

For ``Y = y0 + alpha t x + beta B(t, x)`` the density ``m(t, x, y)`` of ``Y(t, x)``
solves the mixed-derivative equation

    m_tx = -alpha D m + 1/2 beta^2 D^2 m
           + t x (alpha^2 D^2 m - alpha beta^2 D^3 m + 1/4 beta^4 D^4 m),

``D = d/dy``, with ``m = m0`` on both axes.  The third-order coefficient is
``-alpha beta^2``: it comes from ``-1/2 D^3[(alpha beta^2 + alpha beta^2) m]``
in the general form and is the only sign for which the shifted Gaussian
solves the equation.

Writing ``A = -alpha D + 1/2 beta^2 D^2`` the right-hand side is
``(A + t x A^2) m``, and the solution with axis data ``m0`` is
``exp(t x A) m0``.  As a Goursat problem in ``(t, x)`` the equation is
ill-posed at high ``y``-frequencies: the ``D^4`` term is anti-diffusive and
amplifies perturbations like ``exp(c t x / h^2)``.  `fp_march` therefore
offers two schemes:

``"factorized"`` (default)
    Diagonal marching in which each node is the average of a Crank-Nicolson
    step ``m_t = x A m`` from its lower neighbour and a step ``m_x = t A m``
    from its left neighbour.  Consistent with the equation above (the pair
    of parabolic equations implies it) and stable for any lattice.
``"explicit"``
    The literal update ``m[i+1,j+1] = m[i+1,j] + m[i,j+1] - m[i,j] + dt dx RHS m[i,j]``.
    Only usable on small ``t x`` ranges and coarse ``y`` grids; a
    step-size guard rejects configurations beyond its nominal bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.linalg import solve_banded

from .errors import ArgumentError, ConfigurationError, NumericalError
from .sheet import GridSpec
from .spde_solver import Constant, simulate_paths

NEG_TOL = 1e-6
MASS_FLAG = 0.05


# ---------------------------------------------------------------------------
# analytic density and the explicit residual check


def analytic_sheet_density(t, x, y, y0: float = 0.0, beta: float = 1.0):
    """Density of ``y0 + beta B(t, x)`` at ``y``."""
    v = np.asarray(t, float) * np.asarray(x, float)
    if np.any(v <= 0):
        raise ArgumentError("density needs t*x > 0")
    if not beta > 0:
        raise ArgumentError("density needs beta > 0")
    s2 = beta * beta * v
    out = np.exp(-(np.asarray(y, float) - y0) ** 2 / (2.0 * s2)) / np.sqrt(2.0 * np.pi * s2)
    return float(out) if np.ndim(out) == 0 else out


def gaussian_density(y, mean, var):
    return np.exp(-(np.asarray(y, float) - mean) ** 2 / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)


def gaussian_derivatives(t, x, y, y0=0.0) -> dict:
    """Closed-form ``m``, ``m_yy``, ``m_yyyy`` and ``m_tx`` of the unit sheet density."""
    v = t * x
    m = analytic_sheet_density(t, x, y, y0)
    r = (np.asarray(y, float) - y0) ** 2
    m_yy = m * (-1.0 / v + r / v ** 2)
    m_yyyy = m / v ** 2 * (r ** 2 / v ** 2 - 6.0 * r / v + 3.0)
    m_tx = m * (1.0 / (4.0 * v) - r / v ** 2 + r ** 2 / (4.0 * v ** 3))
    return {"m": m, "m_yy": m_yy, "m_yyyy": m_yyyy, "m_tx": m_tx}


def fp_residual_terms(t, x, y, y0=0.0) -> tuple:
    """``(lhs, diffusion, fourth_order)`` with ``lhs = m_tx``,
    ``diffusion = m_yy / 2`` and ``fourth_order = t x m_yyyy / 4``."""
    if np.any(np.asarray(t * x) <= 0):
        raise ArgumentError("residual needs t*x > 0")
    d = gaussian_derivatives(t, x, y, y0)
    return d["m_tx"], 0.5 * d["m_yy"], 0.25 * t * x * d["m_yyyy"]


def fp_residual_gaussian(t, x, y, y0=0.0):
    """``m_tx - m_yy/2 - t x m_yyyy/4`` for the unit sheet density (closed form)."""
    lhs, diff, fourth = fp_residual_terms(t, x, y, y0)
    return lhs - diff - fourth


def fp_relative_residual(t, x, y, y0=0.0):
    """Residual divided by the largest of the three terms."""
    lhs, diff, fourth = fp_residual_terms(t, x, y, y0)
    scale = np.maximum.reduce([np.abs(lhs), np.abs(diff), np.abs(fourth)])
    return np.abs(lhs - diff - fourth) / scale


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class FpOperatorSpec:
    alpha: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ArgumentError("alpha and beta must be finite")

    def coefficients(self, t: float, x: float) -> dict:
        """Coefficient of ``D^p`` in the right-hand side at ``(t, x)``, ``p = 1..4``."""
        a, b2, v = self.alpha, self.beta ** 2, t * x
        return {1: -a, 2: 0.5 * b2 + v * a * a, 3: -v * a * b2, 4: 0.25 * v * b2 * b2}


def _stencils(h):
    # central stencils on offsets -2..2
    return {
        1: np.array([0.0, -0.5, 0.0, 0.5, 0.0]) / h,
        2: np.array([0.0, 1.0, -2.0, 1.0, 0.0]) / h ** 2,
        3: np.array([-0.5, 1.0, 0.0, -1.0, 0.5]) / h ** 3,
        4: np.array([1.0, -4.0, 6.0, -4.0, 1.0]) / h ** 4,
    }


def stencil_matrix(p: int, n: int, h: float) -> sparse.csr_matrix:
    """``D^p`` on ``n`` uniform nodes with zero values outside the domain."""
    w = _stencils(h)[p]
    return sparse.diags([np.full(n - abs(k), w[k + 2]) for k in range(-2, 3)],
                        list(range(-2, 3)), shape=(n, n), format="csr")


def rhs_operator(op: FpOperatorSpec, t: float, x: float, n: int, h: float) -> sparse.csr_matrix:
    """Assembled right-hand side operator at ``(t, x)`` on ``n`` nodes of spacing ``h``."""
    c = op.coefficients(t, x)
    return sum(c[p] * stencil_matrix(p, n, h) for p in (1, 2, 3, 4))


def apply_rhs(op: FpOperatorSpec, t: float, x: float, m: np.ndarray, h: float) -> np.ndarray:
    """Apply the right-hand side to ``m`` along its last axis."""
    c = op.coefficients(t, x)
    pad = np.zeros(m.shape[:-1] + (m.shape[-1] + 4,))
    pad[..., 2:-2] = m
    out = np.zeros_like(m)
    n = m.shape[-1]
    for p in (1, 2, 3, 4):
        if c[p] == 0:
            continue
        w = _stencils(h)[p]
        acc = sum(w[k] * pad[..., k:k + n] for k in range(5) if w[k] != 0)
        out += c[p] * acc
    return out


def stability_number(grid: GridSpec, op: FpOperatorSpec, h: float) -> float:
    """``dt dx (beta^2/(2h^2) + T X (alpha^2/h^2 + |alpha| beta^2/h^3 + beta^4/(4h^4))``."""
    a, b2 = abs(op.alpha), op.beta ** 2
    return grid.cell_area * (0.5 * b2 / h ** 2 + grid.t_max * grid.x_max
                             * (a * a / h ** 2 + a * b2 / h ** 3 + 0.25 * b2 * b2 / h ** 4))


# ---------------------------------------------------------------------------
# marching


@dataclass(eq=False)
class DensityGrid:
    """Density ``m[i, j, k]`` at node ``(t_i, x_j)`` and ``y_k``."""

    grid: GridSpec
    y_nodes: np.ndarray
    m: np.ndarray
    scheme: str = "factorized"
    diagnostics: dict = field(default_factory=dict)

    @property
    def h(self) -> float:
        return float(self.y_nodes[1] - self.y_nodes[0])

    def at(self, t: float, x: float) -> np.ndarray:
        return self.m[self.grid.node_index(t, x)]

    def mass(self) -> np.ndarray:
        return np.trapezoid(self.m, self.y_nodes, axis=-1)

    def moments(self, i: int, j: int) -> tuple[float, float]:
        dens = self.m[i, j]
        mass = np.trapezoid(dens, self.y_nodes)
        mean = np.trapezoid(dens * self.y_nodes, self.y_nodes) / mass
        var = np.trapezoid(dens * (self.y_nodes - mean) ** 2, self.y_nodes) / mass
        return float(mean), float(var)


def uniform_y_nodes(y_lo: float, y_hi: float, h: float) -> np.ndarray:
    if not (h > 0 and y_hi > y_lo):
        raise ArgumentError("need h > 0 and y_hi > y_lo")
    n = int(round((y_hi - y_lo) / h))
    return y_lo + h * np.arange(n + 1)


def default_y_nodes(op: FpOperatorSpec, grid: GridSpec, y0: float, h: float,
                    s0: float | None = None) -> np.ndarray:
    """Nodes covering the drifted mean with half-width ``6 sqrt(s0^2 + beta^2 T X)``."""
    s0 = 6.0 * h if s0 is None else s0
    v = grid.t_max * grid.x_max
    w = 6.0 * math.sqrt(s0 ** 2 + op.beta ** 2 * v)
    lo = y0 + min(0.0, op.alpha * v) - w
    hi = y0 + max(0.0, op.alpha * v) + w
    return uniform_y_nodes(lo, hi, h)


def mollified_delta(y_nodes, y0: float, s0: float) -> np.ndarray:
    """Gaussian ``N(y0, s0^2)`` on the nodes: the smoothed point-mass start."""
    if not s0 > 0:
        raise ArgumentError("s0 must be positive")
    return gaussian_density(y_nodes, y0, s0 * s0)


def reference_density(op: FpOperatorSpec, t, x, y_nodes, y0, s0):
    """Exact density from the mollified start: ``N(y0 + alpha t x, s0^2 + beta^2 t x)``."""
    v = t * x
    return gaussian_density(y_nodes, y0 + op.alpha * v, s0 * s0 + op.beta ** 2 * v)


class _CrankNicolson:
    """``(I - tau A / 2)^{-1} (I + tau A / 2)`` for the tridiagonal ``A``."""

    def __init__(self, op: FpOperatorSpec, n: int, h: float):
        lo = op.alpha / (2 * h) + 0.5 * op.beta ** 2 / h ** 2
        di = -op.beta ** 2 / h ** 2
        up = -op.alpha / (2 * h) + 0.5 * op.beta ** 2 / h ** 2
        self.n, self.lo, self.di, self.up = n, lo, di, up

    def apply_A(self, m):
        out = self.di * m
        out[1:] += self.lo * m[:-1]
        out[:-1] += self.up * m[1:]
        return out

    def step(self, m, tau):
        if tau == 0.0:
            return m.copy()
        rhs = m + 0.5 * tau * self.apply_A(m)
        ab = np.empty((3, self.n))
        ab[0, :] = -0.5 * tau * self.up
        ab[1, :] = 1.0 - 0.5 * tau * self.di
        ab[2, :] = -0.5 * tau * self.lo
        return solve_banded((1, 1), ab, rhs, check_finite=False)


def fp_march(grid: GridSpec, op: FpOperatorSpec, y_nodes, m0, scheme: str = "factorized",
             check_stability: bool = True) -> DensityGrid:
    """March the density over the lattice from axis data ``m0``.

    ``m0`` must integrate to 1 (trapezoid rule, within 1e-3).  Diagnostics
    report the mass drift, the most negative value, the discrete residual of
    the mixed-derivative equation and, for the explicit scheme, the
    stability number.
    """
    y_nodes = np.asarray(y_nodes, dtype=float)
    m0 = np.asarray(m0, dtype=float)
    if y_nodes.ndim != 1 or y_nodes.size < 5 or m0.shape != y_nodes.shape:
        raise ArgumentError("y_nodes and m0 must be 1-D arrays of equal length >= 5")
    h = float(y_nodes[1] - y_nodes[0])
    if not np.allclose(np.diff(y_nodes), h, rtol=1e-9, atol=0):
        raise ArgumentError("y_nodes must be uniform")
    mass0 = float(np.trapezoid(m0, y_nodes))
    if abs(mass0 - 1.0) > 1e-3:
        raise ArgumentError(f"initial density has mass {mass0:.6g}, expected 1")
    nt, nx, K = grid.nt, grid.nx, y_nodes.size
    t, x = grid.t, grid.x
    m = np.empty((nt + 1, nx + 1, K))
    m[0, :, :] = m0
    m[:, 0, :] = m0
    diagnostics = {}

    if scheme == "explicit":
        s = stability_number(grid, op, h)
        diagnostics["stability_number"] = s
        if check_stability and s > 0.25:
            raise ConfigurationError(
                f"explicit marching unstable: stability number {s:.4g} > 0.25")
        area = grid.cell_area
        for i in range(nt):
            # whole row at once: corners (i, j) for j < nx
            upd = m[i, 1:] - m[i, :-1]
            for jj in range(nx):
                upd[jj] += area * apply_rhs(op, t[i], x[jj], m[i, jj], h)
            m[i + 1, 1:] = m0 + np.cumsum(upd, axis=0)
            if not np.all(np.isfinite(m[i + 1])):
                raise NumericalError("explicit marching overflowed", node=(i + 1, None))
    elif scheme == "factorized":
        cn = _CrankNicolson(op, K, h)
        for d in range(2, nt + nx + 1):
            for i in range(max(1, d - nx), min(nt, d - 1) + 1):
                j = d - i
                from_below = cn.step(m[i - 1, j], grid.dt * x[j])
                from_left = cn.step(m[i, j - 1], grid.dx * t[i])
                m[i, j] = 0.5 * (from_below + from_left)
    else:
        raise ArgumentError(f"unknown scheme {scheme!r}")

    if not np.all(np.isfinite(m)):
        raise NumericalError("non-finite density")
    out = DensityGrid(grid, y_nodes, m, scheme, diagnostics)
    mass = out.mass()
    drift = float(np.max(np.abs(mass - mass0)))
    diagnostics.update({
        "initial_mass": mass0,
        "mass_drift": drift,
        "mass_drift_per_area": drift / (grid.t_max * grid.x_max),
        "mass_flag": drift > MASS_FLAG,
        "min_value": float(m.min()),
        "negative_flag": bool(m.min() < -NEG_TOL),
        "goursat_residual": goursat_residual(out, op),
    })
    return out


def goursat_residual(dens: DensityGrid, op: FpOperatorSpec) -> float:
    """Relative L1 residual of the lattice field in the mixed-derivative equation.

    For each cell, the difference quotient ``(m++ - m+0 - m0+ + m00)/(dt dx)``
    is compared with the right-hand side at the cell centre applied to the
    average of the four corners; the largest ratio of the L1 norms (over
    ``y``) of the mismatch and of the right-hand side is returned.
    """
    g, m, h = dens.grid, dens.m, dens.h
    worst = 0.0
    for i in range(g.nt):
        tc = (i + 0.5) * g.dt
        for j in range(g.nx):
            xc = (j + 0.5) * g.dx
            q = (m[i + 1, j + 1] - m[i + 1, j] - m[i, j + 1] + m[i, j]) / g.cell_area
            avg = 0.25 * (m[i + 1, j + 1] + m[i + 1, j] + m[i, j + 1] + m[i, j])
            r = apply_rhs(op, tc, xc, avg, h)
            # keep 5 nodes clear of the Dirichlet edge
            q, r = q[5:-5], r[5:-5]
            scale = np.sum(np.abs(r))
            if scale > 0:
                worst = max(worst, float(np.sum(np.abs(q - r)) / scale))
    return worst


def l1_distance(a, b, y_nodes) -> float:
    return float(np.trapezoid(np.abs(np.asarray(a) - np.asarray(b)), y_nodes))


def l1_error_vs_reference(dens: DensityGrid, op: FpOperatorSpec, t, x, y0, s0) -> float:
    ref = reference_density(op, t, x, dens.y_nodes, y0, s0)
    return l1_distance(dens.at(t, x), ref, dens.y_nodes)


# ---------------------------------------------------------------------------
# Monte Carlo cross-validation


def kernel_density(samples, y_nodes, bandwidth: float, budget: int = 4_000_000) -> np.ndarray:
    """Gaussian kernel density estimate of ``samples`` on ``y_nodes``."""
    s = np.asarray(samples, float).ravel()
    y = np.asarray(y_nodes, float)
    out = np.zeros_like(y)
    chunk = max(1, budget // y.size)
    for start in range(0, s.size, chunk):
        block = s[start:start + chunk]
        out += np.exp(-0.5 * ((y[None, :] - block[:, None]) / bandwidth) ** 2).sum(axis=0)
    return out / (s.size * bandwidth * math.sqrt(2 * math.pi))


@dataclass
class FpMcComparison:
    nodes: list
    l1: list
    fp_moments: list
    mc_moments: list
    y_nodes: np.ndarray
    fp_density: list
    mc_density: list
    fp_diagnostics: dict


def fp_vs_monte_carlo(grid: GridSpec, coeff: Constant, M: int, seed: int, y_nodes=None,
                      nodes=None, y0: float = 0.0, s0: float = 0.3, h: float = 0.05,
                      scheme: str = "factorized", workers: int | None = None) -> FpMcComparison:
    """Compare the marched density with ``M`` Monte Carlo paths at ``nodes``.

    The density starts from the mollified point mass ``N(y0, s0^2)``; the Monte
    Carlo terminal values are smoothed with a Gaussian kernel of the same
    width ``s0``, so both sides estimate the law of ``Y + s0 Z`` with an
    independent standard normal ``Z``.
    """
    if not isinstance(coeff, Constant):
        raise ArgumentError("fp_vs_monte_carlo needs constant coefficients")
    op = FpOperatorSpec(coeff.a, coeff.b)
    if y_nodes is None:
        y_nodes = default_y_nodes(op, grid, y0, h, s0)
    y_nodes = np.asarray(y_nodes, float)
    nodes = [(grid.nt, grid.nx)] if nodes is None else [tuple(n) for n in nodes]
    dens = fp_march(grid, op, y_nodes, mollified_delta(y_nodes, y0, s0), scheme=scheme)
    vals = simulate_paths(grid, coeff, y0, seed, np.arange(M), nodes=nodes, workers=workers)
    res = FpMcComparison(nodes, [], [], [], y_nodes, [], [], dens.diagnostics)
    for k, (i, j) in enumerate(nodes):
        fp = dens.m[i, j]
        mc = kernel_density(vals[:, k], y_nodes, s0)
        res.l1.append(l1_distance(fp, mc, y_nodes))
        res.fp_moments.append(dens.moments(i, j))
        res.mc_moments.append((float(vals[:, k].mean()), float(vals[:, k].var() + s0 * s0)))
        res.fp_density.append(fp)
        res.mc_density.append(mc)
    return res


# ---------------------------------------------------------------------------
# kernel identity for the ordered double integral


def _gl(n):
    return np.polynomial.legendre.leggauss(n)


def ordered_double_integral(f: Callable, g: Callable, t: float, x: float, n: int = 24) -> float:
    """``H(t,x) = int int I(z wedge-bar z') f(z) g(z') dz dz'`` by nested Gauss-Legendre.

    ``I`` selects ``z_1 <= z'_1`` and ``z_2 >= z'_2``, so the inner integral runs
    over ``z'_1 in [z_1, t]`` and ``z'_2 in [0, z_2]``.  ``f`` and ``g`` take
    arrays ``(s, a)``.  Signed interval lengths give the polynomial
    continuation to ``t < 0`` or ``x < 0``.
    """
    u, w = _gl(n)
    u = 0.5 * (u + 1.0)
    w = 0.5 * w
    s = t * u                        # z_1
    a = x * u                        # z_2
    S, A = np.meshgrid(s, a, indexing="ij")
    W = np.multiply.outer(w, w) * t * x
    # inner nodes: z'_1 = S + (t - S) u, z'_2 = A u
    S1 = S[..., None, None] + (t - S)[..., None, None] * u[:, None]
    A2 = A[..., None, None] * u[None, :]
    Wi = ((t - S)[..., None, None] * A[..., None, None]) * np.multiply.outer(w, w)
    S1, A2 = np.broadcast_arrays(S1, A2)
    inner = np.sum(Wi * g(S1, A2), axis=(-2, -1))
    return float(np.sum(W * f(S, A) * inner))


@dataclass(frozen=True)
class Lemma41Result:
    lhs: float
    rhs: float
    abs_diff: float
    H: float


def lemma41_kernel_check(f: Callable, g: Callable, z=(1.0, 1.0), step: float = 1e-3,
                         n: int = 24) -> Lemma41Result:
    """Mixed derivative of ``H`` against the product of the two edge integrals.

    ``lhs`` is the central difference ``d^2 H / dt dx`` at ``z`` with the given
    step; ``rhs = (int_0^t f(s, x) ds) (int_0^x g(t, a) da)``.
    """
    t, x = z
    H = lambda tt, xx: ordered_double_integral(f, g, tt, xx, n)
    lhs = (H(t + step, x + step) - H(t + step, x - step)
           - H(t - step, x + step) + H(t - step, x - step)) / (4.0 * step * step)
    u, w = _gl(n)
    u, w = 0.5 * (u + 1.0), 0.5 * w
    fi = t * np.sum(w * f(t * u, np.full_like(u, x)))
    gi = x * np.sum(w * g(np.full_like(u, t), x * u))
    rhs = float(fi * gi)
    return Lemma41Result(float(lhs), rhs, abs(float(lhs) - rhs), H(t, x))
