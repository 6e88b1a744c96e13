"""Propagation of chaos for the linear space-time Ornstein-Uhlenbeck system.

Particle ``i`` of an ``N``-particle system obeys

    Y_i(t, x) = y + int_{R(t,x)} ( (1/N) sum_j a_j Y_j - Y_i ) dz + B_i(t, x)

with independent sheets ``B_i``.  When ``(1/N) sum_j a_j -> a`` the particles
decouple into copies of the mean-field limit

    Y(t, x) = y f((a-1) t x) + int_{R(t,x)} f(-(t-u)(x-v)) B(du, dv),

where ``f`` is `bessel_f`.  The deterministic part is ``y f((a-1) t x)``: it is
the only choice compatible with ``E[Y] = y + (a-1) int int E[Y]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .measure import QuadratureRule, distance_from_transforms, gauss_hermite, half_rule, \
    sample_transform
from .sheet import GridSpec, SheetPath, sample_increments
from .special_fn import bessel_f_array
from .spde_solver import FieldSolution, LawFlow, MeanFieldLinear, SpaceTime, _march, _next_row


@dataclass(eq=False)
class ParticleSystem:
    """Paths of an ``N``-particle system; ``values[k]`` is particle ``k``."""

    N: int
    a_vec: np.ndarray
    y: float
    grid: GridSpec
    values: np.ndarray
    sheets: list

    @property
    def paths(self) -> list[FieldSolution]:
        return [FieldSolution(self.grid, self.values[k], self.y, None, s.path_id)
                for k, s in enumerate(self.sheets)]

    @property
    def a_norm(self) -> float:
        """``||A|| = sum_j a_j``."""
        return float(np.sum(self.a_vec))


def _march_particles(grid, a_vec, y, inc, keep, noise_scale=1.0):
    """March ``R`` independent systems at once; ``inc`` is ``(R, N, nt, nx)``.

    ``keep`` is ``"all"`` or a single node ``(i, j)``; returns ``(R, N, nt+1, nx+1)``
    or ``(R, N)``.
    """
    R, N = inc.shape[:2]
    a = np.asarray(a_vec, dtype=float)[None, :, None]
    area = grid.cell_area
    y = float(y)
    row = np.full((R * N, grid.nx + 1), y)
    full = isinstance(keep, str)
    if full:
        out = np.empty((R, N) + grid.shape)
    for i in range(grid.nt + 1):
        if full:
            out[:, :, i, :] = row.reshape(R, N, -1)
        elif i == keep[0]:
            return row[:, keep[1]].reshape(R, N).copy()
        if i == grid.nt:
            break
        corner = row[:, :-1].reshape(R, N, -1)
        drift = np.mean(a * corner, axis=1, keepdims=True) - corner
        row = _next_row(row, drift.reshape(R * N, -1), noise_scale,
                        inc[:, :, i, :].reshape(R * N, -1), area, y)
    return out


def _particle_ids(N, rep):
    return rep * N + np.arange(N)


def simulate_particles(N: int, a_vec, y: float, grid: GridSpec, seed: int, rep: int = 0,
                       path_ids=None, noise_scale: float = 1.0) -> ParticleSystem:
    """Simulate one ``N``-particle system.

    Particle ``k`` is driven by the sheet with path id ``rep*N + k`` unless
    ``path_ids`` is given.  ``noise_scale=0`` suppresses the noise (the sheets
    are still sampled and recorded).
    """
    a_vec = np.asarray(a_vec, dtype=float).ravel()
    if N < 1:
        raise ArgumentError(f"N must be >= 1, got {N}")
    if a_vec.size != N:
        raise ArgumentError(f"a_vec has {a_vec.size} entries, expected {N}")
    ids = _particle_ids(N, rep) if path_ids is None else np.asarray(path_ids, dtype=np.int64)
    if ids.size != N:
        raise ArgumentError("need one path id per particle")
    inc = sample_increments(grid, seed, ids, workers=1)
    values = _march_particles(grid, a_vec, y, inc[None], "all", noise_scale)[0]
    sheets = [SheetPath(grid, inc[k], int(seed), int(ids[k])) for k in range(N)]
    return ParticleSystem(N, a_vec, float(y), grid, values, sheets)


def particle_coefficient(a: float) -> SpaceTime:
    """Drift of a single particle (``N = 1``) as an `euler_solve` coefficient."""
    return SpaceTime(lambda t, x, y: a * y - y, lambda t, x, y: 1.0, lipschitz=abs(a - 1.0) or 1.0)


# ---------------------------------------------------------------------------
# the mean-field limit


@dataclass(eq=False)
class LimitProcess:
    """Series representation of the mean-field limit on the lattice nodes."""

    a: float
    y: float
    grid: GridSpec
    deterministic: np.ndarray
    stochastic: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.deterministic + self.stochastic


def limit_mean(a: float, y: float, grid: GridSpec) -> np.ndarray:
    """``y f((a-1) t x)`` at every node."""
    return y * bessel_f_array((a - 1.0) * np.multiply.outer(grid.t, grid.x))


def convolution_kernel(grid: GridSpec, nt: int | None = None, nx: int | None = None) -> np.ndarray:
    """``K[p, q] = f(-p dt q dx)`` for ``1 <= p <= nt``, ``1 <= q <= nx``.

    The weight of the cell with lower-left corner ``(t_k, x_l)`` in the value
    at node ``(n, m)`` is ``K[n-k, m-l]`` (left-corner Riemann sum).
    """
    nt = grid.nt if nt is None else nt
    nx = grid.nx if nx is None else nx
    p = np.arange(1, nt + 1) * grid.dt
    q = np.arange(1, nx + 1) * grid.dx
    return bessel_f_array(-np.multiply.outer(p, q))


def limit_process(a: float, y: float, grid: GridSpec, sheet: SheetPath) -> LimitProcess:
    """Limit field driven by ``sheet``.

    Node ``(n, m)`` receives ``y f((a-1) t_n x_m)`` plus
    ``sum_{k<n, l<m} f(-(t_n - t_k)(x_m - x_l)) dB[k, l]``.
    """
    if sheet.grid != grid:
        raise ArgumentError("sheet and grid differ")
    det = limit_mean(a, y, grid)
    K = convolution_kernel(grid)
    inc = sheet.increments
    stoch = np.zeros(grid.shape)
    # reversed-kernel correlation: stoch[n, m] = sum_{k<n,l<m} K[n-1-k, m-1-l] inc[k, l]
    Kr = K[::-1, ::-1]
    for n in range(1, grid.nt + 1):
        for m in range(1, grid.nx + 1):
            stoch[n, m] = np.sum(Kr[grid.nt - n:, grid.nx - m:] * inc[:n, :m])
    return LimitProcess(float(a), float(y), grid, det, stoch)


def limit_at(a: float, y: float, grid: GridSpec, inc: np.ndarray, node) -> np.ndarray:
    """Limit values at one node for a batch of sheets ``inc`` of shape ``(R, nt, nx)``."""
    n, m = node
    det = y * bessel_f_array(np.array((a - 1.0) * grid.t[n] * grid.x[m]))
    if n == 0 or m == 0:
        return np.full(inc.shape[0], float(det))
    K = convolution_kernel(grid, n, m)[::-1, ::-1]
    return det + np.tensordot(inc[:, :n, :m], K, axes=([1, 2], [0, 1]))


def discrete_limit_at(a: float, y: float, grid: GridSpec, inc: np.ndarray, node) -> np.ndarray:
    """Lattice reconstruction of the limit at one node, for a batch of sheets.

    Marches ``Y = y + int (a m - Y) dz + B`` with the same left-corner scheme as
    the particles, where ``m`` is the lattice solution of the mean equation
    ``m = y + (a-1) int m dz``.  The difference from particle 1 of an
    ``N``-particle system driven by the same sheet is then exactly the
    lattice version of ``I_{1,N}``.
    """
    mean = _march(grid, SpaceTime(lambda t, x, v: (a - 1.0) * v, lambda t, x, v: 0.0),
                  np.zeros((1, grid.nt, grid.nx)), y)
    coeff = MeanFieldLinear(a, 1.0)
    return _march(grid, coeff, inc, y, LawFlow(grid, mean), keep=[node])[:, 0]


# ---------------------------------------------------------------------------
# convergence study


@dataclass(frozen=True)
class ChaosRow:
    N: int
    distance_sq: float
    var_I: float
    stderr: float


def chaos_samples(N: int, a: float, y: float, grid: GridSpec, node, M: int, seed: int,
                  chunk_cells: int = 4_000_000):
    """Return ``(particle_1, series_limit, lattice_limit)`` samples at ``node``.

    Replication ``r`` uses path ids ``r*N .. r*N + N-1``; the limit is driven by
    the sheet of particle 1 (path id ``r*N``).
    """
    a_vec = np.full(N, float(a))
    per_rep = N * grid.nt * grid.nx
    R = max(1, chunk_cells // per_rep)
    part = np.empty(M)
    series = np.empty(M)
    lattice = np.empty(M)
    for s in range(0, M, R):
        reps = np.arange(s, min(s + R, M))
        ids = (reps[:, None] * N + np.arange(N)).ravel()
        inc = sample_increments(grid, seed, ids).reshape(reps.size, N, grid.nt, grid.nx)
        part[reps] = _march_particles(grid, a_vec, y, inc, node)[:, 0]
        first = inc[:, 0]
        series[reps] = limit_at(a, y, grid, first, node)
        lattice[reps] = discrete_limit_at(a, y, grid, first, node)
    return part, series, lattice


def chaos_gap(N_list, a: float, y: float, grid: GridSpec, z=(1.0, 1.0), M: int = 2000,
              seed: int = 0, quad: QuadratureRule | None = None) -> list[ChaosRow]:
    """Distance to the limit law and variance of ``I_{1,N}`` for each ``N``.

    ``distance_sq`` is the squared M-distance between the empirical laws of
    ``Y^{1,N}(z)`` and of the series limit at ``z`` over ``M`` replications.
    ``var_I`` is the sample variance of ``Y^{1,N}(z)`` minus its single-sheet
    lattice reconstruction (`discrete_limit_at`), and ``stderr`` the standard
    error of that variance estimate.
    """
    N_list = [int(n) for n in N_list]
    if any(n < 1 for n in N_list) or any(b <= a_ for a_, b in zip(N_list, N_list[1:])):
        raise ArgumentError(f"N_list must be increasing positive integers, got {N_list}")
    if M < 2:
        raise ArgumentError("need at least 2 replications")
    node = grid.node_index(*z)
    quad = half_rule(gauss_hermite() if quad is None else quad)
    rows = []
    for N in N_list:
        part, series, lattice = chaos_samples(N, a, y, grid, node, M, seed)
        h1 = sample_transform(part, quad)
        h2 = sample_transform(series, quad)
        dist = float(distance_from_transforms(h1, h2, quad)[0])
        diff = part - lattice
        var = float(np.var(diff, ddof=1))
        c = diff - diff.mean()
        se = math.sqrt(max(float(np.mean(c ** 4)) - var ** 2, 0.0) / M)
        rows.append(ChaosRow(N, dist, var, se))
    return rows


def loglog_slope(N_values, variances) -> float:
    """Least-squares slope of ``log(variance)`` against ``log(N)``."""
    return float(np.polyfit(np.log(np.asarray(N_values, float)),
                            np.log(np.asarray(variances, float)), 1)[0])
