"""Seeded Brownian-sheet sampling on rectangular lattices.

Every path has its own counter-based stream: a Philox generator keyed by
``(seed, path_id)``.  Cell increments are drawn from that stream in row-major
cell order, so the ``c``-th cell of a path always receives the ``c``-th
standard normal of its stream.  A path therefore depends only on
``(seed, path_id, grid)``, never on how paths are batched or on the number of
worker threads.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class GridSpec:
    """Lattice ``{(i*dt, j*dx) : 0 <= i <= nt, 0 <= j <= nx}`` on ``[0,t_max] x [0,x_max]``."""

    t_max: float
    x_max: float
    nt: int
    nx: int

    def __post_init__(self):
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise ArgumentError(f"t_max must be positive, got {self.t_max!r}")
        if not (math.isfinite(self.x_max) and self.x_max > 0):
            raise ArgumentError(f"x_max must be positive, got {self.x_max!r}")
        for name in ("nt", "nx"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ArgumentError(f"{name} must be an integer >= 1, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def dt(self) -> float:
        return self.t_max / self.nt

    @property
    def dx(self) -> float:
        return self.x_max / self.nx

    @property
    def cell_area(self) -> float:
        return self.dt * self.dx

    @property
    def shape(self) -> tuple[int, int]:
        """Node-array shape ``(nt+1, nx+1)``."""
        return (self.nt + 1, self.nx + 1)

    @property
    def n_nodes(self) -> int:
        return (self.nt + 1) * (self.nx + 1)

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.nt + 1) * self.dt

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx + 1) * self.dx

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.t_max, self.x_max, self.nt * factor, self.nx * factor)

    def node_index(self, t: float, x: float, atol: float = 1e-9) -> tuple[int, int]:
        """Indices of the node at coordinates ``(t, x)``.

        Raises ``ArgumentError`` when the point is not a lattice node.
        """
        fi, fj = t / self.dt, x / self.dx
        i, j = int(round(fi)), int(round(fj))
        if (abs(fi - i) > atol or abs(fj - j) > atol
                or not (0 <= i <= self.nt and 0 <= j <= self.nx)):
            raise ArgumentError(f"({t!r}, {x!r}) is not a node of {self}")
        return i, j


def default_workers() -> int:
    """Worker count: ``SHEETFIELD_WORKERS`` if set, else the CPU count."""
    env = os.environ.get("SHEETFIELD_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ArgumentError(f"SHEETFIELD_WORKERS must be an integer, got {env!r}")
        if n < 1:
            raise ArgumentError(f"SHEETFIELD_WORKERS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def path_generator(seed: int, path_id: int) -> np.random.Generator:
    """Philox stream for one path; keys are reduced mod 2**64."""
    key = np.array([int(seed) & _MASK64, int(path_id) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _fill(out, grid, seed, path_ids, scale):
    for row, pid in zip(out, path_ids):
        z = path_generator(seed, pid).standard_normal(grid.nt * grid.nx)
        row[...] = z.reshape(grid.nt, grid.nx)
        row *= scale


def sample_increments(grid: GridSpec, seed: int, path_ids, workers: int | None = None,
                      chunk: int = 256) -> np.ndarray:
    """Cell increments for several paths, shape ``(len(path_ids), nt, nx)``.

    Entry ``[p, i, j]`` is the sheet's mass on ``[t_i, t_{i+1}] x [x_j, x_{j+1}]``
    for path ``path_ids[p]``: a centred normal with variance ``dt*dx``.
    """
    path_ids = np.asarray(path_ids, dtype=np.int64).ravel()
    out = np.empty((path_ids.size, grid.nt, grid.nx))
    scale = math.sqrt(grid.cell_area)
    workers = default_workers() if workers is None else int(workers)
    spans = [(s, min(s + chunk, path_ids.size)) for s in range(0, path_ids.size, chunk)]
    if workers <= 1 or len(spans) <= 1:
        _fill(out, grid, seed, path_ids, scale)
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda s: _fill(out[s[0]:s[1]], grid, seed, path_ids[s[0]:s[1]], scale),
                      spans))
    return out


def cumulate(increments: np.ndarray) -> np.ndarray:
    """Node values from cell increments (double prefix sum, zero on the axes).

    Works on a trailing ``(nt, nx)`` block, so batches are accepted.
    """
    inc = np.asarray(increments, dtype=float)
    lead = inc.shape[:-2]
    nt, nx = inc.shape[-2:]
    values = np.zeros(lead + (nt + 1, nx + 1))
    values[..., 1:, 1:] = inc.cumsum(axis=-2).cumsum(axis=-1)
    return values


def coarsen_increments(increments: np.ndarray, factor: int = 2) -> np.ndarray:
    """Aggregate fine cell increments into ``factor x factor`` coarse cells."""
    inc = np.asarray(increments)
    nt, nx = inc.shape[-2:]
    if nt % factor or nx % factor:
        raise ArgumentError(f"grid ({nt}, {nx}) is not divisible by {factor}")
    shaped = inc.reshape(inc.shape[:-2] + (nt // factor, factor, nx // factor, factor))
    return shaped.sum(axis=(-3, -1))


@dataclass(frozen=True, eq=False)
class SheetPath:
    """One Brownian-sheet realization on the nodes of ``grid``.

    ``increments[i, j]`` holds the cell masses and ``values[i, j]`` the node
    values ``B(t_i, x_j)``.  Both arrays are read-only.
    """

    grid: GridSpec
    increments: np.ndarray
    seed: int = 0
    path_id: int = 0
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        inc = np.array(self.increments, dtype=float)
        if inc.shape != (self.grid.nt, self.grid.nx):
            raise ArgumentError(
                f"increments shape {inc.shape} does not match grid {(self.grid.nt, self.grid.nx)}")
        if not np.all(np.isfinite(inc)):
            raise ArgumentError("sheet increments must be finite")
        vals = cumulate(inc)
        inc.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zero(cls, grid: GridSpec) -> "SheetPath":
        return cls(grid, np.zeros((grid.nt, grid.nx)))

    def coarsened(self, factor: int = 2) -> "SheetPath":
        """The same realization seen on a lattice ``factor`` times coarser."""
        g = self.grid
        coarse = GridSpec(g.t_max, g.x_max, g.nt // factor, g.nx // factor)
        return SheetPath(coarse, coarsen_increments(self.increments, factor),
                         self.seed, self.path_id)


def sample_sheet(grid: GridSpec, seed: int, path_id: int = 0) -> SheetPath:
    """Sample one Brownian sheet on the nodes of ``grid``."""
    inc = sample_increments(grid, seed, [path_id], workers=1)[0]
    return SheetPath(grid, inc, int(seed), int(path_id))


def rect_increment(path: SheetPath, t1: float, t2: float, x1: float, x2: float) -> float:
    """``B(t2,x2) - B(t1,x2) - B(t2,x1) + B(t1,x1)`` for lattice coordinates."""
    if t1 > t2 or x1 > x2:
        raise ArgumentError(f"need t1 <= t2 and x1 <= x2, got ({t1}, {t2}, {x1}, {x2})")
    g = path.grid
    i1, j1 = g.node_index(t1, x1)
    i2, j2 = g.node_index(t2, x2)
    v = path.values
    return float(v[i2, j2] - v[i1, j2] - v[i2, j1] + v[i1, j1])
