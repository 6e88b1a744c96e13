"""Goursat marching for SPDEs driven by a Brownian sheet.

The solver integrates

    Y(t, x) = y0 + int_{R(t,x)} alpha(., Y, mu) dz + int_{R(t,x)} beta(., Y, mu) B(dz)

on a lattice, with ``Y = y0`` on both axes.  Each cell adds the drift and the
noise term evaluated at its lower-left corner, which is the discrete form of
the Ito (Wick) integral:

    Y[i+1,j+1] = Y[i+1,j] + Y[i,j+1] - Y[i,j]
                 + alpha(t_i, x_j, Y[i,j], mu_ij) dt dx + beta(...) dB[i,j]

Because the corner values of row ``i`` are all known before row ``i+1`` is
built, a whole row is produced by one cumulative sum along ``x``.

Law-coupled (McKean-Vlasov) coefficients are handled by Picard iteration on
the law flow, reusing the same sheets in every sweep.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ArgumentError, NumericalError
from .measure import (EmpiricalMeasure, QuadratureRule, distance_from_transforms,
                      gauss_hermite, half_rule, law_from_samples, sample_transform)
from .sheet import GridSpec, SheetPath, default_workers, sample_increments
from .special_fn import compute_r0


class ContractionWarning(UserWarning):
    """Picard contraction is not guaranteed for the requested domain."""


CONTRACTION_WARNING = "contraction-not-guaranteed"


# ---------------------------------------------------------------------------
# coefficients


@dataclass(frozen=True)
class LawSummary:
    """What a law-dependent coefficient sees of the law along one lattice row.

    ``samples[:, j]`` are the ensemble values at node ``(i, j)`` and ``mean[j]``
    their average.
    """

    samples: np.ndarray
    mean: np.ndarray

    def measure(self, j: int) -> EmpiricalMeasure:
        return law_from_samples(self.samples[:, j])


class CoefficientSpec:
    """Drift ``alpha`` and diffusion ``beta`` with a declared Lipschitz constant."""

    tag: str = ""
    law_dependent = False
    lipschitz: float = 1.0

    def _check_lipschitz(self):
        if not (math.isfinite(self.lipschitz) and self.lipschitz > 0):
            raise ArgumentError(f"Lipschitz constant must be positive, got {self.lipschitz!r}")

    def alpha(self, t, x, y, law=None):
        raise NotImplementedError

    def beta(self, t, x, y, law=None):
        raise NotImplementedError

    def params(self) -> dict:
        """Scalar parameters, as written to config files."""
        return {}


@dataclass(frozen=True)
class Constant(CoefficientSpec):
    a: float = 0.0
    b: float = 0.0
    lipschitz: float = 1.0
    tag = "constant"

    def __post_init__(self):
        self._check_lipschitz()

    def alpha(self, t, x, y, law=None):
        return self.a

    def beta(self, t, x, y, law=None):
        return self.b

    def params(self):
        return {"alpha": self.a, "beta": self.b, "lipschitz": self.lipschitz}


@dataclass(frozen=True)
class SpaceTime(CoefficientSpec):
    """``alpha(t, x, y)`` and ``beta(t, x, y)``; must accept numpy arrays."""

    alpha_fn: Callable
    beta_fn: Callable
    lipschitz: float = 1.0
    tag = "spacetime"

    def __post_init__(self):
        self._check_lipschitz()

    def alpha(self, t, x, y, law=None):
        return self.alpha_fn(t, x, y)

    def beta(self, t, x, y, law=None):
        return self.beta_fn(t, x, y)


@dataclass(frozen=True)
class MeanFieldLinear(CoefficientSpec):
    """``alpha = a * mean(mu) - y``; ``beta`` a constant or a function of ``(t, x, y)``."""

    a: float
    b: float | Callable = 1.0
    lipschitz: float | None = None
    tag = "meanfield_linear"
    law_dependent = True

    def __post_init__(self):
        if self.lipschitz is None:
            object.__setattr__(self, "lipschitz", 1.0 + abs(self.a))
        self._check_lipschitz()

    def alpha(self, t, x, y, law=None):
        return self.a * law.mean - y

    def beta(self, t, x, y, law=None):
        return self.b(t, x, y) if callable(self.b) else self.b

    def params(self):
        p = {"a": self.a, "lipschitz": self.lipschitz}
        if not callable(self.b):
            p["beta"] = self.b
        return p


@dataclass(frozen=True)
class LawDependent(CoefficientSpec):
    """``alpha(t, x, y, law)`` and ``beta(t, x, y, law)`` with ``law`` a `LawSummary`."""

    alpha_fn: Callable
    beta_fn: Callable
    lipschitz: float = 1.0
    tag = "law_dependent"
    law_dependent = True

    def __post_init__(self):
        self._check_lipschitz()

    def alpha(self, t, x, y, law=None):
        return self.alpha_fn(t, x, y, law)

    def beta(self, t, x, y, law=None):
        return self.beta_fn(t, x, y, law)


# ---------------------------------------------------------------------------
# solutions and law flows


@dataclass(frozen=True, eq=False)
class FieldSolution:
    """One sample path of ``Y`` on the lattice nodes."""

    grid: GridSpec
    values: np.ndarray
    y0: float
    coeff: CoefficientSpec
    path_id: int = 0

    def at(self, t: float, x: float) -> float:
        return float(self.values[self.grid.node_index(t, x)])


class LawFlow:
    """One empirical measure per lattice node, backed by an ensemble array.

    ``samples`` has shape ``(M, nt+1, nx+1)``.
    """

    def __init__(self, grid: GridSpec, samples: np.ndarray):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 3 or samples.shape[1:] != grid.shape:
            raise ArgumentError(f"law samples must have shape (M, {grid.shape[0]}, {grid.shape[1]})")
        self.grid = grid
        self.samples = samples
        self.mean = samples.mean(axis=0)

    @classmethod
    def dirac(cls, grid: GridSpec, y0: float) -> "LawFlow":
        return cls(grid, np.full((1,) + grid.shape, float(y0)))

    def measure(self, i: int, j: int) -> EmpiricalMeasure:
        return law_from_samples(self.samples[:, i, j])

    def row(self, i: int) -> LawSummary:
        return LawSummary(self.samples[:, i, :-1], self.mean[i, :-1])

    def snapshot(self, nodes) -> dict:
        """``{"i,j": {"t", "x", "atoms", "weights"}}`` for the requested nodes."""
        t, x = self.grid.t, self.grid.x
        out = {}
        for i, j in nodes:
            d = self.measure(i, j).to_dict()
            out[f"{i},{j}"] = {"t": float(t[i]), "x": float(x[j]), **d}
        return out


def _march(grid: GridSpec, coeff: CoefficientSpec, inc: np.ndarray, y0: float,
           law: LawFlow | None = None, keep: str | Sequence = "all") -> np.ndarray:
    """March a batch of paths; ``inc`` has shape ``(P, nt, nx)``.

    ``keep="all"`` returns ``(P, nt+1, nx+1)``; a list of ``(i, j)`` nodes
    returns ``(P, len(nodes))``.
    """
    P = inc.shape[0]
    area = grid.cell_area
    t, x = grid.t, grid.x[:-1]
    y0 = float(y0)
    full = isinstance(keep, str)
    if full:
        Y = np.empty((P, grid.nt + 1, grid.nx + 1))
        Y[:, 0, :] = y0
        Y[:, :, 0] = y0
    else:
        nodes = list(keep)
        out = np.empty((P, len(nodes)))
        by_row = {}
        for k, (i, j) in enumerate(nodes):
            by_row.setdefault(i, []).append((k, j))
    row = np.full((P, grid.nx + 1), y0)
    for i in range(grid.nt + 1):
        if full:
            if i > 0:
                Y[:, i, :] = row
        else:
            for k, j in by_row.get(i, ()):
                out[:, k] = row[:, j]
        if i == grid.nt:
            break
        summary = law.row(i) if law is not None else None
        corner = row[:, :-1]
        a = coeff.alpha(t[i], x, corner, summary)
        b = coeff.beta(t[i], x, corner, summary)
        row = _next_row(row, a, b, inc[:, i, :], area, y0)
        if not np.all(np.isfinite(row)):
            bad = np.argwhere(~np.isfinite(row))[0]
            raise NumericalError("non-finite solution value", node=(i + 1, int(bad[-1])))
    return Y if full else out


def _next_row(row, a, b, inc, area, y0):
    # Y[i+1, j+1] = Y[i+1, j] + (Y[i, j+1] - Y[i, j]) + a*dt*dx + b*dB[i, j]
    d = (row[:, 1:] - row[:, :-1]) + a * area + b * inc
    new = np.empty_like(row)
    new[:, 0] = y0
    np.cumsum(d, axis=1, out=new[:, 1:])
    new[:, 1:] += y0
    return new


def euler_solve(grid: GridSpec, coeff: CoefficientSpec, sheet: SheetPath, y0: float,
                law: LawFlow | None = None) -> FieldSolution:
    """Solve one path on the lattice of ``sheet``.

    ``law`` must be given exactly when ``coeff`` depends on the law.
    """
    if sheet.grid != grid:
        raise ArgumentError("sheet and grid differ")
    if coeff.law_dependent and law is None:
        raise ArgumentError(f"{coeff.tag} coefficients need a law flow")
    if not coeff.law_dependent and law is not None:
        raise ArgumentError(f"{coeff.tag} coefficients do not take a law flow")
    values = _march(grid, coeff, sheet.increments[None], y0, law)[0]
    values.flags.writeable = False
    return FieldSolution(grid, values, float(y0), coeff, sheet.path_id)


def simulate_paths(grid: GridSpec, coeff: CoefficientSpec, y0: float, seed: int,
                   path_ids, law: LawFlow | None = None, nodes="all",
                   workers: int | None = None, chunk: int = 1024) -> np.ndarray:
    """Sample sheets for ``path_ids`` and march them, in parallel chunks.

    Returns ``(P, nt+1, nx+1)`` values, or ``(P, len(nodes))`` when a node
    list is given.  Output does not depend on ``workers`` or ``chunk``.
    """
    path_ids = np.asarray(path_ids, dtype=np.int64).ravel()
    P = path_ids.size
    shape = (P,) + grid.shape if isinstance(nodes, str) else (P, len(nodes))
    out = np.empty(shape)

    def work(span):
        s, e = span
        inc = sample_increments(grid, seed, path_ids[s:e], workers=1)
        out[s:e] = _march(grid, coeff, inc, y0, law, nodes)

    spans = [(s, min(s + chunk, P)) for s in range(0, P, chunk)]
    workers = default_workers() if workers is None else int(workers)
    if workers <= 1 or len(spans) <= 1:
        for span in spans:
            work(span)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, spans))
    return out


class Ensemble:
    """Values of ``M`` paths on a common lattice; indexing yields `FieldSolution`."""

    def __init__(self, grid, values, y0, coeff, path_ids):
        self.grid = grid
        self.values = values
        self.y0 = y0
        self.coeff = coeff
        self.path_ids = np.asarray(path_ids)

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, k) -> FieldSolution:
        return FieldSolution(self.grid, self.values[k], self.y0, self.coeff,
                             int(self.path_ids[k]))


# ---------------------------------------------------------------------------
# McKean-Vlasov / Picard


@dataclass
class PicardDiagnostics:
    """Per-iteration record of a Picard sweep.

    ``distances[n-1]`` is the sup over the monitored nodes of the squared
    M-distance between the law flows of iterations ``n`` and ``n-1``;
    ``coupling_bounds[n-1]`` is ``pi * max_node mean((Y^n - Y^{n-1})^2)`` over
    all nodes, an upper bound for the distance at every node.
    """

    distances: list = field(default_factory=list)
    coupling_bounds: list = field(default_factory=list)
    converged: bool = False
    tol: float = 0.0
    monitored_nodes: int = 0
    contraction_product: float = 0.0
    contraction_limit: float = 0.0
    warnings: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        """Number of Picard sweeps performed."""
        return len(self.distances)

    @property
    def fixed_point_iteration(self) -> int | None:
        """Index ``n`` of the first law flow that the next sweep reproduced within ``tol``."""
        for n, d in enumerate(self.distances):
            if d < self.tol:
                return n
        return None

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "fixed_point_iteration": self.fixed_point_iteration,
            "tol": self.tol,
            "distances": list(self.distances),
            "coupling_bounds": list(self.coupling_bounds),
            "monitored_nodes": self.monitored_nodes,
            "contraction_product": self.contraction_product,
            "contraction_limit": self.contraction_limit,
            "warnings": list(self.warnings),
        }


@dataclass
class McKeanVlasovResult:
    ensemble: Ensemble
    law: LawFlow
    diagnostics: PicardDiagnostics


def monitor_nodes(grid: GridSpec, max_per_axis: int = 9) -> list[tuple[int, int]]:
    """A sub-lattice of at most ``max_per_axis**2`` nodes, corners included."""
    ii = np.unique(np.linspace(0, grid.nt, min(max_per_axis, grid.nt + 1)).round().astype(int))
    jj = np.unique(np.linspace(0, grid.nx, min(max_per_axis, grid.nx + 1)).round().astype(int))
    return [(int(i), int(j)) for i in ii for j in jj]


def contraction_check(coeff: CoefficientSpec, grid: GridSpec) -> tuple[float, float, bool]:
    """``(K t_max x_max, sqrt(r0), guaranteed)`` for the Picard existence bound."""
    prod = coeff.lipschitz * grid.t_max * grid.x_max
    limit = math.sqrt(compute_r0(1e-12))
    return prod, limit, prod < limit


def mckean_vlasov_solve(grid: GridSpec, coeff: CoefficientSpec, M: int, max_iters: int = 50,
                        tol: float = 1e-10, seed: int = 0, y0: float = 0.0,
                        quad: QuadratureRule | None = None, nodes=None,
                        workers: int | None = None) -> McKeanVlasovResult:
    """Picard iteration on the law flow.

    Starting from ``mu^0 = delta_{y0}`` at every node, sweep ``n`` solves all
    ``M`` paths against ``mu^{n-1}`` (same sheets every sweep) and sets
    ``mu^n`` to the empirical law at each node.  Iteration stops once the sup
    of the squared M-distance between consecutive law flows over the
    monitored ``nodes`` (default: `monitor_nodes`) is below ``tol``, or after
    ``max_iters`` sweeps; failure to converge is reported in the diagnostics.
    """
    if M < 2:
        raise ArgumentError(f"need at least 2 paths, got {M}")
    if max_iters < 1:
        raise ArgumentError(f"max_iters must be >= 1, got {max_iters}")
    if not tol > 0:
        raise ArgumentError(f"tol must be positive, got {tol}")
    diag = PicardDiagnostics(tol=tol)
    prod, limit, ok = contraction_check(coeff, grid)
    diag.contraction_product, diag.contraction_limit = prod, limit
    if not ok:
        msg = (f"{CONTRACTION_WARNING}: K*t_max*x_max = {prod:.6g} >= sqrt(r0) = {limit:.6g}")
        diag.warnings.append(msg)
        warnings.warn(msg, ContractionWarning, stacklevel=2)

    quad = half_rule(gauss_hermite() if quad is None else quad)
    nodes = monitor_nodes(grid) if nodes is None else [tuple(n) for n in nodes]
    diag.monitored_nodes = len(nodes)
    idx = tuple(np.array(nodes).T)

    path_ids = np.arange(M)
    inc = sample_increments(grid, seed, path_ids, workers=workers)
    law = LawFlow.dirac(grid, y0)
    prev_values = np.broadcast_to(law.samples, (M,) + grid.shape)
    prev_hat = sample_transform(np.full((1, len(nodes)), float(y0)), quad)
    law_arg = law if coeff.law_dependent else None
    values = None
    for _ in range(max_iters):
        values = _sweep(grid, coeff, inc, y0, law_arg, workers)
        new_law = LawFlow(grid, values)
        hat = sample_transform(values[:, idx[0], idx[1]], quad)
        d = float(np.max(distance_from_transforms(hat, prev_hat, quad)))
        bound = math.pi * float(np.max(np.mean((values - prev_values) ** 2, axis=0)))
        diag.distances.append(d)
        diag.coupling_bounds.append(bound)
        prev_values, prev_hat, law = values, hat, new_law
        if coeff.law_dependent:
            law_arg = new_law
        if d < tol:
            diag.converged = True
            break
    ens = Ensemble(grid, values, float(y0), coeff, path_ids)
    return McKeanVlasovResult(ens, law, diag)


def _sweep(grid, coeff, inc, y0, law, workers, chunk=1024):
    P = inc.shape[0]
    out = np.empty((P,) + grid.shape)
    spans = [(s, min(s + chunk, P)) for s in range(0, P, chunk)]

    def work(span):
        s, e = span
        out[s:e] = _march(grid, coeff, inc[s:e], y0, law)

    workers = default_workers() if workers is None else int(workers)
    if workers <= 1 or len(spans) <= 1:
        for span in spans:
            work(span)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, spans))
    return out


# ---------------------------------------------------------------------------
# Dynkin formula and integration by parts (psi = 0, constant coefficients)

TEST_FUNCTIONS = {
    "square": Polynomial([0, 0, 1]),
    "quartic": Polynomial([0, 0, 0, 0, 1]),
}


def gaussian_expectation(p: Polynomial, y0: float, alpha: float, beta: float) -> Polynomial:
    """``E[p(Y)]`` as a polynomial in ``v = t*x`` for ``Y ~ N(y0 + alpha v, beta^2 v)``."""
    mean = Polynomial([y0, alpha])
    var = Polynomial([0.0, beta * beta])
    result = Polynomial([0.0])
    for q, c in enumerate(p.coef):
        if c == 0:
            continue
        # E[(m + s Z)^q] = sum_{r even} C(q, r) m^(q-r) s^r (r-1)!!
        for r in range(0, q + 1, 2):
            dfact = math.prod(range(r - 1, 0, -2)) if r > 0 else 1
            result = result + c * math.comb(q, r) * dfact * mean ** (q - r) * var ** (r // 2)
    return result


def _rect_integral(poly: Polynomial, v: float) -> float:
    # int_0^t int_0^x P(s a) ds da = sum_k p_k v^(k+1) / (k+1)^2
    return float(sum(c * v ** (k + 1) / (k + 1) ** 2 for k, c in enumerate(poly.coef)))


def _ordered_pair_integral(poly: Polynomial, v: float) -> float:
    # int int I(zeta wedge-bar zeta') P(|zeta v zeta'|) dzeta dzeta'
    #   = int_0^t int_0^x s a P(s a) ds da
    return float(sum(c * v ** (k + 2) / (k + 2) ** 2 for k, c in enumerate(poly.coef)))


def ordered_pair_measure(t: float, x: float) -> float:
    """``int int I(zeta wedge-bar zeta') dzeta dzeta'`` over ``R_z x R_z``: ``t^2 x^2 / 4``."""
    return _ordered_pair_integral(Polynomial([1.0]), t * x)


def dynkin_rhs_terms(f_id: str, alpha: float, beta: float, y0: float,
                     t: float, x: float) -> dict:
    """Closed-form terms of the Dynkin right-hand side for constant coefficients.

    Returns ``initial`` (``f(y0)``), ``drift`` (the ``alpha f'`` integral),
    ``diffusion`` (the ``beta^2 f''/2`` integral) and the three pieces of the
    ordered double integral: ``pair_drift`` (``f'' alpha^2``), ``pair_mixed``
    (``f''' alpha beta^2``) and ``pair_noise`` (``f'''' beta^4 / 4``).
    """
    f = _test_function(f_id)
    v = t * x
    d1, d2, d3, d4 = (f.deriv(k) for k in (1, 2, 3, 4))
    E = lambda p: gaussian_expectation(p, y0, alpha, beta)
    b2 = beta * beta
    return {
        "initial": float(f(y0)),
        "drift": alpha * _rect_integral(E(d1), v),
        "diffusion": 0.5 * b2 * _rect_integral(E(d2), v),
        "pair_drift": alpha * alpha * _ordered_pair_integral(E(d2), v),
        "pair_mixed": alpha * b2 * _ordered_pair_integral(E(d3), v),
        "pair_noise": 0.25 * b2 * b2 * _ordered_pair_integral(E(d4), v),
    }


def dynkin_rhs(f_id, alpha, beta, y0, t, x) -> float:
    return math.fsum(dynkin_rhs_terms(f_id, alpha, beta, y0, t, x).values())


def _test_function(f_id):
    try:
        return TEST_FUNCTIONS[f_id]
    except KeyError:
        raise ArgumentError(f"unknown test function {f_id!r}; choose from {sorted(TEST_FUNCTIONS)}")


@dataclass(frozen=True)
class MonteCarloCheck:
    mc_estimate: float
    analytic_rhs: float
    std_error: float

    def __iter__(self):
        return iter((self.mc_estimate, self.analytic_rhs, self.std_error))

    @property
    def z_score(self) -> float:
        if self.std_error == 0:
            return 0.0 if self.mc_estimate == self.analytic_rhs else math.inf
        return (self.mc_estimate - self.analytic_rhs) / self.std_error


def _check_grid(grid: GridSpec | None, z) -> GridSpec:
    t, x = z
    if grid is None:
        grid = GridSpec(t, x, 64, 64)
    if grid.cell_area >= 0.01:
        raise ArgumentError("grid too coarse: need t*x/(nt*nx) < 0.01")
    return grid


def dynkin_check(coeff: Constant, f_id: str, z=(1.0, 1.0), M: int = 100_000, seed: int = 0,
                 y0: float = 0.0, grid: GridSpec | None = None,
                 workers: int | None = None) -> MonteCarloCheck:
    """Monte Carlo ``E[f(Y(z))]`` against the closed-form Dynkin right-hand side.

    The lattice spans ``[0, t] x [0, x]`` with ``z = (t, x)`` as its far corner
    (64 x 64 cells unless ``grid`` is given).
    """
    if not isinstance(coeff, Constant):
        raise ArgumentError("dynkin_check needs constant coefficients")
    f = _test_function(f_id)
    grid = _check_grid(grid, z)
    node = grid.node_index(*z)
    vals = simulate_paths(grid, coeff, y0, seed, np.arange(M), nodes=[node], workers=workers)[:, 0]
    fy = f(vals)
    rhs = dynkin_rhs(f_id, coeff.a, coeff.b, y0, *z)
    return MonteCarloCheck(float(fy.mean()), rhs, float(fy.std(ddof=1) / math.sqrt(M)))


def parts_rhs_terms(c1: Constant, c2: Constant, y1: float, y2: float, t: float, x: float) -> dict:
    """Closed-form terms of the integration-by-parts identity for constants."""
    v = t * x
    m1 = Polynomial([y1, c1.a])
    m2 = Polynomial([y2, c2.a])
    return {
        "initial": y1 * y2,
        "cross_drift": _rect_integral(m1 * c2.a + m2 * c1.a, v),
        "noise": c1.b * c2.b * v,
        "pair_drift": 2.0 * c1.a * c2.a * _ordered_pair_integral(Polynomial([1.0]), v),
    }


def parts_rhs(c1, c2, y1, y2, t, x) -> float:
    return math.fsum(parts_rhs_terms(c1, c2, y1, y2, t, x).values())


def parts_check(coeff1: Constant, coeff2: Constant, z=(1.0, 1.0), M: int = 100_000,
                seed: int = 0, y1: float = 0.0, y2: float = 0.0,
                grid: GridSpec | None = None, workers: int | None = None) -> MonteCarloCheck:
    """Monte Carlo ``E[Y1(z) Y2(z)]`` (same sheet for both) against the closed form."""
    if not (isinstance(coeff1, Constant) and isinstance(coeff2, Constant)):
        raise ArgumentError("parts_check needs constant coefficients")
    grid = _check_grid(grid, z)
    node = grid.node_index(*z)
    prod = np.empty(M)
    chunk = 1024
    for s in range(0, M, chunk):
        ids = np.arange(s, min(s + chunk, M))
        inc = sample_increments(grid, seed, ids, workers=workers)
        a = _march(grid, coeff1, inc, y1, keep=[node])[:, 0]
        b = _march(grid, coeff2, inc, y2, keep=[node])[:, 0]
        prod[s:s + ids.size] = a * b
    rhs = parts_rhs(coeff1, coeff2, y1, y2, *z)
    return MonteCarloCheck(float(prod.mean()), rhs, float(prod.std(ddof=1) / math.sqrt(M)))
