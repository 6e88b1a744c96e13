"""Atomic probability measures on the real line and the weighted Fourier metric.

For a probability measure ``mu`` with Fourier transform
``mu_hat(y) = int exp(-i x y) mu(dx)`` the squared norm is

    ||mu||^2 = int |mu_hat(y)|^2 exp(-y^2) dy,

and the inner product replaces ``|mu_hat|^2`` by ``Re(conj(mu_hat) eta_hat)``.
Integrals are evaluated with a Gauss-Hermite rule, whose weight function is
exactly ``exp(-y^2)``.  Laws of coupled random variables obey
``||law(Y1) - law(Y2)||^2 <= pi * E[(Y1 - Y2)^2]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import ArgumentError

DEFAULT_NODES = 128
MERGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Finite weighted sum of point masses."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        a = np.array(self.atoms, dtype=float).ravel()
        w = np.array(self.weights, dtype=float).ravel()
        if a.size < 1:
            raise ArgumentError("a measure needs at least one atom")
        if a.shape != w.shape:
            raise ArgumentError(f"{a.size} atoms but {w.size} weights")
        if not np.all(np.isfinite(a)):
            raise ArgumentError("atoms must be finite")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ArgumentError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ArgumentError(f"weights sum to {w.sum()!r}, not 1")
        a.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, a: float = 0.0) -> "EmpiricalMeasure":
        return cls(np.array([a]), np.array([1.0]))

    def __len__(self):
        return self.atoms.size

    def mean(self) -> float:
        return float(np.dot(self.weights, self.atoms))

    def variance(self) -> float:
        return float(np.dot(self.weights, (self.atoms - self.mean()) ** 2))

    def to_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "EmpiricalMeasure":
        return cls(np.asarray(d["atoms"], float), np.asarray(d["weights"], float))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights for ``int g(y) exp(-y^2) dy ~ sum_k w_k g(y_k)``."""

    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def _hermgauss(n):
    y, w = hermgauss(n)
    y.flags.writeable = False
    w.flags.writeable = False
    return y, w


def gauss_hermite(n: int = DEFAULT_NODES) -> QuadratureRule:
    """Gauss-Hermite rule with ``n`` nodes (exact for polynomials of degree < 2n)."""
    if n < 1:
        raise ArgumentError(f"node count must be >= 1, got {n}")
    return QuadratureRule(*_hermgauss(int(n)))


def _rule(quad):
    return gauss_hermite() if quad is None else quad


def fourier_at(mu: EmpiricalMeasure, y):
    """``sum_k w_k exp(-i y a_k)``; scalar in, complex out, arrays broadcast."""
    y_arr = np.asarray(y, dtype=float)
    vals = np.exp(-1j * np.multiply.outer(y_arr, mu.atoms)) @ mu.weights
    return complex(vals) if y_arr.ndim == 0 else vals


def _transform(mu, quad):
    return fourier_at(mu, quad.nodes)


def m_norm_sq(mu: EmpiricalMeasure, quad: QuadratureRule | None = None) -> float:
    quad = _rule(quad)
    return float(np.dot(quad.weights, np.abs(_transform(mu, quad)) ** 2))


def m_distance_sq(mu1: EmpiricalMeasure, mu2: EmpiricalMeasure,
                  quad: QuadratureRule | None = None) -> float:
    """Squared distance ``int |mu1_hat - mu2_hat|^2 exp(-y^2) dy``."""
    quad = _rule(quad)
    diff = _transform(mu1, quad) - _transform(mu2, quad)
    return float(np.dot(quad.weights, diff.real ** 2 + diff.imag ** 2))


def inner_product(mu: EmpiricalMeasure, eta: EmpiricalMeasure,
                  quad: QuadratureRule | None = None) -> float:
    """``int Re(conj(mu_hat) eta_hat) exp(-y^2) dy``."""
    quad = _rule(quad)
    prod = np.conj(_transform(mu, quad)) * _transform(eta, quad)
    return float(np.dot(quad.weights, prod.real))


def law_from_samples(samples, merge_tol: float = MERGE_TOL) -> EmpiricalMeasure:
    """Empirical law of ``samples`` with weight ``1/M`` per sample.

    Samples closer than ``merge_tol`` to the previous distinct atom (after
    sorting) are merged into it, accumulating their weight.
    """
    s = np.sort(np.asarray(samples, dtype=float).ravel())
    if s.size == 0:
        raise ArgumentError("cannot build a law from an empty sample")
    if not np.all(np.isfinite(s)):
        raise ArgumentError("samples must be finite")
    starts = np.concatenate(([True], np.diff(s) > merge_tol))
    idx = np.flatnonzero(starts)
    counts = np.diff(np.append(idx, s.size))
    return EmpiricalMeasure(s[idx], counts / s.size)


def half_rule(quad: QuadratureRule | None = None) -> QuadratureRule:
    """Fold a symmetric rule onto ``y >= 0``.

    Transforms of real measures satisfy ``mu_hat(-y) = conj(mu_hat(y))``, so
    any integrand built from ``|.|^2`` or ``Re(conj(.) .)`` is even in ``y``.
    """
    quad = _rule(quad)
    y, w = quad.nodes, quad.weights
    pos = y > 0
    wf = 2.0 * w[pos]
    zero = np.isclose(y, 0.0, atol=1e-300) & ~pos
    if np.any(zero):
        return QuadratureRule(np.concatenate((y[zero], y[pos])),
                              np.concatenate((w[zero], wf)))
    return QuadratureRule(y[pos], wf)


def sample_transform(samples: np.ndarray, quad: QuadratureRule | None = None,
                     budget: int = 2_000_000) -> np.ndarray:
    """Fourier transforms of the empirical laws of many sample sets at once.

    ``samples`` has shape ``(M, K)``: ``M`` draws of ``K`` variables.  Returns
    a ``(K, n_nodes)`` complex array whose row ``k`` is the transform of the
    empirical law of ``samples[:, k]`` at the quadrature nodes.  Merging of
    duplicate atoms does not change a transform, so none is done.
    """
    quad = _rule(quad)
    s = np.asarray(samples, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    M, K = s.shape
    n = quad.nodes.size
    chunk = max(1, budget // max(1, K * n))
    out = np.zeros((K, n), dtype=complex)
    for start in range(0, M, chunk):
        block = s[start:start + chunk]
        phase = block.T[:, :, None] * quad.nodes
        out += np.cos(phase).sum(axis=1) - 1j * np.sin(phase).sum(axis=1)
    return out / M


def distance_from_transforms(h1: np.ndarray, h2: np.ndarray,
                             quad: QuadratureRule | None = None) -> np.ndarray:
    quad = _rule(quad)
    d = h1 - h2
    return (d.real ** 2 + d.imag ** 2) @ quad.weights


def samples_from_csv(path) -> np.ndarray:
    """Read a one-column CSV with header ``y``."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "y":
            raise ArgumentError(f"{path}: expected header 'y', found {header!r}")
        data = [float(line) for line in fh if line.strip()]
    return np.asarray(data)
