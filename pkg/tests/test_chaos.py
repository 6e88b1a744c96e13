import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from sheetfield.chaos import (chaos_gap, chaos_samples, convolution_kernel, discrete_limit_at,
                              limit_at, limit_mean, limit_process, loglog_slope,
                              particle_coefficient, simulate_particles)
from sheetfield.errors import ArgumentError
from sheetfield.measure import law_from_samples, m_distance_sq
from sheetfield.sheet import GridSpec, SheetPath, sample_increments, sample_sheet
from sheetfield.special_fn import f
from sheetfield.spde_solver import euler_solve

G16 = GridSpec(1.0, 1.0, 16, 16)


def test_single_particle_matches_euler_solve():
    ps = simulate_particles(1, [0.3], 1.5, G16, seed=4)
    ref = euler_solve(G16, particle_coefficient(0.3), ps.sheets[0], 1.5)
    assert np.array_equal(ps.values[0], ref.values)
    assert ps.paths[0].path_id == 0 and ps.a_norm == pytest.approx(0.3)


def test_single_particle_noise_free_matches_series():
    g = GridSpec(1, 1, 64, 64)
    ps = simulate_particles(1, [0.5], 1.0, g, seed=0, noise_scale=0.0)
    assert ps.values[0, -1, -1] == pytest.approx(f(-0.5), rel=0.01)


def test_particle_mean_matches_series():
    vals = np.array([simulate_particles(50, np.full(50, 0.5), 1.0, G16, seed=1, rep=r).values[0, -1, -1]
                     for r in range(200)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - f(-0.5)) < 3 * se


def test_average_follows_noise_only_equation():
    N, R = 10, 400
    avg = np.array([simulate_particles(N, np.ones(N), 0.0, G16, seed=2, rep=r).values[:, -1, -1].mean()
                    for r in range(R)])
    var = avg.var(ddof=1)
    se = var * math.sqrt(2 / (R - 1))
    assert abs(var - 1.0 / N) < 3 * se
    # pathwise: the average equals y + mean of the sheets
    ps = simulate_particles(N, np.ones(N), 0.25, G16, seed=2)
    sheets = np.mean([s.values for s in ps.sheets], axis=0)
    np.testing.assert_allclose(ps.values.mean(axis=0), 0.25 + sheets, atol=1e-13)


def test_simulate_particles_validation():
    with pytest.raises(ArgumentError):
        simulate_particles(0, [], 1.0, G16, 0)
    with pytest.raises(ArgumentError):
        simulate_particles(3, [1, 2], 1.0, G16, 0)


def test_exchangeability():
    N = 6
    a = np.array([0.1, 0.9, -0.3, 0.5, 1.2, 0.0])
    perm = np.array([3, 0, 5, 1, 2, 4])
    ids = np.arange(N)
    base = simulate_particles(N, a, 1.0, G16, seed=7, path_ids=ids)
    moved = simulate_particles(N, a[perm], 1.0, G16, seed=7, path_ids=ids[perm])
    np.testing.assert_allclose(moved.values, base.values[perm], atol=1e-12)
    # law of the particle carrying label 0 does not depend on where it sits
    k = int(np.flatnonzero(perm == 0)[0])
    first, relabeled = [], []
    for r in range(300):
        ids_r = r * N + ids
        first.append(simulate_particles(N, a, 1.0, G16, 8, path_ids=ids_r).values[0, -1, -1])
        relabeled.append(simulate_particles(N, a[perm], 1.0, G16, 8,
                                            path_ids=ids_r[perm]).values[k, -1, -1])
    assert m_distance_sq(law_from_samples(first), law_from_samples(relabeled)) < 1e-12


def test_limit_zero_sheet_is_deterministic_part():
    lp = limit_process(0.3, 2.0, G16, SheetPath.zero(G16))
    assert np.all(lp.stochastic == 0)
    np.testing.assert_allclose(lp.values, 2 * np.vectorize(f)(-0.7 * np.multiply.outer(G16.t, G16.x)),
                               rtol=1e-13)


def test_limit_deterministic_part_goursat_identity():
    rng = np.random.default_rng(0)
    a, y = 0.5, 1.3
    g = GridSpec(2, 2, 8, 8)
    mean = limit_mean(a, y, g)
    for _ in range(20):
        i, j = rng.integers(1, 9, 2)
        t, x = g.t[i], g.x[j]
        integral, _ = dblquad(lambda v, u: y * f((a - 1) * u * v), 0, t, 0, x, epsabs=1e-13)
        assert mean[i, j] == pytest.approx(y + (a - 1) * integral, abs=1e-8)


def test_limit_process_convolution_by_hand():
    g = GridSpec(1, 1, 4, 5)
    sheet = sample_sheet(g, 3)
    lp = limit_process(0.2, 1.0, g, sheet)
    n, m = 3, 4
    s = sum(f(-(g.t[n] - g.t[k]) * (g.x[m] - g.x[l])) * sheet.increments[k, l]
            for k in range(n) for l in range(m))
    assert lp.stochastic[n, m] == pytest.approx(s, abs=1e-14)
    batch = limit_at(0.2, 1.0, g, sheet.increments[None], (n, m))
    assert batch[0] == pytest.approx(lp.values[n, m], abs=1e-14)
    assert convolution_kernel(g).shape == (4, 5)
    with pytest.raises(ArgumentError):
        limit_process(0.2, 1.0, G16, sheet)


def test_limit_moments():
    g = GridSpec(1, 1, 64, 64)
    M = 20000
    inc = sample_increments(g, 9, np.arange(M))
    v = limit_at(0.5, 1.0, g, inc, (64, 64))
    se = v.std(ddof=1) / math.sqrt(M)
    assert abs(v.mean() - f(-0.5)) < 3 * se
    iso, _ = dblquad(lambda b, u: f(-(1 - u) * (1 - b)) ** 2, 0, 1, 0, 1, epsabs=1e-12)
    var = v.var(ddof=1)
    c = v - v.mean()
    se_var = math.sqrt((np.mean(c ** 4) - var ** 2) / M)
    assert abs(var - iso) < 3 * se_var


def test_lattice_reconstruction_is_the_infinite_particle_limit():
    # as N grows, particle 1 approaches the lattice limit driven by the same sheet
    g = GridSpec(1, 1, 8, 8)
    gaps = []
    for N in (4, 64):
        part, _, lattice = chaos_samples(N, 0.5, 1.0, g, (8, 8), 400, seed=1)
        gaps.append(np.mean((part - lattice) ** 2))
    assert gaps[1] < gaps[0] / 8
    inc = sample_increments(g, 0, [0])
    # without noise the reconstruction is the lattice mean, i.e. a noise-free particle
    quiet = simulate_particles(1, [0.5], 1.0, g, 0, noise_scale=0).values[0, -1, -1]
    assert discrete_limit_at(0.5, 1.0, g, inc * 0, (8, 8))[0] == pytest.approx(quiet, abs=1e-13)


def test_chaos_gap_rows_and_determinism():
    rows = chaos_gap([2, 4, 8], 0.5, 1.0, G16, M=300, seed=3)
    assert [r.N for r in rows] == [2, 4, 8]
    assert all(r.distance_sq >= 0 and r.var_I > 0 and r.stderr > 0 for r in rows)
    again = chaos_gap([2, 4, 8], 0.5, 1.0, G16, M=300, seed=3)
    assert rows == again
    assert rows[2].var_I < rows[0].var_I
    with pytest.raises(ArgumentError):
        chaos_gap([4, 2], 0.5, 1.0, G16, M=10)
    with pytest.raises(ArgumentError):
        chaos_gap([2], 0.5, 1.0, G16, M=1)


def test_loglog_slope():
    N = np.array([5, 10, 20, 40])
    assert loglog_slope(N, 3.0 / N) == pytest.approx(-1.0)
    assert loglog_slope(N, N ** 0.5) == pytest.approx(0.5)
