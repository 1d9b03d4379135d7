import math

import numpy as np
import pytest

from detmart import configurations as cfg
from detmart import kernels as ker
from detmart import simulate as sim
from detmart import specfun
from detmart.errors import CapacityError, DomainError
from detmart.processes import bes, besq, bm, rw


def simple(*points):
    return cfg.PointConfiguration.from_points(points)


def ones(paths):
    return np.ones(paths.shape[0])


class TestSampleFree:
    def test_deterministic(self):
        a = sim.sample_free(bm(), [0.0, 1.0], [0.5, 1.0], 5000, seed=42)
        b = sim.sample_free(bm(), [0.0, 1.0], [0.5, 1.0], 5000, seed=42)
        assert (a.paths == b.paths).all()
        c = sim.sample_free(bm(), [0.0, 1.0], [0.5, 1.0], 5000, seed=43)
        assert not (a.paths == c.paths).all()

    def test_bm_mean(self):
        u = [0.3, 1.7]
        ens = sim.sample_free(bm(), u, [0.8], 100_000, seed=1)
        for j, uj in enumerate(u):
            vals = ens.paths[:, 0, j]
            se = vals.std(ddof=1) / math.sqrt(len(vals))
            assert abs(vals.mean() - uj) <= 4 * se

    def test_besq_mean(self):
        nu, x0, t = 0.5, 1.2, 0.9
        ens = sim.sample_free(besq(nu), [x0], [t], 100_000, seed=2)
        vals = ens.paths[:, 0, 0]
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean() - (x0 + 2 * (nu + 1) * t)) <= 4 * se
        assert (vals >= 0).all()

    def test_rw_parity(self):
        ens = sim.sample_free(rw(), [0, 2], [1, 2, 5], 2000, seed=3)
        for m, t in enumerate(ens.times):
            assert ((ens.paths[:, m, :] - np.array([0, 2])) % 2 == t % 2).all()

    def test_besq_marginal_matches_density(self):
        # histogram check against the exact transition density; the bin
        # mass is integrated in u = sqrt(y) where the nu < 0 density is finite
        nu, x0, t = -0.3, 2.0, 0.7
        ens = sim.sample_free(besq(nu), [x0], [t], 200_000, seed=4)
        vals = ens.paths[:, 0, 0]
        edges = np.linspace(0.0, 10.0, 21)
        hist, _ = np.histogram(vals, bins=edges)
        n = len(vals)
        for i in range(len(edges) - 1):
            grid = np.linspace(math.sqrt(edges[i]), math.sqrt(edges[i + 1]), 201)
            grid[grid == 0.0] = 1e-12  # u = 0 limit of 2 u * density is 0
            dens = specfun.transition_density(besq(nu), t, grid * grid, x0) * 2 * grid
            p = float(np.trapezoid(dens, grid))
            se = math.sqrt(max(p * (1 - p), 1e-12) / n)
            assert abs(hist[i] / n - p) <= 5 * se + 1e-4


class TestCompanions:
    def test_companion_zero_at_time_zero(self):
        ens = sim.sample_free(bm(), [0.0], [0.0, 1.0], 100, seed=5)
        ens = sim.attach_companions(ens, seed2=6)
        assert (ens.companions[:, 0, 0] == 0.0).all()

    def test_independence(self):
        ens = sim.sample_free(bm(), [0.0], [1.0], 50_000, seed=7)
        ens = sim.attach_companions(ens, seed2=8)
        a = ens.paths[:, 0, 0]
        b = ens.companions[:, 0, 0]
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) <= 4 / math.sqrt(len(a))

    def test_rw_companion_variance(self):
        t = 3
        ens = sim.sample_free(rw(), [0], [t], 50_000, seed=9)
        ens = sim.attach_companions(ens, seed2=10)
        w = ens.companions[:, 0, 0]
        var = w.var(ddof=1)
        se = np.var(w**2, ddof=1) ** 0.5 / math.sqrt(len(w))
        assert abs(var - t) <= 4 * se


class TestDetWeight:
    def test_normalization_bm(self):
        xi = simple(-1.0, 0.0, 1.5)
        est = sim.dmr_expectation(bm(), xi, ones, [1.0], 100_000, seed=11)
        assert abs(est.mean - 1.0) <= 4 * est.std_error

    def test_normalization_rw(self):
        xi = simple(0.0, 2.0, 4.0, 6.0)
        est = sim.dmr_expectation(rw(), xi, ones, [3], 100_000, seed=12)
        assert abs(est.mean - 1.0) <= 4 * est.std_error

    def test_normalization_besq(self):
        xi = simple(0.5, 2.0)
        est = sim.dmr_expectation(besq(0.5), xi, ones, [1.0], 100_000, seed=13)
        assert abs(est.mean - 1.0) <= 4 * est.std_error


class TestBruteForce:
    def test_symmetric_mean_zero(self):
        xi = simple(0.0)
        free, doob = sim.brute_force_rw(xi, lambda p: p[:, 0, 0], [1])
        assert free == pytest.approx(0.0, abs=1e-15)

    def test_doob_total_mass(self):
        xi = simple(0.0, 2.0)
        free, doob = sim.brute_force_rw(xi, ones, [2], T=2)
        assert doob == pytest.approx(1.0, abs=1e-13)
        assert free == pytest.approx(1.0, abs=1e-13)

    def test_free_weighted_equals_doob(self):
        xi = simple(0.0, 2.0)
        rng = np.random.default_rng(33)
        for trial in range(5):
            table = {}

            def F(p, table=table, rng=rng):
                # bounded symmetric function: random per-site values
                out = np.ones(p.shape[0])
                for m in range(p.shape[1]):
                    for j in range(p.shape[2]):
                        key_arr = p[:, m, j].astype(int)
                        vals = np.array(
                            [
                                table.setdefault((m, k), rng.uniform(0.2, 1.0))
                                for k in key_arr
                            ]
                        )
                        out *= vals
                return out

            free, doob = sim.brute_force_rw(xi, F, [2, 4], T=4)
            assert free == pytest.approx(doob, abs=1e-12)

    def test_capacity_bound(self):
        xi = simple(0.0, 2.0, 4.0)
        with pytest.raises(CapacityError):
            sim.brute_force_rw(xi, ones, [9], T=9)


class TestDmrAgainstEnumeration:
    def test_occupancy_probability(self):
        xi = simple(0.0, 2.0)

        def F(p):
            return ((p[:, 0, 0] == 0) & (p[:, 0, 1] == 2)).astype(float)

        _, exact = sim.brute_force_rw(xi, F, [2], T=2)
        est = sim.dmr_expectation(rw(), xi, F, [2], 100_000, seed=14, T=2)
        assert abs(est.mean - exact) <= 4 * est.std_error


class TestCpr:
    def test_unit_mean_bm(self):
        xi = simple(-1.0, 1.0)
        est = sim.cpr_expectation(bm(), xi, ones, [1.0], 50_000, seed=15)
        assert abs(est.mean.real - 1.0) <= 4 * est.std_error
        assert abs(est.mean.imag) <= 4 * est.std_error_imag

    def test_unit_mean_rw(self):
        xi = simple(0.0, 2.0)
        est = sim.cpr_expectation(rw(), xi, ones, [2], 20_000, seed=16)
        assert abs(est.mean.real - 1.0) <= 4 * est.std_error
        assert abs(est.mean.imag) <= 4 * est.std_error_imag

    def test_unit_mean_bes(self):
        xi = simple(1.0, 2.5)
        est = sim.cpr_expectation(bes(0.5), xi, ones, [0.8], 20_000, seed=17)
        assert abs(est.mean.real - 1.0) <= 4 * est.std_error
        assert abs(est.mean.imag) <= 4 * est.std_error_imag

    def test_rw_cpr_matches_dmr(self):
        xi = simple(0.0, 2.0)

        def F(p):
            return ((p[:, 0, 0] == 0) & (p[:, 0, 1] == 2)).astype(float)

        a = sim.cpr_expectation(rw(), xi, F, [2], 30_000, seed=18)
        b = sim.dmr_expectation(rw(), xi, F, [2], 30_000, seed=19)
        assert abs(a.mean.real - b.mean) <= 4 * a.combined_se(b)


class TestNoncollidingRw:
    def test_single_particle_free_law(self):
        xi = simple(0.0)
        ens = sim.sample_noncolliding_rw(xi, [2], 50_000, seed=20)
        vals = ens.paths[:, 0, 0]
        for site, p in ((-2, 0.25), (0, 0.5), (2, 0.25)):
            freq = float((vals == site).mean())
            se = math.sqrt(p * (1 - p) / len(vals))
            assert abs(freq - p) <= 4 * se

    def test_ordering_always(self):
        xi = simple(0.0, 2.0)
        ens = sim.sample_noncolliding_rw(xi, [1, 2, 3, 4], 20_000, seed=21)
        assert (np.diff(ens.paths, axis=2) > 0).all()

    def test_step_weights_sum_to_one(self):
        # harmonicity of the Vandermonde factor, state by state
        import itertools

        for state in ([0, 2], [-2, 4], [0, 2, 4], [-4, 0, 6]):
            state = np.array(state, dtype=float)
            n = len(state)
            h_old = cfg.vandermonde(state)
            total = 0.0
            for eps in itertools.product((-1, 1), repeat=n):
                h_new = cfg.vandermonde(state + np.array(eps))
                total += max(h_new, 0.0) / (2.0**n * h_old)
            assert abs(total - 1.0) <= 1e-12

    def test_marginal_matches_enumeration(self):
        xi = simple(0.0, 2.0)
        ens = sim.sample_noncolliding_rw(xi, [2], 100_000, seed=22)
        states = [(-2, 0), (-2, 2), (-2, 4), (0, 2), (0, 4), (2, 4)]
        for a, b in states:

            def F(p, a=a, b=b):
                return ((p[:, 0, 0] == a) & (p[:, 0, 1] == b)).astype(float)

            _, exact = sim.brute_force_rw(xi, F, [2], T=2)
            freq = float(
                ((ens.paths[:, 0, 0] == a) & (ens.paths[:, 0, 1] == b)).mean()
            )
            se = math.sqrt(max(exact * (1 - exact), 1e-12) / ens.n_paths)
            assert abs(freq - exact) <= 4 * se + 1e-6


class TestNoncollidingDiffusion:
    def test_ordering_preserved(self):
        xi = simple(0.0, 2.0)
        ens = sim.sample_noncolliding(bm(), xi, [0.25, 0.5], 0.002, 2000, seed=23)
        assert (np.diff(ens.paths, axis=2) > 0).all()

    def test_single_particle_marginal_ks(self):
        xi = simple(0.0)
        t = 1.0
        ens = sim.sample_noncolliding(bm(), xi, [t], 0.01, 100_000, seed=24)
        vals = np.sort(ens.paths[:, 0, 0])
        grid = np.arange(1, len(vals) + 1) / len(vals)
        cdf = 0.5 * (1.0 + np.array([math.erf(v / math.sqrt(2 * t)) for v in vals]))
        ks = float(np.max(np.abs(grid - cdf)))
        assert ks <= 1.63 / math.sqrt(len(vals))  # 1% level

    def test_smooth_observable_matches_quadrature(self):
        xi = simple(0.0, 2.0)
        t, dt = 0.5, 5e-4
        ens = sim.sample_noncolliding(bm(), xi, [t], dt, 40_000, seed=25)

        def F(p):
            return np.exp(-0.25 * (p[:, 0, 0] ** 2 + p[:, 0, 1] ** 2))

        vals = F(ens.sorted_positions())
        se = vals.std(ddof=1) / math.sqrt(len(vals))

        # quadrature of the h-transform density over the ordered sector
        nodes, weights = np.polynomial.legendre.leggauss(160)
        lo, hi = -4.0, 6.0
        xs = 0.5 * (hi - lo) * nodes + 0.5 * (lo + hi)
        w = 0.5 * (hi - lo) * weights
        u = [0.0, 2.0]
        total = 0.0
        for i, x1 in enumerate(xs):
            dens = np.array(
                [
                    ker.correlation(
                        ker.general_kernel(bm(), xi),
                        ker.SpaceTimeQuery((t,), ((x1, x2),)),
                    )
                    if x2 > x1
                    else 0.0
                    for x2 in xs
                ]
            )
            total += w[i] * float(
                w @ (dens * np.exp(-0.25 * (x1**2 + xs**2)))
            )
        assert abs(vals.mean() - total) <= 4 * se + 2 * dt

    def test_besq_ordering_and_positivity(self):
        xi = simple(1.0, 4.0)
        ens = sim.sample_noncolliding(besq(0.5), xi, [0.5], 0.002, 2000, seed=26)
        assert (ens.paths >= 0).all()
        assert (np.diff(ens.paths, axis=2) > 0).all()


class TestOptionalStopping:
    def test_horizon_consistency(self):
        xi = simple(0.0, 2.0)

        def F(p):
            return np.tanh(p[:, 0, 0] + p[:, 0, 1])

        a = sim.dmr_expectation(bm(), xi, F, [0.8], 60_000, seed=27)
        b = sim.dmr_expectation(bm(), xi, F, [0.8], 60_000, seed=28, T=1.6)
        assert abs(a.mean - b.mean) <= 4 * a.combined_se(b)


class TestReducibility:
    def test_full_size_sanity(self):
        xi = simple(0.0, 2.0)

        def F(p):
            return np.exp(-np.abs(p).sum(axis=(1, 2)) / 4.0)

        lhs, rhs = sim.reducibility_check(bm(), xi, 2, F, 0.7, 30_000, seed=29)
        assert abs(lhs.mean - rhs.mean) <= 4 * lhs.combined_se(rhs)

    def test_bm_two_to_one(self):
        xi = simple(0.0, 2.0)

        def F(p):
            return np.tanh(p[:, 0, 0])

        lhs, rhs = sim.reducibility_check(bm(), xi, 1, F, 0.7, 60_000, seed=30)
        assert abs(lhs.mean - rhs.mean) <= 4 * lhs.combined_se(rhs)


class TestDmrVsInteractingSampler:
    def test_bm_two_particles(self):
        xi = simple(0.0, 2.0)
        t = 0.5

        def F(p):
            return np.exp(-0.25 * (p[:, 0, 0] ** 2 + p[:, 0, 1] ** 2))

        a = sim.dmr_expectation(bm(), xi, F, [t], 60_000, seed=31)
        ens = sim.sample_noncolliding(bm(), xi, [t], 5e-4, 40_000, seed=32)
        vals = F(ens.sorted_positions())
        b = sim.Estimate.from_samples(vals)
        assert abs(a.mean - b.mean) <= 4 * a.combined_se(b) + 2 * 5e-4
