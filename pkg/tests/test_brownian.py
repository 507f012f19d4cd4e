import math

import numpy as np
import pytest
from scipy import stats as sps

from holodrift import brownian as bm
from holodrift import hypgeom as hg
from holodrift import paths, rng as hrng


def zero_noise_state(start, params):
    state = bm.initial_state(params, start)
    state.stream._buf[:] = 0.0
    return state


class TestParams:
    def test_base_dt(self):
        p = bm.PathParams(max_step=0.05, seed=0)
        assert p.base_dt == pytest.approx(0.05 ** 2 / 4)

    def test_validation(self):
        with pytest.raises(ValueError):
            bm.PathParams(max_step=-1, seed=0)
        with pytest.raises(ValueError):
            bm.PathParams(seed=0, clock_convention="ito")


class TestBmStep:
    def test_zero_noise_advances_clock_only(self):
        p = bm.PathParams(seed=0)
        state = zero_noise_state(hg.HalfPlanePoint(0.3, 1.7), p)
        out = bm.bm_step(state, p)
        assert out.position == state.position
        assert out.clock == pytest.approx(p.base_dt)

    @pytest.mark.parametrize("convention,factor", [("laplacian", 2.0),
                                                   ("half_laplacian", 1.0)])
    def test_increment_variance(self, convention, factor):
        p = bm.PathParams(seed=42, clock_convention=convention)
        gen = hrng.substream(7, 0, hrng.NOISE)
        stream = hrng.NormalStream(gen)
        n = 100_000
        dxs = np.empty(n)
        for i in range(n):
            state = bm.WienerState(hg.HalfPlanePoint(0.0, 1.0), 0.0, stream)
            dxs[i] = bm.bm_step(state, p).position.x
        var = dxs.var()
        expect = factor * p.base_dt
        se = expect * math.sqrt(2.0 / n)
        assert abs(var - expect) <= 3 * se

    def test_determinism(self):
        p = bm.PathParams(seed=5)
        runs = []
        for _ in range(2):
            state = bm.initial_state(p, hg.HalfPlanePoint(0.0, 1.0))
            for _ in range(500):
                state = bm.bm_step(state, p)
            runs.append((state.position.x, state.position.y, state.clock))
        assert runs[0] == runs[1]

    def test_quadratic_variation(self):
        p = bm.PathParams(seed=6)
        state = bm.initial_state(p, hg.HalfPlanePoint(0.0, 1.0))
        qx = qy = 0.0
        for _ in range(20_000):
            nxt = bm.bm_step(state, p)
            dx = nxt.position.x - state.position.x
            dy = nxt.position.y - state.position.y
            qx += dx * dx / (2 * state.position.y ** 2)
            qy += dy * dy / (2 * state.position.y ** 2)
            state = nxt
        assert qx == pytest.approx(state.clock, rel=0.05)
        assert qy == pytest.approx(state.clock, rel=0.05)


def disc_angle(center, p):
    z = complex(p.x, p.y)
    c = complex(center.x, center.y)
    return np.angle((z - c) / (z - c.conjugate()))


def exit_sample(center, radius, params, n, first_id=0):
    angles = np.empty(n)
    times = np.empty(n)
    for i in range(n):
        state = bm.initial_state(params, center, path_index=first_id + i)
        out, hit = bm.run_until_circle(state, center, radius, params)
        assert hit
        angles[i] = disc_angle(center, out.position)
        times[i] = out.clock
    return angles, times


class TestRunUntilCircle:
    def test_immediate_hit_on_circle(self):
        p = bm.PathParams(seed=1)
        center = hg.HalfPlanePoint(0.0, 1.0)
        start = hg.HalfPlanePoint(0.0, math.e)  # distance exactly 1
        state = bm.initial_state(p, start)
        out, hit = bm.run_until_circle(state, center, 1.0, p)
        assert hit and out.clock == 0.0 and out.position == start

    def test_hit_position_on_circle(self):
        p = bm.PathParams(seed=2)
        center = hg.HalfPlanePoint(0.0, 1.0)
        state = bm.initial_state(p, center)
        out, hit = bm.run_until_circle(state, center, 0.8, p)
        assert hit
        assert hg.hyp_distance(out.position, center) == pytest.approx(0.8, abs=1e-6)

    def test_horizon_miss(self):
        p = bm.PathParams(seed=3)
        center = hg.HalfPlanePoint(0.0, 1.0)
        state = bm.initial_state(p, center)
        out, hit = bm.run_until_circle(state, center, 6.0, p, horizon=0.05)
        assert not hit and out.clock >= 0.05

    def test_exit_angle_uniform(self):
        p = bm.PathParams(seed=4)
        center = hg.HalfPlanePoint(0.0, 1.0)
        angles, _ = exit_sample(center, 1.0, p, 2500)
        counts, _ = np.histogram(angles, bins=20, range=(-math.pi, math.pi))
        stat = sps.chisquare(counts)
        assert stat.pvalue > 0.01

    def test_exit_law_isometry_invariant(self):
        p = bm.PathParams(seed=5)
        preset = hg.preset_surface("thrice_punctured")
        gamma = preset.word_matrix("ab")
        c1 = hg.HalfPlanePoint(0.0, 1.0)
        c2 = gamma.apply(c1)
        a1, t1 = exit_sample(c1, 1.0, p, 2500, first_id=0)
        a2, t2 = exit_sample(c2, 1.0, p, 2500, first_id=10_000)
        assert t1.mean() / t2.mean() == pytest.approx(1.0, abs=0.05)
        ks = sps.ks_2samp(a1, a2)
        assert ks.pvalue > 0.01


class TestWindingAngle:
    def chart(self, width=2.0, inner=2.2, outer=1.2):
        return hg.CuspChart("c", hg.RealMoebius.identity(), width, inner,
                            outer, "a", (hg.RealMoebius.identity(),))

    def test_radial_segment(self):
        ys = np.linspace(1.3, 2.0, 50)
        xs = np.full_like(ys, 0.25)
        assert bm.winding_angle(xs, ys, self.chart()) == pytest.approx(0.0)

    def test_one_deck_loop(self):
        chart = self.chart()
        xs = np.linspace(0.0, chart.width, 200)
        ys = np.full_like(xs, 1.5)
        assert bm.winding_angle(xs, ys, chart) == pytest.approx(2 * math.pi)

    def test_too_coarse(self):
        chart = self.chart()
        xs = np.array([0.0, 0.5 * chart.width + 0.01, chart.width])
        ys = np.full_like(xs, 1.5)
        with pytest.raises(bm.StepTooCoarseError):
            bm.winding_angle(xs, ys, chart)

    def test_outside_horodisc_rejected(self):
        chart = self.chart()
        xs = np.array([0.0, 0.1])
        ys = np.array([1.5, 0.3])
        with pytest.raises(ValueError):
            bm.winding_angle(xs, ys, chart)


class TestExcursions:
    def charts(self):
        return [hg.CuspChart("c", hg.RealMoebius.identity(), 2.0, 2.2, 1.2,
                             "a", (hg.RealMoebius.identity(),))]

    def test_no_visit_empty(self):
        ts = np.linspace(0, 1, 100)
        xs = np.zeros_like(ts)
        ys = np.full_like(ts, 0.8)
        out = bm.excursions(ts, xs, ys, self.charts())
        assert out.times == ()

    def test_single_pair(self):
        ts = np.array([0.0, 1.0, 2.0, 3.0])
        xs = np.zeros_like(ts)
        ys = np.array([1.0, 2.5, 2.6, 1.0])
        out = bm.excursions(ts, xs, ys, self.charts())
        assert len(out.times) == 1
        u, v, cusp = out.times[0]
        assert 0.0 < u < 1.0 and 2.0 < v < 3.0 and cusp == 0

    def test_must_start_outside_inner(self):
        ts = np.array([0.0, 1.0])
        xs = np.zeros_like(ts)
        ys = np.array([3.0, 1.0])
        with pytest.raises(ValueError):
            bm.excursions(ts, xs, ys, self.charts())

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            bm.ExcursionTimes(((1.0, 0.5, 0),))

    def test_first_entry_tail_decays_exponentially(self):
        # survival-curve regression on the first inner-horodisc hit
        preset = hg.preset_surface("thrice_punctured")
        params = bm.PathParams(seed=11)
        cfg = paths.WalkConfig(preset=preset, params=params, horizon=40.0,
                               track_cusps=True)
        results = paths.run_walks(cfg, 11, 200)
        u1 = np.array([res.excursions[0].t_u for res in results
                       if res.excursions])
        assert u1.size >= 150
        ts = np.quantile(u1, np.linspace(0.3, 0.9, 8))
        surv = np.array([np.mean(u1 >= t) for t in ts])
        fit = sps.linregress(ts, np.log(surv))
        assert fit.slope < 0
        # positive decay rate at 95% confidence
        assert fit.slope + 1.96 * fit.stderr < 0


class TestWindingLaw:
    def test_cauchy_ks_small(self):
        params = bm.PathParams(seed=7)
        a = math.log(5.0)
        theta = bm.winding_exit_samples(a, 4000, params, master_seed=123)
        ks = sps.kstest(theta, lambda x: bm.cauchy_cdf(x, a)).statistic
        assert ks < 0.03

    def test_conformally_equivalent_chart_same_law(self):
        # independent strip runner at width 2 with the same modulus
        a = math.log(5.0)
        params = bm.PathParams(seed=8)
        lib = bm.winding_exit_samples(a, 3000, params, master_seed=5)

        width = 2.0
        dlev = a * width / (2 * math.pi)
        gens = [hrng.substream(99, i, hrng.NOISE) for i in range(3000)]
        batch = hrng.NormalBatch(gens)
        x = np.zeros(3000)
        y = np.full(3000, 1.0 + dlev)
        alive = np.ones(3000, dtype=bool)
        s = math.sqrt(params.noise_factor * params.base_dt)
        while alive.any():
            idx = np.flatnonzero(alive)
            yi = y[idx]
            xi1, xi2 = batch.pairs(idx)
            y1 = yi * (1.0 + s * xi2)
            dx = s * yi * xi1
            x1 = x[idx] + dx
            crossed = y1 <= 1.0
            if crossed.any():
                frac = (yi[crossed] - 1.0) / (yi[crossed] - y1[crossed])
                x1[crossed] = x[idx][crossed] + frac * dx[crossed]
                alive[idx[crossed]] = False
            x[idx] = x1
            y[idx] = np.clip(y1, 1e-12, None)
        other = 2 * math.pi * x / width
        ks = sps.ks_2samp(lib, other)
        assert ks.pvalue > 0.01

    def test_determinism(self):
        params = bm.PathParams(seed=9)
        t1 = bm.winding_exit_samples(1.0, 500, params, master_seed=1)
        t2 = bm.winding_exit_samples(1.0, 500, params, master_seed=1)
        assert np.array_equal(t1, t2)
