import math

import numpy as np
import pytest
from scipy import stats as sps

from holodrift import brownian as bm
from holodrift import fls
from holodrift import hypgeom as hg


def harnack_grid_oracle(pair, n=1001):
    """Sup of the Poisson-kernel ratio over a base-pair grid; by rotation the
    boundary point can be fixed on the real axis."""
    r = math.tanh(pair.delta / 2)
    R = math.tanh(pair.delta_prime / 2)
    xs = np.linspace(-r, r, n)
    ys = np.linspace(-r, r, n)
    gx, gy = np.meshgrid(xs, ys)
    keep = gx * gx + gy * gy <= r * r
    p = gx[keep] + 1j * gy[keep]
    kern = (R * R - np.abs(p) ** 2) / np.abs(R - p) ** 2
    return float(kern.max() / kern.min())


class TestHarnack:
    def test_reference_pair(self):
        data = fls.harnack_constant(fls.BallPair(0.5, 1.0))
        assert data.C == pytest.approx(10.5967, abs=2e-3)
        oracle = harnack_grid_oracle(fls.BallPair(0.5, 1.0))
        assert abs(data.C - oracle) / oracle < 1e-6

    def test_twenty_pairs_against_grid(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            d = rng.uniform(0.05, 0.8)
            dp = d + rng.uniform(0.1, 0.8)
            data = fls.harnack_constant(fls.BallPair(d, dp))
            oracle = harnack_grid_oracle(fls.BallPair(d, dp))
            assert abs(data.C - oracle) / oracle < 1e-6

    def test_small_inner_ball_limit(self):
        assert fls.harnack_constant(fls.BallPair(1e-7, 1.0)).C == pytest.approx(
            1.0, abs=1e-5)

    def test_monotone_in_delta(self):
        cs = [fls.harnack_constant(fls.BallPair(d, 1.0)).C
              for d in np.linspace(0.05, 0.95, 12)]
        assert all(b > a for a, b in zip(cs, cs[1:]))

    def test_degenerate(self):
        with pytest.raises(fls.DegenerateBallsError):
            fls.BallPair(1.0, 0.5)


class TestKappa:
    def setup_method(self):
        self.pair = fls.BallPair(0.5, 1.0)
        self.data = fls.harnack_constant(self.pair)
        self.center = hg.HalfPlanePoint(0.0, 1.0)

    def on_circle(self, radius, ang):
        # point at hyperbolic distance from the center, along a disc direction
        r_euc = math.tanh(radius / 2)
        w = r_euc * complex(math.cos(ang), math.sin(ang))
        c = complex(0.0, 1.0)
        z = (c * 1 - w * c.conjugate() * 1) / (1 - w)  # inverse Cayley-type map
        z = (w * c.conjugate() - c) / (w - 1)
        return hg.HalfPlanePoint(z.real, z.imag)

    def test_center_entry_gives_inverse_harnack(self):
        exit_pt = self.on_circle(self.pair.delta_prime, 1.1)
        k = fls.kappa(self.center, self.center, exit_pt, self.data)
        assert k == pytest.approx(1.0 / self.data.C, abs=1e-9)

    def test_numeric_extremes(self):
        # sup/inf over entry positions on the inner sphere and exit angles
        C, r, R = self.data.C, self.data.r, self.data.R
        best, worst = -np.inf, np.inf
        for pr in np.linspace(0, r, 200):
            for sign in (-1.0, 1.0):
                p = sign * pr
                z = R  # exit aligned with the entry axis
                val = abs(z - p) ** 2 / (C * (R * R - p * p))
                best = max(best, val)
                worst = min(worst, val)
        assert best == pytest.approx(C ** -0.5, rel=1e-6)
        assert worst == pytest.approx(C ** -1.5, rel=1e-6)
        assert worst >= 1.0 / C ** 2 - 1e-12 and best <= 1.0 + 1e-12

    def test_geometry_errors(self):
        far = self.on_circle(self.pair.delta_prime * 1.5, 0.3)
        exit_pt = self.on_circle(self.pair.delta_prime, 0.0)
        with pytest.raises(hg.GeometryError):
            fls.kappa(self.center, far, exit_pt, self.data)
        inner = self.on_circle(self.pair.delta / 2, 0.0)
        with pytest.raises(hg.GeometryError):
            fls.kappa(self.center, inner, inner, self.data)

    def test_isometry_invariance(self):
        preset = hg.preset_surface("thrice_punctured")
        gamma = preset.word_matrix("bA")
        entry = self.on_circle(0.4, 0.7)
        exit_pt = self.on_circle(self.pair.delta_prime, 2.0)
        k0 = fls.kappa(self.center, entry, exit_pt, self.data)
        k1 = fls.kappa(gamma.apply(self.center), gamma.apply(entry),
                       gamma.apply(exit_pt), self.data)
        assert k1 == pytest.approx(k0, abs=1e-9)


@pytest.fixture(scope="module")
def small_ensemble():
    preset = hg.preset_surface("thrice_punctured")
    pair = fls.default_ball_pair(preset)
    params = bm.PathParams(seed=31)
    traces = fls.run_discretization_ensemble(params, preset, pair,
                                             k_target=15, n_paths=24,
                                             store_words=True)
    return preset, pair, params, traces


class TestDiscretization:
    def test_ladder_monotone_and_first_record(self, small_ensemble):
        preset, pair, params, traces = small_ensemble
        for tr in traces:
            tr.check_monotone()
            assert tr.s0 > 0
            assert tr.n[0] == 1
            assert tr.R[0] >= tr.s0

    def test_kappa_hard_bounds(self, small_ensemble):
        preset, pair, params, traces = small_ensemble
        C = fls.harnack_constant(pair).C
        for tr in traces:
            assert np.all(tr.kappa >= 1.0 / C ** 2)
            assert np.all(tr.kappa <= 1.0)

    def test_accepted_means_alpha_below_kappa(self, small_ensemble):
        _, _, _, traces = small_ensemble
        for tr in traces:
            acc = tr.alpha < tr.kappa
            assert np.array_equal(acc, tr.accepted)

    def test_word_changes_only_at_R(self, small_ensemble):
        # X words recorded per rung: the accepted product telescopes
        _, _, _, traces = small_ensemble
        for tr in traces:
            prod = ""
            acc_words = [w for w, a in zip(tr.words, tr.accepted) if a]
            for w, inc in zip(acc_words, tr.increments):
                prod = hg.word_product(prod, inc)
                assert prod == w

    def test_acceptance_rate_within_bounds(self, small_ensemble):
        _, pair, _, traces = small_ensemble
        C = fls.harnack_constant(pair).C
        rate = np.concatenate([tr.accepted for tr in traces]).mean()
        assert 1.0 / C ** 2 <= rate <= 1.0

    def test_reproducibility_bit_for_bit(self, small_ensemble):
        preset, pair, params, traces = small_ensemble
        again = fls.run_discretization(params, preset, pair, k_target=15,
                                       path_id=traces[0].path_id,
                                       store_words=True)
        t0 = traces[0]
        assert np.array_equal(t0.S, again.S)
        assert np.array_equal(t0.kappa, again.kappa)
        assert np.array_equal(t0.alpha, again.alpha)
        assert t0.words == again.words
        assert t0.increments == again.increments

    def test_increment_law_symmetry_hint(self, small_ensemble):
        # full symmetry is validated at acceptance scale; here each frequent
        # atom has its inverse present
        _, _, _, traces = small_ensemble
        law = fls.increment_law(traces)
        for w, f in law.items():
            if f > 0.02 and w:
                assert hg.word_inverse(w) in law

    def test_horizon_cap(self, small_ensemble):
        preset, pair, params, _ = small_ensemble
        with pytest.raises(fls.HorizonExceededError):
            fls.run_discretization(params, preset, pair, k_target=50,
                                   horizon=5.0)

    def test_validate_against_overlapping_balls(self):
        preset = hg.preset_surface("thrice_punctured")
        with pytest.raises(fls.DegenerateBallsError):
            fls.BallPair(0.5, 0.95).validate(preset)


class TestEstimateT:
    def test_insufficient_data(self, small_ensemble):
        _, _, _, traces = small_ensemble
        with pytest.raises(fls.InsufficientDataError):
            fls.estimate_T(traces)  # k=15 < 100
        with pytest.raises(fls.InsufficientDataError):
            fls.estimate_T(traces[:5])

    @pytest.mark.slow
    def test_time_convention_doubles_T(self):
        preset = hg.preset_surface("thrice_punctured")
        pair = fls.default_ball_pair(preset)
        out = {}
        for conv in ("laplacian", "half_laplacian"):
            params = bm.PathParams(seed=33, clock_convention=conv)
            traces = fls.run_discretization_ensemble(params, preset, pair,
                                                     k_target=30, n_paths=32)
            out[conv] = np.mean([tr.acc_S[-1] / tr.k for tr in traces])
        assert out["half_laplacian"] / out["laplacian"] == pytest.approx(2.0,
                                                                         rel=0.1)

    @pytest.mark.slow
    def test_dispersion_shrinks_with_k(self):
        preset = hg.preset_surface("thrice_punctured")
        pair = fls.default_ball_pair(preset)
        params = bm.PathParams(seed=34)
        traces = fls.run_discretization_ensemble(params, preset, pair,
                                                 k_target=120, n_paths=40)
        v30 = np.var([tr.acc_S[29] / 30 for tr in traces], ddof=1)
        v120 = np.var([tr.acc_S[119] / 120 for tr in traces], ddof=1)
        assert v120 / v30 < 0.7
        t_hat, t_err = fls.estimate_T(traces, k=120)
        assert t_hat - sps.norm.ppf(0.99) * t_err > 0
