import math

import numpy as np
import pytest

from holodrift import brownian as bm
from holodrift import hypgeom as hg
from holodrift import paths
from holodrift import wordstats as ws


class TestWordLengthProcess:
    def test_constant_in_base_tile(self):
        series = ws.word_length_process([])
        assert series.lengths.tolist() == [0]
        assert series.length_at(5.0) == 0

    def test_out_and_back(self):
        series = ws.word_length_process([(1.0, "a"), (2.0, "A")])
        assert series.lengths.tolist() == [0, 1, 0]

    def test_final_length_matches_scratch_reduction(self):
        rng = np.random.default_rng(0)
        letters = [(float(t), g) for t, g in
                   zip(np.sort(rng.uniform(0, 10, 60)),
                       rng.choice(list("aAbB"), 60))]
        series = ws.word_length_process(letters)
        scratch = hg.word_reduce("".join(g for _, g in letters))
        assert series.lengths[-1] == len(scratch)

    def test_single_step_changes(self):
        with pytest.raises(ValueError):
            ws.WordLengthSeries(np.array([0.0, 1.0]), np.array([0, 2]))

    def test_running_inf_exact_on_steps(self):
        series = ws.WordLengthSeries(np.array([0.0, 10.0]),
                                     np.array([0, 1]))
        # level 0 up to t=10: infimum hits zero immediately after e^2
        assert series.running_inf_ratio(20.0) == 0.0
        series = ws.WordLengthSeries(np.array([0.0]), np.array([3]))
        got = series.running_inf_ratio(50.0)
        assert got == pytest.approx(3 / (50 * math.log(50)))


class TestLoopDecomposition:
    def test_pure_powers(self):
        assert ws.decompose_loop_word("bA" * 4, "bA") == ws.LoopDecomposition(4, 0)
        inv = hg.word_inverse("bA") * 2
        assert ws.decompose_loop_word(inv, "bA").power == -2

    def test_rotated_power_with_partial(self):
        gamma = "Ab" * 3 + "A"
        dec = ws.decompose_loop_word(gamma, "bA")
        assert dec is not None and dec.power == 3 and dec.partial == 1

    def test_empty(self):
        assert ws.decompose_loop_word("", "bA") == ws.LoopDecomposition(0, 0)

    def test_non_loop(self):
        assert ws.decompose_loop_word("ab", "bA") is None


class TestSubadditivity:
    def test_zero_violations_on_random_words(self):
        rng = np.random.default_rng(1)
        words = [hg.word_reduce("".join(rng.choice(list("aAbB"), size=n)))
                 for n in rng.integers(0, 30, 60)]
        assert ws.subadditivity_audit(words, 3000) == 0

    def test_degenerate_triple(self):
        assert ws.subadditivity_audit(["ab"], 100) == 0


@pytest.fixture(scope="module")
def surface_run():
    preset = hg.preset_surface("thrice_punctured")
    params = bm.PathParams(seed=61)
    grid = np.array([10.0, 20.0, 40.0, 60.0, 80.0])
    cfg = paths.WalkConfig(preset=preset, params=params, horizon=80.0,
                           track_cusps=True, t_grid=grid,
                           record_crossings=True)
    results = paths.run_walks(cfg, 61, 120)
    return preset, grid, results


class TestOnSurfaceRuns:
    def test_grid_lengths_and_words_consistent(self, surface_run):
        preset, grid, results = surface_run
        L, words = ws.grid_lengths(results, grid)
        assert L.shape == (len(results), grid.size)
        for i in (0, 5, 17):
            for j in range(grid.size):
                assert L[i, j] == len(words[i][j])

    def test_series_vs_grid(self, surface_run):
        preset, grid, results = surface_run
        L, _ = ws.grid_lengths(results, grid)
        for i in (0, 3):
            series = ws.word_length_process_from_crossings(results[i])
            for j, t in enumerate(grid):
                assert int(series.length_at(t)) == L[i, j]

    def test_subadditivity_on_tiles(self, surface_run):
        _, grid, results = surface_run
        _, words = ws.grid_lengths(results, grid)
        pool = [w for row in words[:30] for w in row]
        assert ws.subadditivity_audit(pool, 2000) == 0

    def test_excursion_decompositions_exact(self, surface_run):
        preset, _, results = surface_run
        report = ws.excursion_word_stats(results, preset)
        assert len(report.loop_counts) > 500
        assert report.decomposition_failures == 0
        assert report.power_mismatches == 0

    def test_loop_count_heavy_tail(self, surface_run):
        preset, _, results = surface_run
        report = ws.excursion_word_stats(results, preset)
        # no finite mean: the empirical mean grows with the sample while the
        # median stays put
        n = np.abs(report.loop_counts)
        half = n[: n.size // 2]
        assert np.median(n) <= 2
        assert n.mean() > 3 * np.median(np.maximum(n, 1e-9)) or n.mean() > 2
        prof = ws.loop_tail_profile(n, [5, 10, 20])
        a = ws.cauchy_parameter(preset.cusps[0])
        expect = a / math.pi ** 2
        assert np.all(prof > expect / 2) and np.all(prof < expect * 2)

    def test_big_loop_average_stabilizes(self, surface_run):
        preset, _, results = surface_run
        report = ws.excursion_word_stats(results, preset)
        rel = []
        for avg in report.big_loop_series:
            if avg.size >= 40:
                rel.append(abs(avg[-1] - avg[avg.size // 2])
                           / max(avg[avg.size // 2], 1e-9))
        assert np.median(rel) < 0.25

    def test_sum_ratio_near_theory(self, surface_run):
        preset, _, results = surface_run
        report = ws.excursion_word_stats(results, preset)
        med = np.median(report.sum_ratio)
        assert 0.3 < med < 3.0

    def test_exact_identity_in_detail_mode(self):
        preset = hg.preset_surface("thrice_punctured")
        params = bm.PathParams(seed=62)
        cfg = paths.WalkConfig(preset=preset, params=params, horizon=30.0,
                               track_cusps=True, record_excursion_detail=True)
        results = paths.run_walks(cfg, 62, 10)
        checked = 0
        for res in results:
            for e in res.excursions:
                if not e.detail:
                    continue
                loop = preset.cusps[e.cusp].loop_word
                width = preset.cusps[e.cusp].width
                anchor = None
                for t, word, lift in e.detail:
                    if anchor is None:
                        anchor = lift
                        word_u = word
                        continue
                    gamma = hg.word_product(hg.word_inverse(word_u), word)
                    dec = ws.decompose_loop_word(gamma, loop)
                    assert dec is not None
                    theta_turns = (lift - anchor) / width
                    letters = dec.power * len(loop) + dec.partial
                    turns_from_word = letters / len(loop) * np.sign(
                        dec.power if dec.power else 1)
                    assert abs(theta_turns - dec.power) <= 1.0 + 1e-9
                    if dec.partial == 0 and abs(theta_turns - round(theta_turns)) < 0.499:
                        assert round(theta_turns) == dec.power
                    checked += 1
        assert checked > 50


class TestTrend:
    def test_prob_trend_math(self):
        class Res:
            def __init__(self, pid, grid):
                self.path_id = pid
                self.grid = grid

        # synthetic: ratios shrink between the two times for most paths
        results = []
        for i in range(100):
            l1 = 40 + i % 17
            l2 = 30 + i % 11
            results.append(Res(i, [(50.0, l1, "a" * l1), (400.0, l2, "a" * l2)]))
        p1, p2, z = ws.prob_trend(results, 50.0, 400.0, c=0.2)
        assert 0 <= p1 <= p2 <= 1
        assert z > 0

    def test_pilot_constant(self):
        class Res:
            def __init__(self, pid, val):
                self.path_id = pid
                self.grid = [(50.0, val, "a" * val)]

        results = [Res(i, 10 + i) for i in range(100)]
        c = ws.pilot_constant(results, 50.0, 0.5)
        g = 50 * math.log(50)
        assert c == pytest.approx(np.quantile([(10 + i) / g for i in range(100)], 0.5))

    def test_ratio_diagnostics_requires_paths(self):
        with pytest.raises(ws.InsufficientDataError):
            ws.ratio_diagnostics([], [10.0, 20.0])
