"""Word-length observables of surface walks: the homotopic length process,
ratio diagnostics against t*log(t), horodisc-excursion statistics, and the
subadditivity audit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hypgeom import SurfacePreset, cauchy_parameter, word_inverse, word_product, word_reduce

E_SQUARED = math.e ** 2


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class WordLengthSeries:
    """Step function of the reduced tile-word length along one path."""

    times: np.ndarray
    lengths: np.ndarray
    surface: str = ""
    seed: int | None = None

    def __post_init__(self) -> None:
        if np.any(np.abs(np.diff(self.lengths)) > 1):
            raise ValueError("length must change by at most 1 per tile event")

    def length_at(self, t) -> np.ndarray:
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        return self.lengths[np.maximum(idx, 0)]

    def running_inf_ratio(self, t_end: float, t_start: float = E_SQUARED) -> float:
        """Infimum of L_t/(t log t) over [t_start, t_end].

        Exact on the step function: within an event interval the ratio is
        decreasing, so the infimum sits at interval right ends.
        """
        g = lambda t: t * math.log(t)
        best = math.inf
        times = self.times
        for i in range(len(times)):
            lo = max(float(times[i]), t_start)
            hi = float(times[i + 1]) if i + 1 < len(times) else t_end
            hi = min(hi, t_end)
            if hi <= lo or hi <= t_start:
                continue
            best = min(best, self.lengths[i] / g(hi))
            if best == 0.0:
                return 0.0
        return best


def word_length_process(events, surface: str = "", seed: int | None = None) -> WordLengthSeries:
    """Build the length series from a stream of (time, crossing letter)."""
    times = [0.0]
    lengths = [0]
    word: list[str] = []
    for t, g in events:
        if word and word[-1] == g.swapcase():
            word.pop()
        else:
            word.append(g)
        times.append(float(t))
        lengths.append(len(word))
    return WordLengthSeries(np.array(times), np.array(lengths, dtype=np.int64),
                            surface, seed)


# ---------------------------------------------------------------------------
# ratio diagnostics

@dataclass(frozen=True)
class RatioDiagnostics:
    t_grid: np.ndarray
    ratios: np.ndarray            # paths x t
    quantiles: dict               # q -> array over t
    prob_below: dict              # C -> array over t
    running_inf: np.ndarray       # per path, over [e^2, horizon]
    running_inf_half: np.ndarray  # per path, over [e^2, horizon/2]


def grid_lengths(results, t_grid) -> tuple[np.ndarray, list]:
    """Word lengths and word snapshots at the grid times, paths x t."""
    t_grid = np.asarray(t_grid, dtype=float)
    L = np.zeros((len(results), t_grid.size), dtype=np.int64)
    words = []
    for i, res in enumerate(results):
        got = {round(g[0], 9): g for g in res.grid}
        row = []
        for j, t in enumerate(t_grid):
            g = got.get(round(float(t), 9))
            if g is None:
                raise InsufficientDataError(f"path {res.path_id} has no sample at t={t}")
            L[i, j] = g[1]
            row.append(g[2])
        words.append(row)
    return L, words


def ratio_diagnostics(
    results,
    t_grid,
    c_values=(),
    quantile_levels=(0.1, 0.25, 0.5, 0.75, 0.9),
) -> RatioDiagnostics:
    if len(results) < 100:
        raise InsufficientDataError("need at least 100 paths for ratio diagnostics")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= math.e):
        raise ValueError("ratio grid must start above e")
    L, _ = grid_lengths(results, t_grid)
    g = t_grid * np.log(t_grid)
    ratios = L / g[None, :]
    quants = {q: np.quantile(ratios, q, axis=0) for q in quantile_levels}
    probs = {c: (ratios <= c).mean(axis=0) for c in c_values}
    horizon = float(t_grid[-1])
    run_full = np.empty(len(results))
    run_half = np.empty(len(results))
    for i, res in enumerate(results):
        series = word_length_process_from_crossings(res)
        run_full[i] = series.running_inf_ratio(horizon)
        run_half[i] = series.running_inf_ratio(horizon / 2.0)
    return RatioDiagnostics(
        t_grid=t_grid,
        ratios=ratios,
        quantiles=quants,
        prob_below=probs,
        running_inf=run_full,
        running_inf_half=run_half,
    )


def word_length_process_from_crossings(res) -> WordLengthSeries:
    if res.crossings is None:
        raise InsufficientDataError("path was run without crossing records")
    times = np.concatenate([[0.0], np.array([c[0] for c in res.crossings])])
    lengths = np.concatenate([[0], np.array([c[1] for c in res.crossings],
                                            dtype=np.int64)])
    return WordLengthSeries(times, lengths)


def pilot_constant(results, t_pilot: float, quantile: float = 0.9) -> float:
    """Ratio threshold from a pilot ensemble quantile at one time."""
    L, _ = grid_lengths(results, [t_pilot])
    g = t_pilot * math.log(t_pilot)
    return float(np.quantile(L[:, 0] / g, quantile))


def prob_trend(results, t_lo: float, t_hi: float, c: float):
    """Paired one-sided comparison of P(L_t <= c t log t) between two times.

    Returns (p_lo, p_hi, z) where z is the paired z-score of the increase.
    """
    L, _ = grid_lengths(results, [t_lo, t_hi])
    below_lo = L[:, 0] <= c * t_lo * math.log(t_lo)
    below_hi = L[:, 1] <= c * t_hi * math.log(t_hi)
    d = below_hi.astype(float) - below_lo.astype(float)
    se = d.std(ddof=1) / math.sqrt(len(d))
    z = d.mean() / se if se > 0 else math.inf * np.sign(d.mean() or 1)
    return float(below_lo.mean()), float(below_hi.mean()), float(z)


# ---------------------------------------------------------------------------
# excursion statistics

@dataclass(frozen=True)
class LoopDecomposition:
    power: int                    # signed number of whole cusp loops
    partial: int                  # leftover letters (< one loop word)


def decompose_loop_word(gamma: str, loop: str) -> LoopDecomposition | None:
    """Match gamma against powers of the cusp loop up to cyclic phase.

    Tile words inside a cusp neighborhood advance through a fixed cycle, so
    the net word between two in-cusp times is a power of some rotation of the
    loop word plus at most one partial period; None when gamma is not of this
    shape.
    """
    lw = len(loop)
    if gamma == "":
        return LoopDecomposition(0, 0)
    for base, sign in ((loop, 1), (word_inverse(loop), -1)):
        for r in range(lw):
            rot = base[r:] + base[:r]
            n = len(gamma) // lw
            rem = len(gamma) - n * lw
            if gamma == rot * n + rot[:rem]:
                return LoopDecomposition(sign * n, rem)
    return None


@dataclass(frozen=True)
class ExcursionWordReport:
    loop_counts: np.ndarray       # signed whole-loop counts, pooled
    thetas: np.ndarray            # lifted winding angles, pooled
    cusp_of: np.ndarray
    big_loop_series: list         # per path: averages of the between lengths
    sum_ratio: np.ndarray         # per path: sum|n_k| / ((2a/pi) n log n)
    decomposition_failures: int
    power_mismatches: int         # |theta/2pi - n| >= 1


def excursion_word_stats(results, preset: SurfacePreset) -> ExcursionWordReport:
    a_of = [cauchy_parameter(c) for c in preset.cusps]
    loops = [c.loop_word for c in preset.cusps]
    counts, thetas, cusps = [], [], []
    big_series = []
    sum_ratio = []
    fails = 0
    mismatches = 0
    for res in results:
        exc = res.excursions or []
        # big loops: lengths of the between-excursion pieces, Cesaro averaged
        between = []
        prev_word = ""
        abs_counts = []
        for e in exc:
            between.append(len(word_product(word_inverse(prev_word), e.word_u)))
            prev_word = e.word_v
            gamma = word_product(word_inverse(e.word_u), e.word_v)
            dec = decompose_loop_word(gamma, loops[e.cusp])
            n_loops = round(e.theta / (2.0 * math.pi))
            if dec is None:
                fails += 1
            elif abs(e.theta / (2.0 * math.pi) - dec.power) >= 1.0:
                mismatches += 1
            counts.append(n_loops)
            thetas.append(e.theta)
            cusps.append(e.cusp)
            abs_counts.append(abs(n_loops))
        if between:
            avg = np.cumsum(between) / np.arange(1, len(between) + 1)
            big_series.append(avg)
        else:
            big_series.append(np.array([]))
        n = len(abs_counts)
        if n >= 2:
            a = a_of[exc[0].cusp]
            sum_ratio.append(sum(abs_counts) / ((2.0 * a / math.pi) * n * math.log(n)))
    return ExcursionWordReport(
        loop_counts=np.array(counts, dtype=np.int64),
        thetas=np.array(thetas),
        cusp_of=np.array(cusps, dtype=np.int64),
        big_loop_series=big_series,
        sum_ratio=np.array(sum_ratio),
        decomposition_failures=fails,
        power_mismatches=mismatches,
    )


def loop_tail_profile(loop_counts, levels) -> np.ndarray:
    """ell * P(|n| >= ell) over the requested levels (flat for Cauchy tails)."""
    n = np.abs(np.asarray(loop_counts))
    return np.array([lv * np.mean(n >= lv) for lv in levels])


# ---------------------------------------------------------------------------
# subadditivity

def subadditivity_audit(words_at_times, n_triples: int = 1000, seed: int = 0) -> int:
    """Count violations of L(a,c) <= L(a,b) + L(b,c) over sampled time triples;
    the word metric makes the count zero whenever bookkeeping is consistent."""
    words = list(words_at_times)
    if len(words) < 3:
        return 0
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_triples):
        i, j, k = np.sort(rng.integers(0, len(words), size=3))
        wa, wb, wc = words[i], words[j], words[k]
        lac = len(word_product(word_inverse(wa), wc))
        lab = len(word_product(word_inverse(wa), wb))
        lbc = len(word_product(word_inverse(wb), wc))
        if lac > lab + lbc:
            bad += 1
    return bad
