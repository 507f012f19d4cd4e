"""Lockstep ensemble walker on a tessellated surface.

Paths are simulated on the quotient: the walker keeps the pulled-back
representative of each path inside (a thin shell around) the base polygon,
applying deck transformations whenever a side is crossed and recording the
crossing letters.  Coordinates therefore stay bounded at arbitrary horizons
and the reduced tile word is maintained incrementally.

All paths carry their own noise substreams, so results are independent of
batch composition and worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .brownian import DT_MIN, PathParams, StepUnderflowError
from .hypgeom import (
    GeometryError,
    SurfacePreset,
    word_inverse,
    word_product,
)

MAX_PULLBACKS = 2_000_000
_BISECT_ROUNDS = 24


@dataclass(frozen=True)
class FlsConfig:
    """Ball-pair data and acceptance kernel for the discretization ladder."""

    delta: float
    delta_prime: float
    kappa_xy: object          # kappa_xy(cx, cy, rx, ry, sx, sy) -> float
    k_target: int
    store_rung_words: bool = False


@dataclass(frozen=True)
class WalkConfig:
    preset: SurfacePreset
    params: PathParams
    horizon: float | None = None
    fls: FlsConfig | None = None
    track_cusps: bool = False
    t_grid: np.ndarray | None = None
    record_crossings: bool = False
    record_excursion_detail: bool = False


@dataclass
class ExcursionRecord:
    cusp: int
    t_u: float
    t_v: float
    theta: float              # lifted winding angle over [U, V]
    word_u: str
    word_v: str
    detail: list | None = None  # [(t, word, lift)] at in-cusp crossings


@dataclass
class FlsTrace:
    s0: float
    n: np.ndarray
    R: np.ndarray
    S: np.ndarray
    kappa: np.ndarray
    alpha: np.ndarray
    accepted: np.ndarray
    word_len: np.ndarray
    words: list | None
    acc_n: np.ndarray
    acc_S: np.ndarray
    acc_word_len: np.ndarray
    increments: list


@dataclass
class PathResult:
    path_id: int
    status: str               # 'done' | 'horizon'
    clock: float
    word: str
    crossings: list | None
    grid: list | None         # [(t, L, word)]
    excursions: list | None
    fls: FlsTrace | None


# FLS ladder modes
_WANDER = 0   # no ball bookkeeping (non-FLS runs)
_INIT = 1     # waiting for the first exit of the base V ball
_SEEK_R = 2   # waiting to enter some F ball
_SEEK_S = 3   # waiting to exit the V ball around the current center


def _quad_gap(x, y, cx, cy):
    """Monotone proxy for the hyperbolic distance to (cx, cy):
    4*sinh(d/2)^2 = ((x-cx)^2 + (y-cy)^2)/(y*cy)."""
    return ((x - cx) ** 2 + (y - cy) ** 2) / (y * cy)


def _dist_thresh(radius: float) -> float:
    return 4.0 * math.sinh(radius / 2.0) ** 2


class _PathScratch:
    """Per-path python-side state (words, records)."""

    __slots__ = (
        "word", "crossings", "grid", "excursions", "exc_detail",
        "rungs", "acc", "prev_acc_word", "rung_word", "word_u", "s0",
    )

    def __init__(self):
        self.word: list[str] = []
        self.crossings: list = []
        self.grid: list = []
        self.excursions: list = []
        self.exc_detail: list | None = None
        self.rungs: list = []        # (n, R, S, kappa, alpha, acc, wlen, word|None)
        self.acc: list = []          # (n, S, wlen, increment)
        self.prev_acc_word = ""
        self.rung_word = ""          # X_n snapshot, set at R
        self.word_u = ""
        self.s0 = math.nan


class EnsembleWalker:
    """Advances a batch of paths in lockstep over shared geometry."""

    def __init__(self, cfg: WalkConfig, master_seed: int, path_ids):
        self.cfg = cfg
        self.preset = cfg.preset
        self.master_seed = int(master_seed)
        self.ids = list(path_ids)
        n = len(self.ids)
        p = cfg.params

        self.base_dt = p.base_dt
        self.nf = p.noise_factor
        self.s_coef = math.sqrt(self.nf * self.base_dt)

        # settlement data: (c0, c1, c2, letter, inverse letter, pull-back abcd,
        # translation shift when the pull-back is z + b)
        self._sides = []
        for side in self.preset.polygon.sides:
            m = self.preset.gen(side.letter.swapcase()).mat
            is_translation = abs(m[1, 0]) < 1e-15 and abs(m[0, 0] - 1.0) < 1e-15
            self._sides.append((
                float(side.coefs[0]), float(side.coefs[1]), float(side.coefs[2]),
                side.letter, side.letter.swapcase(),
                (float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1])),
                float(m[0, 1]) if is_translation else None,
            ))
        self._coefs = self.preset.polygon.coef_array()

        bx, by = self.preset.base.x, self.preset.base.y
        self.x = np.full(n, bx)
        self.y = np.full(n, by)
        self.t = np.zeros(n)
        self.alive = np.ones(n, dtype=bool)
        self._idx = np.arange(n)
        self._idx_dirty = False
        self.scratch = [_PathScratch() for _ in range(n)]
        if cfg.record_excursion_detail:
            for sc in self.scratch:
                sc.exc_detail = []

        gens = [_rng.substream(self.master_seed, pid, _rng.NOISE) for pid in self.ids]
        self.noise = _rng.NormalBatch(gens)

        # FLS state
        self.fls = cfg.fls
        if cfg.fls is not None:
            self.mode = np.full(n, _INIT, dtype=np.int8)
            self.center_x = np.full(n, bx)
            self.center_y = np.full(n, by)
            self.pR_x = np.full(n, math.nan)
            self.pR_y = np.full(n, math.nan)
            self.rung_no = np.zeros(n, dtype=np.int64)
            self.k_count = np.zeros(n, dtype=np.int64)
            self.last_R = np.full(n, math.nan)
            self.uni = [_rng.substream(self.master_seed, pid, _rng.UNIFORM)
                        for pid in self.ids]
            self.cands = self._pruned_candidates()
            self.single_cand = len(self.cands[0]) == 1
            self._gap_in = _dist_thresh(cfg.fls.delta)
            self._gap_out = _dist_thresh(cfg.fls.delta_prime)
        else:
            self.mode = np.full(n, _WANDER, dtype=np.int8)

        # cusp chart data
        if cfg.track_cusps:
            mats, owner = [], []
            self.cusp_lin, self.cusp_lout, self.cusp_width = [], [], []
            for ci, cusp in enumerate(self.preset.cusps):
                self.cusp_lin.append(cusp.level_inner)
                self.cusp_lout.append(cusp.level_outer)
                self.cusp_width.append(cusp.width)
                for ch in cusp.charts:
                    mats.append(ch.mat)
                    owner.append(ci)
            self.chart_abcd = [
                (float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))
                for m in mats
            ]
            self.chart_cusp = np.array(owner)
            self._lin_arr = np.array([self.cusp_lin[c] for c in owner])
            # prescreen bounds: the identity chart fires only when y is large,
            # charts with |c| >= cmin only when y is small (h <= 1/(c^2 y))
            lin_min = min(self.cusp_lin)
            self._u_hi = lin_min
            cmin = min((abs(m[1, 0]) for m in mats if abs(m[1, 0]) > 1e-12),
                       default=None)
            self._u_lo = 1.0 / (cmin * cmin * lin_min) if cmin else -1.0
            self._has_id_chart = any(abs(m[1, 0]) <= 1e-12 for m in mats)
            self.exc_cusp = np.full(n, -1, dtype=np.int32)
            self.exc_chart = np.zeros(n, dtype=np.int32)
            self.exc_off = np.zeros(n)
            self.exc_anchor = np.zeros(n)
            self.exc_tu = np.zeros(n)

        # grid sampling
        if cfg.t_grid is not None:
            self.grid = np.asarray(cfg.t_grid, dtype=float)
            self.grid_ptr = np.zeros(n, dtype=np.int64)
            self.grid_next = np.full(n, self.grid[0])
        else:
            self.grid = None

        self.horizon = math.inf if cfg.horizon is None else float(cfg.horizon)
        self._finished: dict[int, PathResult] = {}

    # -- geometry helpers ----------------------------------------------------

    def _pruned_candidates(self):
        """Orbit candidates whose F balls are reachable from the tracked shell."""
        delta = self.cfg.fls.delta
        margin = delta + 4.0 * self.cfg.params.max_step
        keep_w, keep_x, keep_y = [], [], []
        for w, pt in self.preset.orbit_candidates():
            reach = self.preset.polygon.contains(pt.x, pt.y, tol=1e-9)
            if not reach:
                for j in range(256):
                    ang = 2.0 * math.pi * j / 256
                    for rr in (margin, 0.5 * margin):
                        # hyperbolic circle around pt is a Euclidean circle
                        ex = pt.x + pt.y * math.sinh(rr) * math.cos(ang)
                        ey = pt.y * (math.cosh(rr) + math.sinh(rr) * math.sin(ang))
                        if ey > 0 and self.preset.polygon.contains(ex, ey, tol=1e-9):
                            reach = True
                            break
                    if reach:
                        break
            if reach:
                keep_w.append(w)
                keep_x.append(pt.x)
                keep_y.append(pt.y)
        return keep_w, np.array(keep_x), np.array(keep_y)

    def _chart_uv(self, chart_idx: int, x: float, y: float):
        a, b, c, d = self.chart_abcd[chart_idx]
        u = c * x + d
        den = u * u + (c * y) ** 2
        return ((a * x + b) * u + a * c * y * y) / den, y / den

    def _active_chart(self, cusp: int, x: float, y: float) -> int:
        best, arg = -math.inf, -1
        for j, owner in enumerate(self.chart_cusp):
            if owner != cusp:
                continue
            h = self._chart_uv(j, x, y)[1]
            if h > best:
                best, arg = h, j
        return arg

    # -- settlement ------------------------------------------------------------

    def _settle(self, i: int) -> None:
        """Pull the representative of path i back into the base polygon,
        recording crossing letters and transporting marks."""
        x = float(self.x[i])
        y = float(self.y[i])
        sc = self.scratch[i]
        word = sc.word
        mode_i = int(self.mode[i])
        transport = self.fls is not None and mode_i != _SEEK_R and mode_i != _WANDER
        in_exc = self.cfg.track_cusps and self.exc_cusp[i] >= 0
        record = self.cfg.record_crossings
        t_i = float(self.t[i])
        sides = self._sides
        if transport:
            cx = float(self.center_x[i])
            cy = float(self.center_y[i])
            rx = float(self.pR_x[i])
            ry = float(self.pR_y[i])
            has_pr = rx == rx
        detail = sc.exc_detail is not None
        it = 0
        while True:
            r2 = x * x + y * y
            worst = 0.0
            hit = None
            for side in sides:
                v = side[0] + side[1] * x + side[2] * r2
                if v < worst:
                    worst = v
                    hit = side
            if hit is None:
                break
            if in_exc:
                pre = self._chart_uv(int(self.exc_chart[i]), x, y)[0]
            shift = hit[6]
            g = hit[3]
            ginv = hit[4]
            if shift is not None and not detail:
                # pure-translation pull: collapse a run of parallel crossings
                reps = max(1, math.ceil(-(hit[0] + hit[1] * x) / (hit[1] * shift)))
                x += reps * shift
                if transport:
                    cx += reps * shift
                    if has_pr:
                        rx += reps * shift
                j = 0
                while j < reps and word and word[-1] == ginv:
                    word.pop()
                    if record:
                        sc.crossings.append((t_i, len(word)))
                    j += 1
                for _ in range(reps - j):
                    word.append(g)
                    if record:
                        sc.crossings.append((t_i, len(word)))
                it += reps
            else:
                a, b, c, d = hit[5]
                u = c * x + d
                den = u * u + (c * y) ** 2
                x = ((a * x + b) * u + a * c * y * y) / den
                y = y / den
                if transport:
                    uu = c * cx + d
                    dd = uu * uu + (c * cy) ** 2
                    cx = ((a * cx + b) * uu + a * c * cy * cy) / dd
                    cy = cy / dd
                    if has_pr:
                        uu = c * rx + d
                        dd = uu * uu + (c * ry) ** 2
                        rx = ((a * rx + b) * uu + a * c * ry * ry) / dd
                        ry = ry / dd
                if word and word[-1] == ginv:
                    word.pop()
                else:
                    word.append(g)
                if record:
                    sc.crossings.append((t_i, len(word)))
                it += 1
            if in_exc:
                cusp = int(self.exc_cusp[i])
                j = self._active_chart(cusp, x, y)
                self.exc_chart[i] = j
                post = self._chart_uv(j, x, y)[0]
                self.exc_off[i] += pre - post
                if detail:
                    sc.exc_detail.append((t_i, "".join(word),
                                          float(self.exc_off[i] + post)))
            if it > MAX_PULLBACKS:
                raise GeometryError("settlement did not terminate")
        if it and transport:
            self.center_x[i] = cx
            self.center_y[i] = cy
            if has_pr:
                self.pR_x[i] = rx
                self.pR_y[i] = ry
        self.x[i] = x
        self.y[i] = y

    # -- event bisection (scalar) ------------------------------------------------

    @staticmethod
    def _bisect_gap(cx, cy, gap, x0, y0, x1, y1):
        """Crossing of the quad-gap level along the segment (inline arithmetic)."""
        f0 = ((x0 - cx) ** 2 + (y0 - cy) ** 2) / (y0 * cy) > gap
        lo, hi = 0.0, 1.0
        dx, dy = x1 - x0, y1 - y0
        for _ in range(_BISECT_ROUNDS):
            mid = 0.5 * (lo + hi)
            xm = x0 + mid * dx
            ym = y0 + mid * dy
            if (((xm - cx) ** 2 + (ym - cy) ** 2) / (ym * cy) > gap) == f0:
                lo = mid
            else:
                hi = mid
        mid = 0.5 * (lo + hi)
        return mid, x0 + mid * dx, y0 + mid * dy

    @staticmethod
    def _bisect(f, x0, y0, x1, y1):
        """Crossing point of the sign change of f along the segment."""
        f0 = f(x0, y0) > 0.0
        lo, hi = 0.0, 1.0
        dx, dy = x1 - x0, y1 - y0
        for _ in range(_BISECT_ROUNDS):
            mid = 0.5 * (lo + hi)
            if (f(x0 + mid * dx, y0 + mid * dy) > 0.0) == f0:
                lo = mid
            else:
                hi = mid
        mid = 0.5 * (lo + hi)
        return mid, x0 + mid * dx, y0 + mid * dy

    # -- FLS event handlers --------------------------------------------------

    def _fire_v_exit(self, i, x0, y0, x1, y1, dt):
        """Exit of the V ball: closes INIT (records S0) or a ladder rung."""
        fls = self.fls
        cx, cy = float(self.center_x[i]), float(self.center_y[i])
        frac, xm, ym = self._bisect_gap(cx, cy, self._gap_out, x0, y0, x1, y1)
        self.t[i] += frac * dt
        self.x[i], self.y[i] = xm, ym
        self._settle(i)
        sc = self.scratch[i]
        t_s = float(self.t[i])
        if self.mode[i] == _INIT:
            sc.s0 = t_s
            self._to_seek_r(i)
            return
        # ladder rung: kappa from the transported marks (frame invariant)
        kap = fls.kappa_xy(
            float(self.center_x[i]), float(self.center_y[i]),
            float(self.pR_x[i]), float(self.pR_y[i]),
            float(self.x[i]), float(self.y[i]),
        )
        alpha = float(self.uni[i].random())
        acc = alpha < kap
        n = int(self.rung_no[i])
        wlen = len(sc.rung_word)
        sc.rungs.append((n, float(self.last_R[i]), t_s, kap, alpha, acc, wlen,
                         sc.rung_word if fls.store_rung_words else None))
        if acc:
            self.k_count[i] += 1
            inc = word_product(word_inverse(sc.prev_acc_word), sc.rung_word)
            sc.acc.append((n, t_s, wlen, inc))
            sc.prev_acc_word = sc.rung_word
            if self.k_count[i] >= fls.k_target:
                self._finish(i, "done")
        self._to_seek_r(i)
        self.pR_x[i] = math.nan
        self.pR_y[i] = math.nan

    def _to_seek_r(self, i):
        """SEEK_R mode parks the center on the nearest-candidate proxy so the
        step loop can use one fused gap test; with a single candidate the
        center simply is that orbit point."""
        self.mode[i] = _SEEK_R
        _, cxs, cys = self.cands
        self.center_x[i] = float(cxs[0])
        self.center_y[i] = float(cys[0])

    def _fire_r_entry(self, i, x0, y0, x1, y1, dt):
        fls = self.fls
        words, cxs, cys = self.cands
        if len(words) > 1:
            d_end = _quad_gap(x1, y1, cxs, cys)
            j = int(np.argmin(d_end))
        else:
            j = 0
        cx, cy = float(cxs[j]), float(cys[j])
        frac, xm, ym = self._bisect_gap(cx, cy, self._gap_in, x0, y0, x1, y1)
        self.t[i] += frac * dt
        self.x[i], self.y[i] = xm, ym
        self._settle(i)
        if len(words) > 1:
            d_new = _quad_gap(float(self.x[i]), float(self.y[i]), cxs, cys)
            j = int(np.argmin(d_new))
        sc = self.scratch[i]
        sc.rung_word = word_product("".join(sc.word), words[j])
        self.rung_no[i] += 1
        self.last_R[i] = float(self.t[i])
        self.center_x[i] = float(cxs[j])
        self.center_y[i] = float(cys[j])
        self.pR_x[i] = float(self.x[i])
        self.pR_y[i] = float(self.y[i])
        self.mode[i] = _SEEK_S

    # -- cusp event handlers ---------------------------------------------------

    def _fire_u(self, i, x0, y0, x1, y1, dt, cusp, chart):
        lin = self.cusp_lin[cusp]
        frac, xm, ym = self._bisect(
            lambda a, b: self._chart_uv(chart, a, b)[1] - lin, x0, y0, x1, y1)
        self.t[i] += frac * dt
        self.x[i], self.y[i] = xm, ym
        self._settle(i)
        j = self._active_chart(cusp, float(self.x[i]), float(self.y[i]))
        self.exc_cusp[i] = cusp
        self.exc_chart[i] = j
        self.exc_off[i] = 0.0
        self.exc_anchor[i] = self._chart_uv(j, float(self.x[i]), float(self.y[i]))[0]
        self.exc_tu[i] = float(self.t[i])
        sc = self.scratch[i]
        sc.word_u = "".join(sc.word)
        if sc.exc_detail is not None:
            sc.exc_detail.append((float(self.t[i]), sc.word_u,
                                  float(self.exc_anchor[i])))

    def _fire_v_level(self, i, x0, y0, x1, y1, dt):
        cusp = int(self.exc_cusp[i])
        chart = int(self.exc_chart[i])
        lout = self.cusp_lout[cusp]
        frac, xm, ym = self._bisect(
            lambda a, b: self._chart_uv(chart, a, b)[1] - lout, x0, y0, x1, y1)
        self.t[i] += frac * dt
        lift = self.exc_off[i] + self._chart_uv(chart, xm, ym)[0]
        theta = 2.0 * math.pi * (lift - self.exc_anchor[i]) / self.cusp_width[cusp]
        self.x[i], self.y[i] = xm, ym
        self._settle(i)
        sc = self.scratch[i]
        detail = None
        if sc.exc_detail is not None:
            detail = sc.exc_detail
            sc.exc_detail = []
        sc.excursions.append(ExcursionRecord(
            cusp=cusp,
            t_u=float(self.exc_tu[i]),
            t_v=float(self.t[i]),
            theta=float(theta),
            word_u=sc.word_u,
            word_v="".join(sc.word),
            detail=detail,
        ))
        self.exc_cusp[i] = -1

    # -- main loop ----------------------------------------------------------

    def _finish(self, i: int, status: str) -> None:
        """Flush the finished path's record and mark its row for compaction."""
        cfg = self.cfg
        sc = self.scratch[i]
        fls_trace = None
        if cfg.fls is not None:
            rungs = sc.rungs
            fls_trace = FlsTrace(
                s0=sc.s0,
                n=np.array([r[0] for r in rungs], dtype=np.int64),
                R=np.array([r[1] for r in rungs]),
                S=np.array([r[2] for r in rungs]),
                kappa=np.array([r[3] for r in rungs]),
                alpha=np.array([r[4] for r in rungs]),
                accepted=np.array([r[5] for r in rungs], dtype=bool),
                word_len=np.array([r[6] for r in rungs], dtype=np.int64),
                words=([r[7] for r in rungs]
                       if cfg.fls.store_rung_words else None),
                acc_n=np.array([a[0] for a in sc.acc], dtype=np.int64),
                acc_S=np.array([a[1] for a in sc.acc]),
                acc_word_len=np.array([a[2] for a in sc.acc], dtype=np.int64),
                increments=[a[3] for a in sc.acc],
            )
        self._finished[self.ids[i]] = PathResult(
            path_id=self.ids[i],
            status=status,
            clock=float(self.t[i]),
            word="".join(sc.word),
            crossings=sc.crossings if cfg.record_crossings else None,
            grid=sc.grid if self.grid is not None else None,
            excursions=sc.excursions if cfg.track_cusps else None,
            fls=fls_trace,
        )
        self.alive[i] = False
        self._idx_dirty = True

    def _compact(self) -> None:
        keep = np.flatnonzero(self.alive)
        sel = lambda arr: arr[keep]
        self.x = sel(self.x)
        self.y = sel(self.y)
        self.t = sel(self.t)
        self.mode = sel(self.mode)
        self.alive = sel(self.alive)
        self.ids = [self.ids[int(i)] for i in keep]
        self.scratch = [self.scratch[int(i)] for i in keep]
        self.noise.compact(keep)
        if self.fls is not None:
            self.center_x = sel(self.center_x)
            self.center_y = sel(self.center_y)
            self.pR_x = sel(self.pR_x)
            self.pR_y = sel(self.pR_y)
            self.rung_no = sel(self.rung_no)
            self.k_count = sel(self.k_count)
            self.last_R = sel(self.last_R)
            self.uni = [self.uni[int(i)] for i in keep]
        if self.cfg.track_cusps:
            self.exc_cusp = sel(self.exc_cusp)
            self.exc_chart = sel(self.exc_chart)
            self.exc_off = sel(self.exc_off)
            self.exc_anchor = sel(self.exc_anchor)
            self.exc_tu = sel(self.exc_tu)
        if self.grid is not None:
            self.grid_ptr = sel(self.grid_ptr)
            self.grid_next = sel(self.grid_next)
        self._idx = np.arange(len(self.ids))
        self._idx_dirty = False

    def run(self) -> list[PathResult]:
        while True:
            if self._idx_dirty:
                alive_n = int(self.alive.sum())
                if alive_n == 0:
                    break
                if alive_n < 0.7 * self.alive.size:
                    self._compact()
                else:
                    self._idx = np.flatnonzero(self.alive)
                    self._idx_dirty = False
            if self._idx.size == 0:
                break
            self._step(self._idx)
        return [self._finished[pid] for pid in sorted(self._finished)]

    def _step(self, idx: np.ndarray) -> None:
        cfg = self.cfg
        x0 = self.x[idx]
        y0 = self.y[idx]
        xi1, xi2 = self.noise.pairs(idx)
        s = self.s_coef
        y1 = y0 * (1.0 + s * xi2)
        x1 = x0 + s * y0 * xi1
        dt_arr = None
        if (y1 <= 0.0).any():
            dt_arr = np.full(idx.size, self.base_dt)
            bad = y1 <= 0.0
            while bad.any():
                sub = idx[bad]
                dt_arr[bad] = dt_arr[bad] / 2.0
                if (dt_arr[bad] < DT_MIN).any():
                    raise StepUnderflowError("time step underflow enforcing y > 0")
                r1, r2 = self.noise.pairs(sub)
                ss = np.sqrt(self.nf * dt_arr[bad])
                y1[bad] = y0[bad] * (1.0 + ss * r2)
                x1[bad] = x0[bad] + ss * y0[bad] * r1
                bad = y1 <= 0.0

        def dt_of(j):
            return self.base_dt if dt_arr is None else float(dt_arr[j])

        handled = None

        # FLS circle events: one fused gap test against the parked center
        if self.fls is not None:
            m = self.mode[idx]
            q = _quad_gap(x1, y1, self.center_x[idx], self.center_y[idx])
            fired_exit = (m != _SEEK_R) & (q >= self._gap_out)
            if self.single_cand:
                fired_enter = (m == _SEEK_R) & (q <= self._gap_in)
            else:
                _, cxs, cys = self.cands
                qmin = _quad_gap(x1[:, None], y1[:, None],
                                 cxs[None, :], cys[None, :]).min(axis=1)
                fired_enter = (m == _SEEK_R) & (qmin <= self._gap_in)
            if fired_exit.any():
                for j in np.flatnonzero(fired_exit):
                    j = int(j)
                    self._fire_v_exit(int(idx[j]), x0[j], y0[j],
                                      x1[j], y1[j], dt_of(j))
                handled = fired_exit.copy()
            if fired_enter.any():
                for j in np.flatnonzero(fired_enter):
                    j = int(j)
                    if handled is not None and handled[j]:
                        continue
                    self._fire_r_entry(int(idx[j]), x0[j], y0[j],
                                       x1[j], y1[j], dt_of(j))
                if handled is None:
                    handled = fired_enter.copy()
                else:
                    handled |= fired_enter

        # cusp U/V events (old-frame heights at the proposal endpoint)
        if cfg.track_cusps:
            in_exc = self.exc_cusp[idx] >= 0
            check = in_exc | (y1 >= self._u_hi)
            if self._u_lo > 0.0:
                check |= y1 <= self._u_lo
            if check.any():
                sub = np.flatnonzero(check)
                hx, hy = x1[sub], y1[sub]
                H = np.empty((len(self.chart_abcd), sub.size))
                for ci, (a, b, c, d) in enumerate(self.chart_abcd):
                    u = c * hx + d
                    H[ci] = hy / (u * u + (c * hy) ** 2)
                for jj in range(sub.size):
                    j = int(sub[jj])
                    if handled is not None and handled[j]:
                        continue
                    i = int(idx[j])
                    if self.exc_cusp[i] >= 0:
                        cusp = int(self.exc_cusp[i])
                        if H[int(self.exc_chart[i]), jj] <= self.cusp_lout[cusp]:
                            self._fire_v_level(i, x0[j], y0[j],
                                               x1[j], y1[j], dt_of(j))
                            if handled is None:
                                handled = np.zeros(idx.size, dtype=bool)
                            handled[j] = True
                    else:
                        chart = int(np.argmax(H[:, jj]))
                        cusp = int(self.chart_cusp[chart])
                        if H[chart, jj] >= self.cusp_lin[cusp]:
                            self._fire_u(i, x0[j], y0[j], x1[j], y1[j],
                                         dt_of(j), cusp, chart)
                            if handled is None:
                                handled = np.zeros(idx.size, dtype=bool)
                            handled[j] = True

        # ordinary advance + settlement
        if handled is None:
            plain = slice(None)
            gi = idx
        else:
            plain = ~handled
            gi = idx[plain]
        if gi.size:
            xs = x1[plain]
            ys = y1[plain]
            self.x[gi] = xs
            self.y[gi] = ys
            if dt_arr is None:
                self.t[gi] += self.base_dt
            else:
                self.t[gi] += dt_arr[plain]
            r2 = xs * xs + ys * ys
            c = self._coefs
            vals = c[:, 0][:, None] + c[:, 1][:, None] * xs + c[:, 2][:, None] * r2
            # hysteresis: all side gradients have unit size on the sides, so a
            # band of a few step widths suppresses boundary chatter without
            # affecting any frame-invariant quantity; events settle exactly.
            band = np.minimum(3.0 * self.s_coef * ys, 1.0)
            outside = (vals < -band).any(axis=0)
            if outside.any():
                for j in np.flatnonzero(outside):
                    self._settle(int(gi[j]))

        # grid sampling
        if self.grid is not None:
            due = self.t[idx] >= self.grid_next[idx]
            if due.any():
                for j in np.flatnonzero(due):
                    i = int(idx[j])
                    sc = self.scratch[i]
                    while (self.grid_ptr[i] < self.grid.size
                           and self.t[i] >= self.grid[self.grid_ptr[i]]):
                        g = float(self.grid[self.grid_ptr[i]])
                        sc.grid.append((g, len(sc.word), "".join(sc.word)))
                        self.grid_ptr[i] += 1
                    self.grid_next[i] = (self.grid[self.grid_ptr[i]]
                                         if self.grid_ptr[i] < self.grid.size
                                         else math.inf)

        # horizon
        if self.horizon < math.inf:
            over = self.t[idx] >= self.horizon
            if over.any():
                for j in np.flatnonzero(over):
                    i = int(idx[j])
                    if not self.alive[i]:
                        continue
                    if self.fls is not None and self.k_count[i] >= self.fls.k_target:
                        self._finish(i, "done")
                    else:
                        self._finish(i, "horizon")


def run_walks(
    cfg: WalkConfig,
    master_seed: int,
    n_paths: int,
    threads: int = 1,
    chunk: int = 512,
    first_id: int = 0,
) -> list[PathResult]:
    """Run an ensemble; results are merged in path order so the output is a
    pure function of (config, master seed) regardless of threading."""
    ids = list(range(first_id, first_id + n_paths))
    chunks = [ids[i:i + chunk] for i in range(0, len(ids), chunk)]
    results: dict[int, PathResult] = {}
    if threads <= 1 or len(chunks) == 1:
        for ch in chunks:
            for res in EnsembleWalker(cfg, master_seed, ch).run():
                results[res.path_id] = res
    else:
        from concurrent.futures import ThreadPoolExecutor

        def work(ch):
            return EnsembleWalker(cfg, master_seed, ch).run()

        with ThreadPoolExecutor(max_workers=threads) as ex:
            for batch in ex.map(work, chunks):
                for res in batch:
                    results[res.path_id] = res
    return [results[i] for i in sorted(results)]
