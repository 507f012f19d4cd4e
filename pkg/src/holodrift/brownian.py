"""Hyperbolic Brownian motion on the upper half-plane: single-path stepping,
circle stopping times, winding lifts, and horodisc excursion times.

The default clock follows the heat equation driven by the full
Laplace-Beltrami operator y^2 (d_xx + d_yy); `half_laplacian` drops the
factor 2 in the noise variance (pure time change: hitting laws and winding
laws are unaffected, mean clocks double).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as _rng
from .hypgeom import CuspChart, HalfPlanePoint, hyp_distance, hyp_distance_xy, mobius_xy

DT_MIN = 1e-15
HIT_TOL = 1e-6

CLOCK_CONVENTIONS = ("laplacian", "half_laplacian")


class StepUnderflowError(RuntimeError):
    pass


class StepTooCoarseError(ValueError):
    pass


@dataclass(frozen=True)
class PathParams:
    max_step: float = 0.05
    seed: int = 0
    clock_convention: str = "laplacian"

    def __post_init__(self) -> None:
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.clock_convention not in CLOCK_CONVENTIONS:
            raise ValueError(f"clock_convention must be one of {CLOCK_CONVENTIONS}")

    @property
    def base_dt(self) -> float:
        # expected hyperbolic displacement per step stays below max_step
        return self.max_step ** 2 / 4.0

    @property
    def noise_factor(self) -> float:
        return 2.0 if self.clock_convention == "laplacian" else 1.0


@dataclass(frozen=True)
class WienerState:
    position: HalfPlanePoint
    clock: float
    stream: _rng.NormalStream = field(repr=False)


def initial_state(params: PathParams, start: HalfPlanePoint, path_index: int = 0) -> WienerState:
    gen = _rng.substream(params.seed, path_index, _rng.NOISE)
    return WienerState(start, 0.0, _rng.NormalStream(gen))


def bm_step(state: WienerState, params: PathParams, dt: float | None = None) -> WienerState:
    """One Euler step dx = sqrt(nf*dt) y xi1, dy = sqrt(nf*dt) y xi2.

    The step is retried with halved dt (fresh draws) if it would leave the
    half-plane.
    """
    x, y = state.position.x, state.position.y
    h = params.base_dt if dt is None else dt
    nf = params.noise_factor
    while True:
        if h < DT_MIN:
            raise StepUnderflowError("time step underflow while enforcing y > 0")
        xi1, xi2 = state.stream.pair()
        s = math.sqrt(nf * h)
        y1 = y + s * y * xi2
        if y1 > 0.0:
            x1 = x + s * y * xi1
            return WienerState(HalfPlanePoint(x1, y1), state.clock + h, state.stream)
        h /= 2.0


def _bisect_circle(x0, y0, x1, y1, cx, cy, radius):
    """Crossing fraction of the segment against the circle d(., c) = radius."""
    f0 = hyp_distance_xy(x0, y0, cx, cy) - radius
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        xm = x0 + mid * (x1 - x0)
        ym = y0 + mid * (y1 - y0)
        fm = hyp_distance_xy(xm, ym, cx, cy) - radius
        if abs(fm) < HIT_TOL:
            return mid, xm, ym
        if (fm > 0) == (f0 > 0):
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    return mid, x0 + mid * (x1 - x0), y0 + mid * (y1 - y0)


def run_until_circle(
    state: WienerState,
    center: HalfPlanePoint,
    radius_hyp: float,
    params: PathParams,
    horizon: float | None = None,
) -> tuple[WienerState, bool]:
    """Run until the path crosses the hyperbolic circle around `center`.

    The crossing step is refined by bisection along the sampled segment, so
    the returned position sits on the circle within HIT_TOL.  hit=False only
    when `horizon` elapses first.
    """
    if radius_hyp <= 0:
        raise ValueError("radius must be positive")
    d0 = hyp_distance(state.position, center) - radius_hyp
    if abs(d0) <= HIT_TOL:
        return state, True
    inside = d0 < 0
    while True:
        if horizon is not None and state.clock >= horizon:
            return state, False
        prev = state
        state = bm_step(state, params)
        d = hyp_distance(state.position, center) - radius_hyp
        if (d < 0) != inside or abs(d) <= HIT_TOL:
            frac, xm, ym = _bisect_circle(
                prev.position.x, prev.position.y,
                state.position.x, state.position.y,
                center.x, center.y, radius_hyp,
            )
            dt = state.clock - prev.clock
            hit = WienerState(HalfPlanePoint(xm, ym), prev.clock + frac * dt, state.stream)
            return hit, True


def winding_angle(xs, ys, chart: CuspChart) -> float:
    """Continuous lift of the chart angle along a sampled segment.

    The segment must stay inside the outer horodisc of the chart (in the
    chart's own vertex); per-step increments of the lifted angle must stay
    below pi or the sampling is too coarse to wind unambiguously.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    u, v = mobius_xy(chart.conjugator.mat, xs, ys)
    if np.any(v < chart.level_outer - HIT_TOL):
        raise ValueError("segment leaves the outer horodisc of the chart")
    theta = 2.0 * math.pi * u / chart.width
    inc = np.diff(theta)
    if inc.size and float(np.max(np.abs(inc))) >= math.pi:
        raise StepTooCoarseError("single-step winding increment reached pi")
    return float(theta[-1] - theta[0]) if theta.size else 0.0


@dataclass(frozen=True)
class ExcursionTimes:
    """Alternating first-hit times of the inner then outer horocycles."""

    times: tuple[tuple[float, float, int], ...]  # (U_k, V_k, cusp index)

    def __post_init__(self) -> None:
        seq = [t for uv in self.times for t in uv[:2]]
        if any(b <= a for a, b in zip(seq, seq[1:])):
            raise ValueError("excursion times must strictly alternate")


def excursions(ts, xs, ys, charts: list[CuspChart], horizon: float | None = None) -> ExcursionTimes:
    """U/V excursion times of a sampled path against a family of cusp charts.

    Crossing times are linearly interpolated between samples.  The path must
    start outside every inner horodisc; an excursion still open at the end of
    the samples (or horizon) is dropped.
    """
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if horizon is not None:
        keep = ts <= horizon
        ts, xs, ys = ts[keep], xs[keep], ys[keep]
    heights = []
    owner = []
    for ci, chart in enumerate(charts):
        h = chart.heights(xs, ys)
        heights.append(h.max(axis=0))
        owner.append(np.full(xs.shape, ci))
    hmax = np.max(np.stack(heights), axis=0)
    which = np.argmax(np.stack(heights), axis=0)
    if hmax[0] > charts[0].level_inner:
        raise ValueError("path must start outside the inner horodiscs")

    out = []
    in_exc = False
    cusp = -1
    t_u = 0.0
    for i in range(1, len(ts)):
        if not in_exc:
            ci = int(which[i])
            lin = charts[ci].level_inner
            if hmax[i] >= lin and hmax[i - 1] < lin:
                f = (lin - hmax[i - 1]) / (hmax[i] - hmax[i - 1])
                t_u = float(ts[i - 1] + f * (ts[i] - ts[i - 1]))
                in_exc, cusp = True, ci
        else:
            lout = charts[cusp].level_outer
            h_here = heights[cusp]
            if h_here[i] <= lout and h_here[i - 1] > lout:
                f = (lout - h_here[i - 1]) / (h_here[i] - h_here[i - 1])
                t_v = float(ts[i - 1] + f * (ts[i] - ts[i - 1]))
                out.append((t_u, t_v, cusp))
                in_exc = False
    return ExcursionTimes(tuple(out))


# ---------------------------------------------------------------------------
# chart-level winding ensemble (vectorized strip runner)


def winding_exit_samples(
    a: float,
    n_paths: int,
    params: PathParams,
    master_seed: int | None = None,
    first_id: int = 0,
) -> np.ndarray:
    """Exit winding angles for Brownian paths in a horodisc annulus of modulus
    parameter `a`: start on the inner horocycle, stop on the outer one.

    Runs in the chart strip of width 2*pi, heights between 1 and 1 + a.  In
    strip coordinates the lifted winding angle is the net x-displacement, so
    no angle unwrapping is involved and the step size needs no height cap:
    the driving SDE is scale invariant, which keeps the weak error of the
    Euler scheme uniform in the altitude of the excursion.
    """
    if a <= 0:
        raise ValueError("annulus parameter must be positive")
    seed = params.seed if master_seed is None else master_seed
    gens = [_rng.substream(seed, first_id + i, _rng.NOISE) for i in range(n_paths)]
    batch = _rng.NormalBatch(gens)

    y_out = 1.0
    y_in = 1.0 + a
    x = np.zeros(n_paths)
    y = np.full(n_paths, y_in)
    alive = np.ones(n_paths, dtype=bool)
    nf = params.noise_factor
    s = math.sqrt(nf * params.base_dt)

    while np.any(alive):
        idx = np.nonzero(alive)[0]
        yi = y[idx]
        xi1, xi2 = batch.pairs(idx)
        dy = s * yi * xi2
        y1 = yi + dy
        # a step below the floor is impossible at ~28 sigma; clamp defensively
        np.clip(y1, y_out * 1e-12, None, out=y1)
        dx = s * yi * xi1
        x1 = x[idx] + dx
        crossed = y1 <= y_out
        if np.any(crossed):
            frac = (yi[crossed] - y_out) / (yi[crossed] - y1[crossed])
            x1[crossed] = x[idx][crossed] + frac * dx[crossed]
            y1[crossed] = y_out
            alive[idx[crossed]] = False
        x[idx] = x1
        y[idx] = y1
    return x


def cauchy_cdf(x, a: float):
    return 0.5 + np.arctan(np.asarray(x) / a) / math.pi


def cauchy_density(x, a: float):
    x = np.asarray(x)
    return a / (math.pi * (a * a + x * x))
