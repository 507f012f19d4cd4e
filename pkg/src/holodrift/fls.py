"""Discretization of Brownian motion into a random walk on the deck group:
nested ball pairs, the Harnack constant of their hitting measures, the
stopping-time ladder with rejection weights, and the induced increment law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import paths as _paths
from .brownian import PathParams
from .hypgeom import GeometryError, HalfPlanePoint, SurfacePreset, hyp_distance


class DegenerateBallsError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


class HorizonExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class BallPair:
    """Hyperbolic radii of the inner (F) and outer (V) balls around each
    orbit point; the V balls must stay pairwise disjoint."""

    delta: float
    delta_prime: float

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < self.delta_prime:
            raise DegenerateBallsError("need 0 < delta < delta_prime")

    def validate(self, preset: SurfacePreset) -> None:
        if 2.0 * self.delta_prime >= preset.min_displacement:
            raise DegenerateBallsError(
                "outer balls overlap: 2*delta_prime must stay below the "
                f"minimal displacement {preset.min_displacement:.6f}"
            )


def default_ball_pair(preset: SurfacePreset) -> BallPair:
    dp = 0.4 * preset.min_displacement
    return BallPair(delta=dp / 2.0, delta_prime=dp)


@dataclass(frozen=True)
class HarnackData:
    """C = sup over base pairs in F and boundary points of V of the ratio of
    exit densities; r and R are the Euclidean ball radii in the centered
    disc model."""

    C: float
    r: float
    R: float


def harnack_constant(pair: BallPair) -> HarnackData:
    """Closed form of the Harnack constant of the ball pair.

    An isometry to the disc model sends the balls to Euclidean discs of radii
    tanh(delta/2) < tanh(delta_prime/2); exit densities become Poisson
    kernels, and the extreme ratio is ((R+r)/(R-r))^2.
    """
    r = math.tanh(pair.delta / 2.0)
    R = math.tanh(pair.delta_prime / 2.0)
    return HarnackData(C=((R + r) / (R - r)) ** 2, r=r, R=R)


def _to_disc(cx: float, cy: float, x: float, y: float) -> complex:
    """Isometry of the half-plane onto the unit disc sending (cx, cy) to 0."""
    z = complex(x, y)
    c = complex(cx, cy)
    return (z - c) / (z - c.conjugate())


def kappa(
    center: HalfPlanePoint,
    pos_at_r: HalfPlanePoint,
    exit_at_s: HalfPlanePoint,
    data: HarnackData,
    tol: float = 1e-4,
) -> float:
    """Rejection weight of one ladder rung.

    (1/C) times the ratio of the Poisson kernels of the exit disc seen from
    the ball center and from the entry position, evaluated at the exit point;
    always within [1/C^2, 1].
    """
    p = _to_disc(center.x, center.y, pos_at_r.x, pos_at_r.y)
    z = _to_disc(center.x, center.y, exit_at_s.x, exit_at_s.y)
    return _kappa_disc(p, z, data, tol)


def _kappa_disc(p: complex, z: complex, data: HarnackData, tol: float = 1e-4) -> float:
    C, r, R = data.C, data.r, data.R
    if abs(p) > r * (1.0 + tol) + tol:
        raise GeometryError("entry point is outside the inner ball")
    if abs(abs(z) - R) > tol:
        raise GeometryError("exit point is not on the outer ball boundary")
    z = z / abs(z) * R
    val = abs(z - p) ** 2 / (C * (R * R - abs(p) ** 2))
    lo, hi = 1.0 / (C * C), 1.0
    if val < lo - 1e-9 or val > hi + 1e-9:
        raise GeometryError(f"rejection weight {val} escaped [1/C^2, 1]")
    return min(max(val, lo), hi)


def make_kappa_xy(data: HarnackData):
    """Raw-coordinate kernel used by the ensemble walker."""

    def kappa_xy(cx, cy, rx, ry, sx, sy):
        return _kappa_disc(_to_disc(cx, cy, rx, ry), _to_disc(cx, cy, sx, sy), data)

    return kappa_xy


@dataclass(frozen=True)
class DiscretizationTrace:
    """Full ladder record of one path.

    Rung arrays are indexed by the ladder step n >= 1; `accepted` marks the
    accepted subsequence, and per-accept arrays carry the regeneration data
    (clock, tile word length, reduced increment from the previous accept).
    """

    path_id: int
    s0: float
    n: np.ndarray
    R: np.ndarray
    S: np.ndarray
    X_len: np.ndarray
    kappa: np.ndarray
    alpha: np.ndarray
    accepted: np.ndarray
    words: list | None
    acc_n: np.ndarray
    acc_S: np.ndarray
    acc_word_len: np.ndarray
    increments: list

    @property
    def k(self) -> int:
        return int(self.acc_n.size)

    def check_monotone(self) -> None:
        times = [self.s0]
        for rn, sn in zip(self.R, self.S):
            times.extend((rn, sn))
        if any(b < a - 1e-12 for a, b in zip(times, times[1:])):
            raise GeometryError("ladder times are not monotone")


def _trace_from_result(res: _paths.PathResult) -> DiscretizationTrace:
    f = res.fls
    return DiscretizationTrace(
        path_id=res.path_id,
        s0=f.s0,
        n=f.n,
        R=f.R,
        S=f.S,
        X_len=f.word_len,
        kappa=f.kappa,
        alpha=f.alpha,
        accepted=f.accepted,
        words=f.words,
        acc_n=f.acc_n,
        acc_S=f.acc_S,
        acc_word_len=f.acc_word_len,
        increments=f.increments,
    )


def run_discretization(
    params: PathParams,
    preset: SurfacePreset,
    pair: BallPair,
    k_target: int,
    horizon: float | None = None,
    path_id: int = 0,
    store_words: bool = False,
) -> DiscretizationTrace:
    """Simulate one path until `k_target` accepted regenerations."""
    traces = run_discretization_ensemble(
        params, preset, pair, k_target, n_paths=1, horizon=horizon,
        first_id=path_id, store_words=store_words,
    )
    return traces[0]


def run_discretization_ensemble(
    params: PathParams,
    preset: SurfacePreset,
    pair: BallPair,
    k_target: int,
    n_paths: int,
    horizon: float | None = None,
    threads: int = 1,
    first_id: int = 0,
    store_words: bool = False,
) -> list[DiscretizationTrace]:
    pair.validate(preset)
    data = harnack_constant(pair)
    cfg = _paths.WalkConfig(
        preset=preset,
        params=params,
        horizon=horizon,
        fls=_paths.FlsConfig(
            delta=pair.delta,
            delta_prime=pair.delta_prime,
            kappa_xy=make_kappa_xy(data),
            k_target=k_target,
            store_rung_words=store_words,
        ),
    )
    results = _paths.run_walks(cfg, params.seed, n_paths, threads=threads,
                               first_id=first_id)
    for res in results:
        if res.status == "horizon":
            raise HorizonExceededError(
                f"path {res.path_id} hit the clock cap before {k_target} accepts"
            )
    return [_trace_from_result(r) for r in results]


def increment_law(traces) -> dict[str, float]:
    """Empirical law of the accepted increments, word -> frequency."""
    counts: dict[str, int] = {}
    total = 0
    for tr in traces:
        for w in tr.increments:
            counts[w] = counts.get(w, 0) + 1
            total += 1
    if total == 0:
        return {}
    return {w: c / total for w, c in sorted(counts.items())}


def estimate_T(traces, k: int | None = None) -> tuple[float, float]:
    """Mean and standard error of S_{N_k}/k at the largest shared k."""
    traces = list(traces)
    if len(traces) < 30:
        raise InsufficientDataError("need at least 30 traces")
    k_shared = min(tr.k for tr in traces)
    if k is not None:
        if k > k_shared:
            raise InsufficientDataError(f"only {k_shared} accepts shared, wanted {k}")
        k_shared = k
    if k_shared < 100:
        raise InsufficientDataError("need at least 100 accepted increments per trace")
    vals = np.array([tr.acc_S[k_shared - 1] / k_shared for tr in traces])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))
