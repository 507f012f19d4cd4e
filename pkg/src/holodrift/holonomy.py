"""Monodromy representations, random-walk holonomy norms, pole tracking, and
the event-rate estimators for the norm-growth diagnostics.

Walk products are kept in log-scaled form (unit-scale matrix plus a log
factor), since norms reach exp(thousands) long before the walk ends.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import mobius as mb
from .fls import DiscretizationTrace
from .hypgeom import SurfacePreset, word_inverse

LOG_NORM_POLE_TOL = 1e-9


class UnknownLabelError(KeyError):
    pass


class NotHyperbolicMonodromyError(ValueError):
    pass


class ElementarySuspectedWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# scaled matrices

@dataclass(frozen=True)
class ScaledMatrix:
    """Matrix e^{log_scale} * mat with det = 1 and max-entry of mat near 1."""

    mat: np.ndarray
    log_scale: float

    @staticmethod
    def identity() -> "ScaledMatrix":
        return ScaledMatrix(np.eye(2, dtype=complex), 0.0)

    @staticmethod
    def from_moebius(m: mb.MoebiusMatrix) -> "ScaledMatrix":
        scale = float(np.max(np.abs(m.mat)))
        return ScaledMatrix(m.mat / scale, math.log(scale))

    def __matmul__(self, other: "ScaledMatrix") -> "ScaledMatrix":
        prod = self.mat @ other.mat
        scale = float(np.max(np.abs(prod)))
        return ScaledMatrix(prod / scale,
                            self.log_scale + other.log_scale + math.log(scale))

    def inverse(self) -> "ScaledMatrix":
        a, b, c, d = self.mat.ravel()
        adj = np.array([[d, -b], [-c, a]])
        scale = float(np.max(np.abs(adj)))
        return ScaledMatrix(adj / scale, self.log_scale + math.log(scale))

    def log_norm(self) -> float:
        """log of the largest singular value of the original det-1 matrix."""
        t = float(np.sum(np.abs(self.mat) ** 2))
        det = abs(self.mat[0, 0] * self.mat[1, 1] - self.mat[0, 1] * self.mat[1, 0])
        disc = max(t * t - 4.0 * det * det, 0.0)
        top = (t + math.sqrt(disc)) / 2.0
        return 0.5 * math.log(top) + self.log_scale

    def poles(self) -> tuple[mb.SpherePoint, mb.SpherePoint] | None:
        """(s, n) when the norm exceeds 1; None otherwise.

        Stable at any scale: the singular directions come from the unit-scale
        factor alone.
        """
        if self.log_norm() <= LOG_NORM_POLE_TOL:
            return None
        a = self.mat
        t = float(np.sum(np.abs(a) ** 2))
        det = abs(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
        disc = max(t * t - 4.0 * det * det, 0.0)
        top = (t + math.sqrt(disc)) / 2.0
        right = mb._hermitian_top_eigvec(a.conj().T @ a, top)
        left = mb._hermitian_top_eigvec(a @ a.conj().T, top)
        s = mb.SpherePoint(right[0], right[1]).antipode().canonical()
        n = mb.SpherePoint(left[0], left[1]).canonical()
        return s, n

    def to_moebius(self) -> mb.MoebiusMatrix:
        """Materialize as an explicit det-1 matrix.

        Beyond log-norm ~7 the determinant of the materialized entries is
        rounding-dominated (error ~ eps * norm^2), so larger products must
        stay in scaled form.
        """
        if abs(self.log_scale) > 7.0:
            raise OverflowError("matrix too large to materialize; keep it scaled")
        return mb.MoebiusMatrix.normalized(self.mat * math.exp(self.log_scale))


# ---------------------------------------------------------------------------
# representations

@dataclass(frozen=True)
class Representation:
    """Assignment of a matrix to every generator letter (inverses included)."""

    gens: dict
    lambda_rep: float

    @staticmethod
    def from_pair(a: mb.MoebiusMatrix, b: mb.MoebiusMatrix) -> "Representation":
        gens = {"a": a, "A": a.inverse(), "b": b, "B": b.inverse()}
        lam = max(math.log(mb.operator_norm(m)) for m in gens.values())
        return Representation(gens=gens, lambda_rep=lam)

    def gen(self, letter: str) -> mb.MoebiusMatrix:
        try:
            return self.gens[letter]
        except KeyError:
            raise UnknownLabelError(letter) from None


def rep_of_word_scaled(rep: Representation, w: str) -> ScaledMatrix:
    out = ScaledMatrix.identity()
    for g in w:
        out = out @ ScaledMatrix.from_moebius(rep.gen(g))
    return out


def rep_of_word(rep: Representation, w: str) -> mb.MoebiusMatrix:
    """Homomorphism evaluation; empty word gives the identity."""
    return rep_of_word_scaled(rep, w).to_moebius()


def builtin_representation(name: str, preset: SurfacePreset) -> Representation:
    """'fuchsian' embeds the surface group itself; 'twisted' sends one
    generator to diag(2, 1/2) and the other to a rotated diagonal, which makes
    the cusp loop hyperbolic."""
    if name == "fuchsian":
        mats = {}
        for lab, m in preset.generators:
            mats[lab] = mb.MoebiusMatrix(m.mat.astype(complex))
        return Representation.from_pair(mats["a"], mats["b"])
    if name == "twisted":
        # the rotation angle and diagonal are chosen so the image of the cusp
        # loop of the one-cusp preset has trace ~ -5.7 (hyperbolic)
        a = mb.MoebiusMatrix.diagonal(2.0)
        th = 0.7
        rot = np.array([[math.cos(th), -math.sin(th)],
                        [math.sin(th), math.cos(th)]], dtype=complex)
        b = mb.MoebiusMatrix(rot @ np.diag([4.0, 1.0 / 4.0]) @ rot.T)
        return Representation.from_pair(a, b)
    raise ValueError(f"unknown representation {name!r}")


# ---------------------------------------------------------------------------
# walk records

@dataclass(frozen=True)
class WalkRecord:
    k: int
    log_norm: float
    s_pole: mb.SpherePoint | None
    n_pole: mb.SpherePoint | None
    clock: float
    word_len: int
    mat: ScaledMatrix


@dataclass(frozen=True)
class HolonomyWalk:
    """The walk along one discretization trace: Y_k evaluated on the accepted
    tile words, with increments available from the trace."""

    trace: DiscretizationTrace
    records: list

    @property
    def k_max(self) -> int:
        return len(self.records) - 1


def holonomy_process(rep: Representation, trace: DiscretizationTrace) -> HolonomyWalk:
    y = ScaledMatrix.identity()
    records = [WalkRecord(0, 0.0, None, None, trace.s0, 0, y)]
    for k, inc in enumerate(trace.increments, start=1):
        y = y @ rep_of_word_scaled(rep, inc)
        pol = y.poles()
        s, n = pol if pol is not None else (None, None)
        records.append(WalkRecord(
            k=k,
            log_norm=y.log_norm(),
            s_pole=s,
            n_pole=n,
            clock=float(trace.acc_S[k - 1]),
            word_len=int(trace.acc_word_len[k - 1]),
            mat=y,
        ))
    return HolonomyWalk(trace=trace, records=records)


def norm_bound_audit(walks, rep: Representation, tol: float = 1e-9) -> int:
    """Count of records violating log|Y_k| <= lambda_rep * |X_{N_k}| and the
    same bound for every increment; zero by submultiplicativity."""
    bad = 0
    for walk in walks:
        for rec in walk.records[1:]:
            if rec.log_norm > rep.lambda_rep * rec.word_len + tol * max(1.0, rec.word_len):
                bad += 1
        for inc in walk.trace.increments:
            y = rep_of_word_scaled(rep, inc)
            if y.log_norm() > rep.lambda_rep * len(inc) + tol * max(1.0, len(inc)):
                bad += 1
    return bad


# ---------------------------------------------------------------------------
# growth diagnostics

H_FUNCS = {
    "t_log2_t": (lambda t, c=1.0: c * t * np.log(t) ** 2, False),
    "t_log_t_loglog2": (lambda t, c=1.0: c * t * np.log(t) * np.log(np.log(t)) ** 2, False),
    "t_log_t": (lambda t, c=1.0: c * t * np.log(t), True),
    "t_sqrt_log_t": (lambda t, c=1.0: c * t * np.sqrt(np.log(t)), True),
}
"""Named gauge functions; the boolean declares divergence of the integral of
dt/h (the dichotomy input), it is never inferred."""


@dataclass(frozen=True)
class GrowthReport:
    k: np.ndarray
    median_log_norm: np.ndarray
    frac_above: np.ndarray
    threshold: float
    running_inf: np.ndarray          # per path, of log|Y|/(S log S)
    h_ratio_median: np.ndarray | None
    elementary_suspected: bool


def growth_report(
    walks,
    threshold: float = 10.0,
    h_name: str | None = None,
    h_coef: float = 1.0,
) -> GrowthReport:
    k_max = min(w.k_max for w in walks)
    ks = np.arange(1, k_max + 1)
    lognorms = np.array([[w.records[k].log_norm for k in ks] for w in walks])
    clocks = np.array([[w.records[k].clock for k in ks] for w in walks])
    med = np.median(lognorms, axis=0)
    frac = (lognorms > math.log(threshold)).mean(axis=0)

    run_inf = np.full(len(walks), np.inf)
    for i in range(len(walks)):
        mask = clocks[i] > math.e
        if mask.any():
            ratios = lognorms[i][mask] / (clocks[i][mask] * np.log(clocks[i][mask]))
            run_inf[i] = float(np.min(ratios))

    h_med = None
    if h_name is not None:
        h_fn = H_FUNCS[h_name][0]
        with np.errstate(divide="ignore", invalid="ignore"):
            hr = lognorms / h_fn(np.maximum(clocks, math.e + 1e-9), h_coef)
        h_med = np.median(hr, axis=0)

    half = max(1, k_max // 2)
    elementary = bool(med[k_max - 1] <= med[half - 1] + 1e-12)
    if elementary:
        warnings.warn(
            "median log-norm did not grow over the second half of the walk; "
            "the representation may be elementary",
            ElementarySuspectedWarning,
        )
    return GrowthReport(
        k=ks,
        median_log_norm=med,
        frac_above=frac,
        threshold=threshold,
        running_inf=run_inf,
        h_ratio_median=h_med,
        elementary_suspected=elementary,
    )


def pole_convergence(walks) -> np.ndarray:
    """Chordal distance from n(Y_k) to n(Y_{k_max}) for k >= k_max/2, pooled
    per path medians."""
    out = []
    for w in walks:
        final = w.records[w.k_max].n_pole
        if final is None:
            continue
        ds = [mb.chordal_distance(rec.n_pole, final)
              for rec in w.records[w.k_max // 2:]
              if rec.n_pole is not None]
        if ds:
            out.append(float(np.median(ds)))
    return np.array(out)


# ---------------------------------------------------------------------------
# event rates

def loop_power(word: str, loop: str) -> int | None:
    """Exponent n != 0 when `word` is exactly the n-th power of the cusp loop
    (or of its inverse); None otherwise."""
    lw = len(loop)
    if lw == 0 or len(word) == 0 or len(word) % lw:
        return None
    n = len(word) // lw
    if word == loop * n:
        return n
    if word == word_inverse(loop) * n:
        return -n
    return None


@dataclass(frozen=True)
class EventReport:
    k: np.ndarray
    freq_A: np.ndarray
    freq_B: np.ndarray
    freq_E: np.ndarray
    A: np.ndarray                 # paths x k booleans
    B: np.ndarray
    E: np.ndarray                 # nan where the pole is undefined
    osc1: np.ndarray              # 1 ok / 0 violated / nan unchecked
    osc3: np.ndarray
    osc1_violations: int
    osc3_violations: int
    params: dict = field(default_factory=dict)

    @property
    def osc1_checked(self) -> np.ndarray:
        return (~np.isnan(self.osc1)).sum(axis=0).astype(float)

    @property
    def osc3_checked(self) -> np.ndarray:
        return (~np.isnan(self.osc3)).sum(axis=0).astype(float)


def default_beta(k: int) -> float:
    """Null sequence for the pole-distance events.

    Exponential decay makes the upward trend of the event frequency visible
    at desk-scale walk lengths: the pole measure carries mass within any
    fixed chordal radius of the target point, so slowly decaying sequences
    (k^{-1/4} and the like) stall below the asymptote for reachable k.
    """
    return math.exp(-k / 16.0)


def event_rates(
    walks,
    rep: Representation,
    alpha0: str,
    lambda_prime: float,
    h_tilde=None,
    beta=None,
    boundary_samples: int = 64,
) -> EventReport:
    """Empirical frequencies of the pole-distance, cusp-power, and norm-cap
    events, plus the two contraction containments checked at every k.

    alpha0 is the cusp loop word; its image must be hyperbolic since the
    pole-distance event is measured against its attracting point.
    """
    g0 = rep_of_word(rep, alpha0)
    if abs(g0.trace()) <= 2.0 + 1e-9:
        raise NotHyperbolicMonodromyError(
            "the cusp monodromy is not hyperbolic; no attracting point")
    z0 = mb.hyperbolic_data(g0).attracting
    if h_tilde is None:
        h_tilde = lambda k: math.log(k)
    if beta is None:
        beta = default_beta

    k_max = min(w.k_max for w in walks)
    ks = np.arange(1, k_max + 1)
    n_walks = len(walks)
    A = np.zeros((n_walks, k_max), dtype=bool)
    B = np.zeros((n_walks, k_max), dtype=bool)
    E = np.full((n_walks, k_max), np.nan)
    osc1 = np.full((n_walks, k_max), np.nan)
    osc3 = np.full((n_walks, k_max), np.nan)

    for wi, w in enumerate(walks):
        for k in range(1, k_max + 1):
            rec = w.records[k]
            prev = w.records[k - 1]
            # norm cap
            cap = lambda_prime * k * math.log(k) if k >= 2 else 0.0
            a_holds = rec.log_norm <= cap
            A[wi, k - 1] = a_holds
            # pure cusp power with large exponent
            n = loop_power(w.trace.increments[k - 1], alpha0)
            B[wi, k - 1] = n is not None and n >= h_tilde(k)
            # pole distance of the previous step
            if prev.s_pole is not None:
                E[wi, k - 1] = mb.chordal_distance(prev.s_pole, z0) >= beta(k)
            # containment item 1: complement of D(s, 1/norm) maps into the
            # closed disc of the same radius about n
            if rec.s_pole is not None:
                ln = rec.log_norm
                alpha = math.exp(-ln)
                ok1 = _log_image_cap_radius(ln, -ln) <= -ln + 1e-12
                if ok1 and alpha > 1e-8 and boundary_samples:
                    pts = mb.chordal_circle_points(rec.s_pole, alpha,
                                                   boundary_samples)
                    mmat = rec.mat.mat
                    for p in pts:
                        v = mmat @ np.array([p.z, p.w])
                        img = mb.SpherePoint.from_pair(v[0], v[1])
                        if mb.chordal_distance(img, rec.n_pole) > alpha + mb.SAMPLE_TOL:
                            ok1 = False
                            break
                osc1[wi, k - 1] = ok1
                # containment item 3 under the norm cap
                if a_holds and 4.0 * ln >= math.log(1.5) and k >= 2:
                    log_alpha3 = -2.0 * lambda_prime * k * math.log(k)
                    osc3[wi, k - 1] = (
                        _log_image_cap_radius(ln, log_alpha3) >= math.log(0.5)
                    )

    seen_E = (~np.isnan(E)).sum(axis=0)
    cnt_E = np.nansum(E, axis=0)
    return EventReport(
        k=ks,
        freq_A=A.mean(axis=0),
        freq_B=B.mean(axis=0),
        freq_E=np.divide(cnt_E, seen_E, out=np.zeros(k_max), where=seen_E > 0),
        A=A,
        B=B,
        E=E,
        osc1=osc1,
        osc3=osc3,
        osc1_violations=int(np.nansum(osc1 == 0.0)),
        osc3_violations=int(np.nansum(osc3 == 0.0)),
        params={
            "alpha0": alpha0,
            "lambda_prime": lambda_prime,
            "lambda_rep": rep.lambda_rep,
            "z0": (z0.z, z0.w),
        },
    )


def _log_image_cap_radius(log_norm: float, log_alpha: float) -> float:
    """log of the image-cap radius, computed without under/overflow:
    r^2 = (1 - a^2) / (1 - a^2 + norm^4 a^2)."""
    log_a2 = 2.0 * log_alpha
    log_one_minus_a2 = math.log1p(-math.exp(log_a2)) if log_a2 < -1e-15 else -math.inf
    log_num = log_one_minus_a2
    log_big = 4.0 * log_norm + log_a2
    log_den = np.logaddexp(log_one_minus_a2, log_big)
    return 0.5 * (log_num - log_den)
