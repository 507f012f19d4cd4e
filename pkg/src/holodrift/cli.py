"""Experiment orchestration: structured config, subcommands, deterministic
parallel ensembles, and bit-stable CSV/JSON artifacts.

Output bytes are a pure function of (config, master seed); worker count only
changes scheduling.  Floating point goes to CSV with 17 significant digits.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import __version__
from . import brownian, fls, holonomy, hypgeom, mobius as mb, paths, wordstats

SCHEMA_VERSION = "holodrift-v1"

# path-id blocks keep the substreams of different experiments disjoint
ID_BLOCK = {
    "simulate": 0,
    "discretize": 1_000_000,
    "wordstats": 2_000_000,
    "winding": 3_000_000,
    "holonomy": 4_000_000,
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    surface: object = "thrice_punctured"
    seed: int = 1
    max_step: float = 0.05
    clock_convention: str = "laplacian"
    delta: float | None = None
    delta_prime: float | None = None
    paths: int = 8
    k_target: int = 40
    horizon: float | None = None
    fls_horizon: float | None = None
    t_grid: list = field(default_factory=lambda: [50.0, 100.0, 150.0, 200.0,
                                                  250.0, 300.0, 350.0, 400.0])
    rep: object = "fuchsian"
    alpha0: str | None = None
    h: dict = field(default_factory=lambda: {"name": "t_log_t", "coef": 1.0})
    h_tilde: str = "log"
    lambda_prime: float | None = None
    beta: str = "exp16"
    winding_a: float = math.log(5.0)
    winding_paths: int = 20000
    decimate: int = 50
    threads: int | None = None
    out: str = "out"

    def resolved_threads(self) -> int:
        if self.threads is not None:
            return max(1, int(self.threads))
        env = os.environ.get("HOLODRIFT_THREADS")
        return max(1, int(env)) if env else 1


_BETAS = {
    "exp16": holonomy.default_beta,
    "quarter": lambda k: float(k) ** -0.25,
}

_H_TILDES = {
    "log": lambda k: math.log(k),
    "sqrt": lambda k: math.sqrt(k),
}


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig()
    for key, value in data.items():
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.paths < 1:
        raise ConfigError("paths: ensemble size must be >= 1")
    grid = list(cfg.t_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("t_grid: values must be strictly increasing")
    if grid and grid[0] <= math.e ** 2:
        raise ConfigError("t_grid: must start above e^2")
    if isinstance(cfg.rep, str) and cfg.rep not in ("fuchsian", "twisted"):
        raise ConfigError(f"rep: unknown representation {cfg.rep!r}")
    if cfg.h.get("name") not in holonomy.H_FUNCS:
        raise ConfigError(f"h: unknown gauge function {cfg.h.get('name')!r}")
    if cfg.h_tilde not in _H_TILDES:
        raise ConfigError(f"h_tilde: unknown function {cfg.h_tilde!r}")
    if cfg.beta not in _BETAS:
        raise ConfigError(f"beta: unknown sequence {cfg.beta!r}")
    if cfg.clock_convention not in brownian.CLOCK_CONVENTIONS:
        raise ConfigError(f"clock_convention: must be one of "
                          f"{brownian.CLOCK_CONVENTIONS}")
    if isinstance(cfg.surface, str):
        try:
            hypgeom.preset_surface(cfg.surface)
        except hypgeom.UnknownPresetError as exc:
            raise ConfigError(f"surface: {exc}") from exc


def _surface(cfg: ExperimentConfig) -> hypgeom.SurfacePreset:
    if isinstance(cfg.surface, str):
        return hypgeom.preset_surface(cfg.surface)
    return hypgeom.preset_from_dict(cfg.surface)


def _ball_pair(cfg: ExperimentConfig, preset) -> fls.BallPair:
    if cfg.delta is None and cfg.delta_prime is None:
        return fls.default_ball_pair(preset)
    dp = cfg.delta_prime if cfg.delta_prime is not None \
        else 0.4 * preset.min_displacement
    d = cfg.delta if cfg.delta is not None else dp / 2.0
    pair = fls.BallPair(delta=d, delta_prime=dp)
    pair.validate(preset)
    return pair


def _params(cfg: ExperimentConfig) -> brownian.PathParams:
    return brownian.PathParams(max_step=cfg.max_step, seed=cfg.seed,
                               clock_convention=cfg.clock_convention)


def _representation(cfg: ExperimentConfig, preset) -> holonomy.Representation:
    if isinstance(cfg.rep, str):
        return holonomy.builtin_representation(cfg.rep, preset)
    def matrix(entries):
        arr = np.array([[complex(*entries[0]), complex(*entries[1])],
                        [complex(*entries[2]), complex(*entries[3])]])
        return mb.MoebiusMatrix.normalized(arr)
    return holonomy.Representation.from_pair(matrix(cfg.rep["a"]),
                                             matrix(cfg.rep["b"]))


# ---------------------------------------------------------------------------
# stable serialization

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    return f"{x:.17g}"


class ArtifactWriter:
    """Writes files under one directory, hashing them for the manifest."""

    def __init__(self, outdir: str):
        self.root = Path(outdir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def csv(self, name: str, header: str, rows) -> Path:
        path = self.root / name
        with open(path, "w", newline="\n") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
        self._register(path)
        return path

    def json(self, name: str, obj) -> Path:
        path = self.root / name
        with open(path, "w", newline="\n") as fh:
            json.dump(_plain(obj), fh, sort_keys=True, indent=2)
            fh.write("\n")
        self._register(path)
        return path

    def _register(self, path: Path) -> None:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.files[str(path.relative_to(self.root))] = f"sha256:{digest}"

    def manifest(self, cfg: ExperimentConfig, command: str, wall: float,
                 extra: dict | None = None) -> Path:
        body = {
            "schema": SCHEMA_VERSION,
            "command": command,
            "config": _plain(asdict(cfg)),
            "master_seed": cfg.seed,
            "versions": {
                "holodrift": __version__,
                "numpy": np.__version__,
                "python": ".".join(str(v) for v in sys.version_info[:3]),
            },
            "wall_time_s": wall,
            "files": dict(sorted(self.files.items())),
        }
        if extra:
            body.update(_plain(extra))
        path = self.root / "manifest.json"
        with open(path, "w", newline="\n") as fh:
            json.dump(body, fh, sort_keys=True, indent=2)
            fh.write("\n")
        return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(cfg: ExperimentConfig, writer: ArtifactWriter) -> int:
    params = _params(cfg)
    preset = _surface(cfg)
    horizon = cfg.horizon if cfg.horizon is not None else 10.0
    for i in range(cfg.paths):
        state = brownian.initial_state(params, preset.base,
                                       path_index=ID_BLOCK["simulate"] + i)
        rows = [(0.0, state.position.x, state.position.y)]
        step = 0
        while state.clock < horizon:
            state = brownian.bm_step(state, params)
            step += 1
            if step % max(1, cfg.decimate) == 0:
                rows.append((state.clock, state.position.x, state.position.y))
        writer.csv(f"path_{i:04d}.csv", "t,x,y", rows)
    return 0


def cmd_winding(cfg: ExperimentConfig, writer: ArtifactWriter) -> int:
    params = _params(cfg)
    a = float(cfg.winding_a)
    theta = brownian.winding_exit_samples(a, int(cfg.winding_paths), params,
                                          master_seed=cfg.seed,
                                          first_id=ID_BLOCK["winding"])
    ks = float(sps.kstest(theta, lambda x: brownian.cauchy_cdf(x, a)).statistic)
    lim = 8.0 * a
    edges = np.linspace(-lim, lim, 81)
    counts, _ = np.histogram(theta, bins=edges)
    widths = np.diff(edges)
    dens = counts / counts.sum() / widths
    rows = [
        (edges[i], edges[i + 1], int(counts[i]), dens[i],
         float(brownian.cauchy_density(0.5 * (edges[i] + edges[i + 1]), a)))
        for i in range(len(counts))
    ]
    writer.csv("winding_hist.csv",
               "bin_left,bin_right,count,density,cauchy_density", rows)
    writer.json("winding_summary.json", {
        "a": a,
        "ks_stat": ks,
        "n_paths": int(cfg.winding_paths),
        "threshold": 0.02,
        "passed": ks < 0.02,
    })
    return 0 if ks < 0.02 else 1


def cmd_discretize(cfg: ExperimentConfig, writer: ArtifactWriter) -> int:
    params = _params(cfg)
    preset = _surface(cfg)
    pair = _ball_pair(cfg, preset)
    data = fls.harnack_constant(pair)
    traces = fls.run_discretization_ensemble(
        params, preset, pair, cfg.k_target, cfg.paths,
        horizon=cfg.fls_horizon, threads=cfg.resolved_threads(),
        first_id=ID_BLOCK["discretize"], store_words=True,
    )
    rows = []
    for tr in traces:
        words = tr.words if tr.words is not None else [""] * len(tr.n)
        for j in range(len(tr.n)):
            rows.append((tr.path_id, tr.n[j], tr.S[j], tr.R[j], words[j],
                         tr.kappa[j], tr.alpha[j], bool(tr.accepted[j])))
    writer.csv("trace.csv", "path,n,S,R,word,kappa,alpha,accepted", rows)
    writer.json("increments.json", fls.increment_law(traces))
    summary = {
        "C": data.C,
        "delta": pair.delta,
        "delta_prime": pair.delta_prime,
        "paths": cfg.paths,
        "k_target": cfg.k_target,
        "acceptance_rate": float(np.mean(np.concatenate(
            [tr.accepted for tr in traces]).astype(float))),
        "kappa_min": float(min(tr.kappa.min() for tr in traces)),
        "kappa_max": float(max(tr.kappa.max() for tr in traces)),
    }
    if len(traces) >= 30 and min(tr.k for tr in traces) >= 100:
        t_hat, t_err = fls.estimate_T(traces)
        summary["T_hat"] = t_hat
        summary["T_stderr"] = t_err
    writer.json("discretize_summary.json", summary)
    return 0


def cmd_wordstats(cfg: ExperimentConfig, writer: ArtifactWriter) -> int:
    params = _params(cfg)
    preset = _surface(cfg)
    grid = np.asarray(cfg.t_grid, dtype=float)
    horizon = cfg.horizon if cfg.horizon is not None else float(grid[-1])
    walk_cfg = paths.WalkConfig(
        preset=preset, params=params, horizon=horizon, track_cusps=True,
        t_grid=grid, record_crossings=True,
    )
    results = paths.run_walks(walk_cfg, cfg.seed, cfg.paths,
                              threads=cfg.resolved_threads(),
                              first_id=ID_BLOCK["wordstats"])
    L, _ = wordstats.grid_lengths(results, grid)
    g = grid * np.log(grid)
    rows = []
    for j, t in enumerate(grid):
        for i, res in enumerate(results):
            rows.append((t, res.path_id, int(L[i, j]), L[i, j] / g[j]))
    writer.csv("ratios.csv", "t,path_id,L,ratio", rows)

    exc_rows = []
    for res in results:
        for k, e in enumerate(res.excursions or [], start=1):
            exc_rows.append((res.path_id, k, e.t_u, e.t_v,
                             round(e.theta / (2 * math.pi))))
    writer.csv("excursions.csv", "path,k,U,V,loops", exc_rows)

    n_pilot = max(1, cfg.paths // 2)
    pilot, rest = results[:n_pilot], results[n_pilot:] or results
    c_pilot = wordstats.pilot_constant(pilot, float(grid[0]), 0.9)
    quants = {q: (np.quantile(L / g[None, :], q, axis=0)).tolist()
              for q in (0.1, 0.25, 0.5, 0.75, 0.9)}
    L_rest, _ = wordstats.grid_lengths(rest, grid)
    prob = (L_rest <= c_pilot * g[None, :]).mean(axis=0)
    report = wordstats.excursion_word_stats(results, preset)
    summary = {
        "t_grid": grid.tolist(),
        "quantiles": {str(k): v for k, v in quants.items()},
        "pilot_C": c_pilot,
        "pilot_quantile": 0.9,
        "pilot_t": float(grid[0]),
        "prob_below_pilot_C": prob.tolist(),
        "cauchy_a": [wordstats.cauchy_parameter(c) for c in preset.cusps],
        "n_excursions": int(len(report.loop_counts)),
        "loop_tail_levels": [10, 30, 100],
        "loop_tail_profile": wordstats.loop_tail_profile(
            report.loop_counts, [10, 30, 100]).tolist(),
        "decomposition_failures": report.decomposition_failures,
        "power_mismatches": report.power_mismatches,
    }
    writer.json("wordstats_summary.json", summary)
    return 0


def cmd_holonomy(cfg: ExperimentConfig, writer: ArtifactWriter) -> int:
    params = _params(cfg)
    preset = _surface(cfg)
    pair = _ball_pair(cfg, preset)
    data = fls.harnack_constant(pair)
    rep = _representation(cfg, preset)
    alpha0 = cfg.alpha0 if cfg.alpha0 is not None else preset.cusps[0].loop_word
    traces = fls.run_discretization_ensemble(
        params, preset, pair, cfg.k_target, cfg.paths,
        horizon=cfg.fls_horizon, threads=cfg.resolved_threads(),
        first_id=ID_BLOCK["holonomy"],
    )
    walks = [holonomy.holonomy_process(rep, tr) for tr in traces]
    t_hat = float(np.mean([tr.acc_S[-1] / tr.k for tr in traces]))
    lam_p = cfg.lambda_prime if cfg.lambda_prime is not None \
        else 2.0 * rep.lambda_rep * data.C * t_hat
    try:
        report = holonomy.event_rates(
            walks, rep, alpha0, lam_p,
            h_tilde=_H_TILDES[cfg.h_tilde], beta=_BETAS[cfg.beta],
        )
    except holonomy.NotHyperbolicMonodromyError as exc:
        report = None
        skip_reason = str(exc)
    growth = holonomy.growth_report(walks, h_name=cfg.h["name"],
                                    h_coef=cfg.h.get("coef", 1.0))
    k_shared = min(w.k_max for w in walks)
    rows = []
    for wi, walk in enumerate(walks):
        for k in range(1, k_shared + 1):
            rec = walk.records[k]
            s_nk = rec.clock
            ratio = (rec.log_norm / (s_nk * math.log(s_nk))
                     if s_nk > math.e else math.nan)
            if report is not None:
                ev = (bool(report.A[wi, k - 1]), bool(report.B[wi, k - 1]),
                      _tri(report.E[wi, k - 1]), _tri(report.osc1[wi, k - 1]),
                      _tri(report.osc3[wi, k - 1]))
            else:
                ev = ("na", "na", "na", "na", "na")
            rows.append((walk.trace.path_id, int(k), s_nk, rec.log_norm,
                         ratio) + ev)
    writer.csv("walk.csv", "path,k,S_Nk,lognorm,ratio_tlogt,Ak,Bk,Ek,osc1,osc3",
               rows)
    if report is not None:
        writer.json("events.json", {
            "k": report.k,
            "freq_A": report.freq_A,
            "freq_B": report.freq_B,
            "freq_E": report.freq_E,
            "osc1_violations": report.osc1_violations,
            "osc3_violations": report.osc3_violations,
            "params": dict(report.params, T_hat=t_hat, C=data.C,
                           beta=cfg.beta, h_tilde=cfg.h_tilde),
        })
    else:
        writer.json("events.json", {"skipped": skip_reason})
    writer.json("growth.json", {
        "k": growth.k,
        "median_log_norm": growth.median_log_norm,
        "frac_above": growth.frac_above,
        "threshold": growth.threshold,
        "running_inf": growth.running_inf,
        "h": cfg.h,
        "h_integral_diverges": holonomy.H_FUNCS[cfg.h["name"]][1],
        "elementary_suspected": growth.elementary_suspected,
    })
    return 0


def _tri(v) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "na"
    return "1" if v else "0"


def cmd_lemma_check(cfg: ExperimentConfig, writer: ArtifactWriter) -> int:
    checks = run_lemma_checks(cfg.seed)
    rows = [(name, "PASS" if ok else "FAIL", detail) for name, ok, detail in checks]
    writer.csv("lemma_checks.csv", "check,status,detail", rows)
    failed = [name for name, ok, _ in checks if not ok]
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
    return 1 if failed else 0


def run_lemma_checks(seed: int) -> list:
    """Deterministic exact-geometry suites (smaller cousins of the acceptance
    suite, suitable for a quick gate)."""
    rng = np.random.default_rng(seed)
    out = []

    worst = 0.0
    for _ in range(2000):
        m = _random_sl2(rng)
        ct = mb.cartan(m)
        worst = max(worst, float(np.max(np.abs(ct.reconstruct().mat - m.mat))))
    out.append(("cartan_reconstruction", worst <= 1e-9, f"residual {worst:.2e}"))

    v = mb.image_cap_radius(2.0, 1.0 / math.sqrt(5.0))
    out.append(("cap_radius_equivalence", abs(v - 1.0 / math.sqrt(5.0)) <= 1e-12,
                f"|r-alpha| {abs(v - 1/math.sqrt(5)):.2e}"))

    v = mb.alpha_for_half_cap(3.0 ** 0.25)
    out.append(("half_cap_alpha", abs(v - 1.0 / math.sqrt(2.0)) <= 1e-12,
                f"err {abs(v - 1/math.sqrt(2)):.2e}"))

    bad = 0
    for _ in range(20):
        h = _random_hyperbolic(rng)
        el = mb.hyperbolic_data(h)
        lam = abs(el.lambda_eig)
        for n in (1, 5, 15, 30):
            radius = el.c1 * lam ** -n
            if radius >= 1.0:
                continue
            mat = np.linalg.matrix_power(h.mat, n)
            for p in mb.chordal_circle_points(el.repelling, radius, 64):
                vv = mat @ np.array([p.z, p.w])
                img = mb.SpherePoint.from_pair(vv[0], vv[1])
                if mb.chordal_distance(img, el.attracting) > radius + 1e-6:
                    bad += 1
    out.append(("power_containment", bad == 0, f"violations {bad}"))

    worst = 0.0
    for _ in range(200):
        m = _random_sl2(rng)
        if mb.operator_norm(m) <= 1.0 + 1e-6:
            continue
        ct = mb.cartan(m)
        for _ in range(200):
            p = _random_point(rng)
            if mb.chordal_distance(p, ct.s) >= 1.0 / ct.lam:
                worst = max(worst, mb.spherical_derivative(m, p))
    out.append(("region_derivative_bound", worst <= 1.0 + 1e-9,
                f"max {worst:.12f}"))

    pair = fls.BallPair(0.5, 1.0)
    data = fls.harnack_constant(pair)
    oracle = _harnack_grid_oracle(pair, 401)
    rel = abs(data.C - oracle) / oracle
    out.append(("harnack_closed_form", rel < 1e-6,
                f"C {data.C:.6f} vs grid {oracle:.6f}"))
    return out


def _random_sl2(rng) -> mb.MoebiusMatrix:
    while True:
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        if abs(det) > 1e-3:
            return mb.MoebiusMatrix.normalized(g)


def _random_hyperbolic(rng) -> mb.MoebiusMatrix:
    # eigenvalue kept moderate so that iterated containment checks stay within
    # double precision: image noise grows like lam^(2n) * eps
    lam = math.exp(rng.uniform(0.05, 0.35))
    diag = mb.MoebiusMatrix.diagonal(lam)
    q = _random_sl2(rng)
    return mb.MoebiusMatrix(q.mat @ diag.mat @ q.inverse().mat)


def _random_point(rng) -> mb.SpherePoint:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return mb.SpherePoint.from_pair(v[0], v[1])


def _harnack_grid_oracle(pair: fls.BallPair, n: int) -> float:
    """Grid supremum of the Poisson-kernel ratio over base pairs and one
    boundary point (rotation reduces the boundary variable)."""
    r = math.tanh(pair.delta / 2.0)
    R = math.tanh(pair.delta_prime / 2.0)
    if n % 2 == 0:
        n += 1  # odd grids hit the aligned/antipodal extremes exactly
    xs = np.linspace(-r, r, n)
    ys = np.linspace(-r, r, n)
    gx, gy = np.meshgrid(xs, ys)
    inside = gx * gx + gy * gy <= r * r
    px = gx[inside]
    py = gy[inside]
    z = complex(R, 0.0)
    kern = (R * R - (px * px + py * py)) / np.abs(z - (px + 1j * py)) ** 2
    return float(kern.max() / kern.min())


def cmd_full_report(cfg: ExperimentConfig, writer: ArtifactWriter) -> int:
    status = 0
    for name, fn in (
        ("lemma_check", cmd_lemma_check),
        ("winding", cmd_winding),
        ("discretize", cmd_discretize),
        ("wordstats", cmd_wordstats),
        ("holonomy", cmd_holonomy),
        ("simulate", cmd_simulate),
    ):
        sub = ArtifactWriter(writer.root / name)
        rc = fn(cfg, sub)
        status = status or rc
        for rel, digest in sub.files.items():
            writer.files[f"{name}/{rel}"] = digest
    return status


COMMANDS = {
    "simulate-path": cmd_simulate,
    "discretize": cmd_discretize,
    "word-stats": cmd_wordstats,
    "winding-law": cmd_winding,
    "holonomy-growth": cmd_holonomy,
    "lemma-check": cmd_lemma_check,
    "full-report": cmd_full_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="holodrift",
        description="surface Brownian motion, discretized walks, and "
                    "holonomy-growth experiments",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--paths", type=int, default=None)
        p.add_argument("--k", dest="k_target", type=int, default=None)
        p.add_argument("--horizon", type=float, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--surface", default=None)
        p.add_argument("--rep", default=None)
        p.add_argument("--max-step", dest="max_step", type=float, default=None)
        p.add_argument("--clock", dest="clock_convention", default=None)
        p.add_argument("--a", dest="winding_a", type=float, default=None)
        p.add_argument("--winding-paths", dest="winding_paths", type=int,
                       default=None)
        p.add_argument("--t-grid", dest="t_grid", default=None,
                       help="comma separated times")
        p.add_argument("--decimate", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        k: getattr(args, k) for k in (
            "out", "seed", "paths", "k_target", "horizon", "threads",
            "surface", "rep", "max_step", "clock_convention", "winding_a",
            "winding_paths", "decimate",
        )
    }
    if args.t_grid is not None:
        overrides["t_grid"] = [float(v) for v in args.t_grid.split(",")]
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    writer = ArtifactWriter(cfg.out)
    t0 = time.time()
    try:
        rc = COMMANDS[args.command](cfg, writer)
    except (fls.HorizonExceededError, hypgeom.GeometryError,
            brownian.StepUnderflowError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 3
    writer.manifest(cfg, args.command, wall=time.time() - t0)
    return rc


if __name__ == "__main__":
    sys.exit(main())
