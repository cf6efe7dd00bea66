"""Scenario runner: reproducible convergence experiments from JSON configs.

``lab run config.json`` builds a family of spaces, runs the configured
checks (measure convergence, fdd gaps, path-law W1, tightness, mixing), and
writes report.json, per-check CSV tables, and a manifest with seeds and
versions.  Reruns with the same config are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
import scipy
import scipy.stats
from numpy.random import SeedSequence

from .convergence import (
    LipschitzTestFunction,
    SpaceFamily,
    entropy_tightness,
    fdd_convergence_report,
    initial_law_w1,
    pathlaw_baseline,
    pathlaw_w1,
    pmg_test,
)
from .heat import (
    feller_check,
    get_kernel,
    graph_generator,
    mixing_bound_check,
    set_generator,
    spectral_gap,
)
from .paths import (
    euler_maruyama,
    kolmogorov_moment,
    modulus_statistic,
    reflected_em,
    sample_kernel_chain,
)
from .spaces import (
    Circle,
    CollapseMap,
    EuclideanLogConcave,
    FiniteMms,
    Torus,
    box_domain,
    mesh_cone,
    quadratic_potential,
)
from .transport import DiscreteMeasure, wasserstein_1d

SCENARIOS = {
    "torus_collapse": "flat tori with shrinking second factor collapsing onto a circle",
    "cone_interval": "triangulated narrowing cones collapsing onto a weighted interval",
    "ou_family": "Ornstein-Uhlenbeck family V_n = (1+1/n)|x|^2/2 tightening to V = |x|^2/2",
    "reflected_family": "reflected Brownian motion on [0,1-1/n] growing to [0,1]",
    "custom_finite": "kernel-level checks on a finite space loaded from a flat file",
}


@dataclass
class ScenarioConfig:
    scenario: str
    n_grid: list = field(default_factory=lambda: [1, 2, 4, 8, 16])
    times: list = field(default_factory=lambda: [0.25, 0.75])
    test_functions: list = None
    mc_count: int = 10000
    dt: float = None
    seed: int = 1234
    out_dir: str = "out"
    resolution: int = 24
    eps_entropy: float = 0.1
    bins: int = 24
    path_T: float = 1.0
    modulus_eta: list = field(default_factory=lambda: [0.4, 0.2, 0.1, 0.05])
    modulus_delta: float = 0.5
    modulus_T: float = 0.3
    kolmogorov_beta: float = 4.0
    kolmogorov_h: list = field(default_factory=lambda: [0.0125, 0.025, 0.05, 0.1])
    fdd_budget_scale: float = 0.5
    ks_level: float = 0.01
    finite_file: str = None


def validate_dict(raw: dict) -> list:
    """Schema validation; returns a list of 'field: problem' strings."""
    errors = []
    known = {f.name for f in fields(ScenarioConfig)}
    for key in raw:
        if key not in known:
            errors.append("%s: unknown key" % key)
    kind = raw.get("scenario")
    if kind is None:
        errors.append("scenario: required")
    elif kind not in SCENARIOS:
        errors.append("scenario: unknown kind %r (valid: %s)" % (kind, ", ".join(sorted(SCENARIOS))))
    def positive(name, cls):
        v = raw.get(name)
        if v is not None and (not isinstance(v, cls) or isinstance(v, bool) or v <= 0):
            errors.append("%s: must be a positive %s" % (name, cls.__name__))
    positive("mc_count", int)
    positive("dt", (int, float))
    positive("resolution", int)
    positive("eps_entropy", (int, float))
    positive("bins", int)
    positive("path_T", (int, float))
    positive("modulus_delta", (int, float))
    positive("modulus_T", (int, float))
    positive("kolmogorov_beta", (int, float))
    positive("ks_level", (int, float))
    seed = raw.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        errors.append("seed: must be an integer")
    for name in ("n_grid", "times", "modulus_eta", "kolmogorov_h"):
        v = raw.get(name)
        if v is None:
            continue
        if not isinstance(v, list) or not v or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0 for x in v):
            errors.append("%s: must be a nonempty list of positive numbers" % name)
        elif name in ("n_grid", "times") and any(b <= a for a, b in zip(v, v[1:])):
            errors.append("%s: must be strictly increasing" % name)
    tf = raw.get("test_functions")
    if tf is not None and (not isinstance(tf, list) or not all(isinstance(x, str) for x in tf)):
        errors.append("test_functions: must be a list of names")
    if kind == "custom_finite":
        ff = raw.get("finite_file")
        if not isinstance(ff, str):
            errors.append("finite_file: required for custom_finite")
        elif not os.path.exists(ff):
            errors.append("finite_file: file not found: %s" % ff)
    return errors


def load_config(path: str) -> ScenarioConfig:
    with open(path) as fh:
        raw = json.load(fh)
    errors = validate_dict(raw)
    if errors:
        raise ValueError("invalid config:\n" + "\n".join("  " + e for e in errors))
    return ScenarioConfig(**raw)


def _seed_for(cfg: ScenarioConfig, *key: int) -> int:
    return int(SeedSequence(entropy=cfg.seed, spawn_key=tuple(key)).generate_state(1)[0])


def _trend_check(name: str, labels, values, strict: bool = True) -> dict:
    if len(values) < 2:
        return {"name": name, "status": "skipped", "reason": "insufficient points"}
    pairs = zip(values, values[1:])
    ok = all((b < a) if strict else (b <= a + 1e-12) for a, b in pairs)
    return {"name": name, "status": "pass" if ok else "fail",
            "labels": list(labels), "values": [float(v) for v in values]}


def _status(name: str, ok: bool, **extra) -> dict:
    return {"name": name, "status": "pass" if ok else "fail", **extra}


# --- test-function families -------------------------------------------------

def circle_functions() -> dict:
    return {
        "cos": LipschitzTestFunction(np.cos, 1.0, 1.0, name="cos"),
        "sin": LipschitzTestFunction(np.sin, 1.0, 1.0, name="sin"),
        "halfcos2": LipschitzTestFunction(lambda x: 0.5 * np.cos(2 * x), 1.0, 0.5,
                                          name="halfcos2"),
    }


def line_functions() -> dict:
    return {
        "clamp": LipschitzTestFunction(lambda x: np.clip(x, -1.0, 1.0), 1.0, 1.0,
                                       name="clamp"),
        "tanh": LipschitzTestFunction(np.tanh, 1.0, 1.0, name="tanh"),
        "bump": LipschitzTestFunction(lambda x: np.maximum(0.0, 1.0 - np.abs(x)), 1.0, 1.0,
                                      name="bump"),
    }


def chain_functions(positions: np.ndarray) -> dict:
    """Test functions on a finite 1-D chain, indexed by atom number."""
    pos = np.asarray(positions, dtype=float)

    def on_pos(g):
        return lambda idx: g(pos[np.asarray(idx, dtype=int)])

    return {
        "linear": LipschitzTestFunction(on_pos(lambda x: x), 1.0, 1.0, name="linear"),
        "tent": LipschitzTestFunction(on_pos(lambda x: 0.5 - np.abs(x - 0.5)), 1.0, 0.5,
                                      name="tent"),
        "ramp": LipschitzTestFunction(on_pos(lambda x: np.clip(2 * x - 1, -0.5, 0.5) * 0.5),
                                      1.0, 0.25, name="ramp"),
    }


def _select(registry: dict, names) -> list:
    if names is None:
        return list(registry.values())
    missing = [n for n in names if n not in registry]
    if missing:
        raise ValueError("unknown test functions: %s (valid: %s)"
                         % (", ".join(missing), ", ".join(sorted(registry))))
    return [registry[n] for n in names]


# --- scenario runners -------------------------------------------------------

def run_torus(cfg: ScenarioConfig, pool: ThreadPoolExecutor):
    limit = Circle(2 * np.pi, n_nodes=256, normalized=True)
    members = []
    for n in cfg.n_grid:
        torus = Torus(2 * np.pi, 2 * np.pi / n, n_nodes=(256, 64), normalized=True)
        cmap = CollapseMap(torus, limit, lambda x: np.asarray(x, dtype=float)[..., 0],
                           np.pi / n)
        members.append((n, torus, cmap))
    family = SpaceFamily(members, limit)
    fns = _select(circle_functions(), cfg.test_functions)
    max_lip = max(f.lip for f in fns)
    checks, tables = [], {}

    pmg = pmg_test(family, fns, tolerances=[max_lip * np.pi / n + 1e-6 for n in cfg.n_grid])
    tables["pmg"] = pmg["rows"]
    checks.append(_status("pmg", pmg["pass"]))

    fdd = fdd_convergence_report(family, cfg.times, fns)
    tables["fdd"] = fdd["rows"]
    checks.append(_status("fdd_gaps", fdd["pass"]))
    for f in fns:
        series = [r["gap_plus_budget"] for r in fdd["rows"] if r["f"] == f.name]
        checks.append(_trend_check("fdd_trend_%s" % f.name, cfg.n_grid, series))

    il = initial_law_w1(family)
    tables["initial_law"] = il["rows"]
    checks.append(_status("initial_law", all(
        r["w1"] <= r["fiber"] + 0.05 for r in il["rows"])))

    et = entropy_tightness(family, cfg.eps_entropy)
    tables["entropy"] = et["rows"]
    checks.append(_status("entropy_tightness", et["pass"], sup=et["sup"]))

    step = min(cfg.modulus_eta) / 4
    n_steps = int(round(cfg.path_T / step))
    grid = np.arange(n_steps + 1) * step
    futures = {n: pool.submit(sample_kernel_chain, space, "base", grid,
                              cfg.mc_count, _seed_for(cfg, 1, i))
               for i, (n, space, _) in enumerate(members)}
    limit_future = pool.submit(sample_kernel_chain, limit, "base", grid,
                               cfg.mc_count, _seed_for(cfg, 2))
    ensembles = {n: fut.result() for n, fut in futures.items()}
    limit_ens = limit_future.result()

    base_se = pathlaw_baseline(limit_ens, cfg.times, bins=cfg.bins,
                               seed=_seed_for(cfg, 3))
    rows = []
    for n, _, cmap in members:
        res = pathlaw_w1(ensembles[n], limit_ens, cfg.times, cmap,
                         bins=cfg.bins, baseline_se=base_se)
        rows.append({"label": n, **{k: v for k, v in res.items() if k != "check"}})
    tables["pathlaw"] = rows
    checks.append(_status("pathlaw_w1", all(r["pass"] for r in rows)))

    mod_rows = []
    mod_ok = True
    for label, ens in [("limit", limit_ens)] + [(n, ensembles[n]) for n in cfg.n_grid]:
        stats = [modulus_statistic(ens, min(cfg.modulus_T, cfg.path_T), eta,
                                   cfg.modulus_delta)
                 for eta in cfg.modulus_eta]
        for eta, s in zip(cfg.modulus_eta, stats):
            mod_rows.append({"label": label, "eta": eta, "statistic": s})
        mod_ok &= all(b <= a + 1e-12 for a, b in zip(stats, stats[1:]))
    tables["modulus"] = mod_rows
    checks.append(_status("modulus_monotone", bool(mod_ok)))

    kol = kolmogorov_moment(limit_ens, cfg.kolmogorov_beta, [0.25, 0.5], cfg.kolmogorov_h)
    tables["kolmogorov"] = kol["rows"]
    checks.append(_status("kolmogorov_theta", 1.7 <= kol["theta_hat"] <= 2.3,
                          theta_hat=kol["theta_hat"], C=kol["C"]))
    return checks, tables


def _interval_chain(resolution: int) -> FiniteMms:
    """1-D chain on [0,1] with the collapsed-cone limit weights (density
    proportional to sqrt(x)), atom layout matching the cone mesh rings."""
    xs = np.linspace(0.0, 1.0, resolution + 1)[1:]
    pos = np.concatenate([[0.0], xs])
    edges = np.concatenate([[0.0], 0.5 * (xs[:-1] + xs[1:]), [1.0]])
    w = np.empty(len(pos))
    ring_w = edges[1:] ** 1.5 - edges[:-1] ** 1.5
    w[0] = 1e-3 * np.min(ring_w)
    w[1:] = ring_w
    w /= w.sum()
    dist = np.abs(pos[:, None] - pos[None, :])
    return FiniteMms(dist=dist, weights=w, base_index=0, coords=pos[:, None])


def run_cone(cfg: ScenarioConfig, pool: ThreadPoolExecutor):
    res = cfg.resolution
    limit = _interval_chain(res)
    eps = 2.5 / res
    set_generator(limit, graph_generator(limit, eps=eps))
    members = []
    for n in cfg.n_grid:
        space, _ = mesh_cone(n, res)
        set_generator(space, graph_generator(space, eps=eps))

        def ring_map(idx, angular=res):
            idx = np.asarray(idx, dtype=int)
            return np.where(idx == 0, 0, (idx - 1) // angular + 1).astype(float)

        cmap = CollapseMap(space, limit, ring_map, np.pi * np.sqrt(1.0 / n))
        members.append((n, space, cmap))
    family = SpaceFamily(members, limit)
    positions = limit.coords[:, 0]
    fns = _select(chain_functions(positions), cfg.test_functions)
    max_lip = max(f.lip for f in fns)
    checks, tables = [], {}

    pmg = pmg_test(family, fns,
                   tolerances=[max_lip * np.pi * np.sqrt(1.0 / n) + 0.05 for n in cfg.n_grid])
    tables["pmg"] = pmg["rows"]
    checks.append(_status("pmg", pmg["pass"]))
    for f in fns:
        series = [r["gap"] for r in pmg["rows"] if r["f"] == f.name]
        checks.append(_trend_check("pmg_trend_%s" % f.name, cfg.n_grid, series, strict=False))

    fdd = fdd_convergence_report(family, cfg.times, fns)
    tables["fdd"] = fdd["rows"]
    checks.append(_status("fdd_gaps", fdd["pass"]))

    il = initial_law_w1(family)
    tables["initial_law"] = il["rows"]
    checks.append(_trend_check("initial_law_trend", cfg.n_grid,
                               [r["w1"] for r in il["rows"]], strict=False))

    et = entropy_tightness(family, cfg.eps_entropy)
    tables["entropy"] = et["rows"]
    checks.append(_status("entropy_tightness", et["pass"], sup=et["sup"]))

    grid = np.concatenate([[0.0], np.asarray(cfg.times, dtype=float)])
    count = min(cfg.mc_count, 4000)
    futures = {n: pool.submit(sample_kernel_chain, space, "base", grid, count,
                              _seed_for(cfg, 1, i))
               for i, (n, space, _) in enumerate(members)}
    limit_future = pool.submit(sample_kernel_chain, limit, "base", grid, count,
                               _seed_for(cfg, 2))
    ensembles = {n: fut.result() for n, fut in futures.items()}
    limit_ens = limit_future.result()
    base_se = pathlaw_baseline(limit_ens, cfg.times, bins=cfg.bins, seed=_seed_for(cfg, 3))
    rows = []
    for n, _, cmap in members:
        r = pathlaw_w1(ensembles[n], limit_ens, cfg.times, cmap,
                       bins=cfg.bins, baseline_se=base_se)
        rows.append({"label": n, **{k: v for k, v in r.items() if k != "check"}})
    tables["pathlaw"] = rows
    checks.append(_status("pathlaw_w1", all(r["pass"] for r in rows)))
    return checks, tables


def run_ou(cfg: ScenarioConfig, pool: ThreadPoolExecutor):
    dt = cfg.dt if cfg.dt is not None else 1e-3
    limit = EuclideanLogConcave(1, quadratic_potential(1.0))
    members = []
    for n in cfg.n_grid:
        space = EuclideanLogConcave(1, quadratic_potential(1.0 + 1.0 / n))
        cmap = CollapseMap(space, limit, lambda x: x, 0.0)
        members.append((n, space, cmap))
    family = SpaceFamily(members, limit)
    fns = _select(line_functions(), cfg.test_functions)
    checks, tables = [], {}

    extra = {n: cfg.fdd_budget_scale / n for n in cfg.n_grid}
    fdd = fdd_convergence_report(family, cfg.times, fns, extra_budgets=extra)
    tables["fdd"] = fdd["rows"]
    checks.append(_status("fdd_gaps", fdd["pass"]))
    for f in fns:
        series = [r["gap"] for r in fdd["rows"] if r["f"] == f.name]
        checks.append(_trend_check("fdd_trend_%s" % f.name, cfg.n_grid, series, strict=False))

    il = initial_law_w1(family)
    tables["initial_law"] = il["rows"]
    checks.append(_trend_check("initial_law_trend", cfg.n_grid,
                               [r["w1"] for r in il["rows"]]))

    et = entropy_tightness(family, cfg.eps_entropy)
    tables["entropy"] = et["rows"]
    checks.append(_status("entropy_tightness", et["pass"], sup=et["sup"]))

    sigma_inf = np.sqrt(1.0 - np.exp(-2.0))
    qs = (np.arange(4096) + 0.5) / 4096
    limit_ref = DiscreteMeasure(scipy.stats.norm.ppf(qs) * sigma_inf)
    futures = {n: pool.submit(euler_maruyama, space.potential, 0.0, dt, 1.0,
                              cfg.mc_count, _seed_for(cfg, 1, i))
               for i, (n, space, _) in enumerate(members)}
    rows = []
    for n, space, _ in members:
        ens = futures[n].result()
        final = ens.states[:, -1, 0]
        emp = DiscreteMeasure(final)
        w2 = wasserstein_1d(2, emp, limit_ref)
        a_n = 1.0 + 1.0 / n
        closed = abs(np.sqrt((1.0 - np.exp(-2.0 * a_n)) / a_n) - sigma_inf)
        quarters = np.array_split(final, 4)
        qvals = [wasserstein_1d(2, DiscreteMeasure(q), limit_ref) for q in quarters]
        se = float(np.std(qvals))
        budget = 3 * se + 10 * dt + 0.01
        rows.append({"label": n, "w2": w2, "closed_form": closed,
                     "gap": abs(w2 - closed), "budget": budget,
                     "pass": bool(abs(w2 - closed) <= budget)})
    tables["marginal_w2"] = rows
    checks.append(_status("marginal_w2", all(r["pass"] for r in rows)))
    checks.append(_trend_check("marginal_w2_trend", cfg.n_grid,
                               [r["w2"] for r in rows]))
    return checks, tables


def run_reflected(cfg: ScenarioConfig, pool: ThreadPoolExecutor):
    dt = cfg.dt if cfg.dt is not None else 5e-4
    T = 1.5
    v0 = quadratic_potential(0.0)
    x0 = 0.25
    checks, tables = [], {}
    limit_domain = box_domain(0.0, 1.0)
    limit_future = pool.submit(reflected_em, limit_domain, v0, x0, dt, T,
                               cfg.mc_count, _seed_for(cfg, 2))
    usable = [n for n in cfg.n_grid if n >= 2]
    futures = {n: pool.submit(reflected_em, box_domain(0.0, 1.0 - 1.0 / n), v0,
                              x0, dt, T, cfg.mc_count, _seed_for(cfg, 1, i))
               for i, n in enumerate(usable)}
    limit_ens = limit_future.result()

    # long-time occupation sample: disjoint path halves at two well-mixed
    # times, so the pooled KS sample stays independent
    half = cfg.mc_count // 2
    occupation = np.concatenate([
        limit_ens.state_at(1.0)[:half, 0],
        limit_ens.state_at(T)[half:, 0]])
    ks = scipy.stats.kstest(occupation, "uniform")
    tables["occupation_ks"] = [{"statistic": float(ks.statistic),
                                "pvalue": float(ks.pvalue),
                                "pass": bool(ks.pvalue >= cfg.ks_level)}]
    checks.append(_status("occupation_ks", bool(ks.pvalue >= cfg.ks_level),
                          pvalue=float(ks.pvalue)))

    limit_marginal = DiscreteMeasure(limit_ens.state_at(1.0)[:, 0])
    rows = []
    for n in usable:
        ens = futures[n].result()
        emp = DiscreteMeasure(ens.state_at(1.0)[:, 0])
        w1 = wasserstein_1d(1, emp, limit_marginal)
        rows.append({"label": n, "w1": w1, "closed_form": 0.5 / n})
    tables["marginal_w1"] = rows
    if len(usable) < len(cfg.n_grid):
        checks.append({"name": "degenerate_members", "status": "skipped",
                       "reason": "n=1 gives an empty domain"})
    checks.append(_trend_check("marginal_w1_trend", usable, [r["w1"] for r in rows]))
    return checks, tables


def run_custom_finite(cfg: ScenarioConfig, pool: ThreadPoolExecutor):
    space = FiniteMms.load(cfg.finite_file)
    sk = get_kernel(space)
    m = space.weights
    ts = [0.1, 0.5, 1.0, 2.0]
    checks, tables = [], {}
    rows = []
    for t in ts:
        p = sk.transition_matrix(t)
        cons = float(np.max(np.abs(p.sum(axis=1) - 1.0)))
        sym = m[:, None] * p
        det = float(np.max(np.abs(sym - sym.T)))
        rows.append({"t": t, "conservativeness": cons, "detailed_balance": det,
                     "pass": bool(cons <= 1e-9 and det <= 1e-9)})
    ck = float(np.max(np.abs(sk.transition_matrix(0.1) @ sk.transition_matrix(0.5)
                             - sk.transition_matrix(0.6))))
    rows.append({"t": 0.6, "conservativeness": ck, "detailed_balance": 0.0,
                 "pass": bool(ck <= 1e-12)})
    tables["kernel_checks"] = rows
    checks.append(_status("kernel_algebra", all(r["pass"] for r in rows)))

    from .heat import on_diagonal
    diag = [on_diagonal(space, t, space.base_index) for t in np.arange(0.1, 2.01, 0.1)]
    checks.append(_status("on_diagonal_monotone",
                          all(b <= a + 1e-12 for a, b in zip(diag, diag[1:]))))

    gap = spectral_gap(space)
    checks.append(_status("spectral_gap_positive", gap > 0, gap=gap))

    rng = np.random.default_rng(_seed_for(cfg, 4))
    trials = [rng.standard_normal(space.n) for _ in range(20)]
    mix = mixing_bound_check(space, ts, trials)
    tables["mixing"] = [{"f": r["f"], "t": r["t"], "max_violation": r["max_violation"],
                         "pass": r["pass"]} for r in mix["rows"]]
    checks.append(_status("mixing_bound", mix["pass"]))

    rate = float(np.max(-np.diag(sk.generator)))
    fel = feller_check(space, trials[:3], [0.001 / rate, 0.01 / rate, 0.1 / rate],
                       tol=0.05 * max(np.max(np.abs(f)) for f in trials[:3]))
    tables["feller"] = fel["rows"]
    checks.append(_status("feller", fel["pass"]))
    return checks, tables


RUNNERS = {
    "torus_collapse": run_torus,
    "cone_interval": run_cone,
    "ou_family": run_ou,
    "reflected_family": run_reflected,
    "custom_finite": run_custom_finite,
}


# --- output -----------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return "%d" % v
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if isinstance(v, (list, tuple)):
        return "|".join(_fmt(x) for x in v)
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    return obj


def write_csv(path: str, rows: list) -> None:
    if not rows:
        with open(path, "w") as fh:
            fh.write("\n")
        return
    names = []
    for row in rows:
        for k in row:
            if k not in names:
                names.append(k)
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(k, "")) for k in names) + "\n")


def run_scenario(cfg: ScenarioConfig, threads: int = 1, out_dir: str = None) -> int:
    out = out_dir or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        try:
            checks, tables = RUNNERS[cfg.scenario](cfg, pool)
            incomplete = False
        except FloatingPointError as exc:  # runtime divergence
            checks, tables = [{"name": "runtime", "status": "fail",
                               "reason": str(exc)}], {}
            incomplete = True
    report = {
        "scenario": cfg.scenario,
        "checks": _jsonable(checks),
        "incomplete": incomplete,
        "pass": all(c["status"] != "fail" for c in checks),
    }
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, rows in tables.items():
        write_csv(os.path.join(out, "%s.csv" % name), _jsonable(rows))
    from . import __version__
    manifest = {
        "package": "mmlab",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "seed": cfg.seed,
        "config": _jsonable(cfg.__dict__),
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for c in report["checks"]:
        line = "%-28s %s" % (c["name"], c["status"].upper())
        if c["status"] == "skipped" and "reason" in c:
            line += " (%s)" % c["reason"]
        print(line)
    print("scenario %s: %s" % (cfg.scenario, "PASS" if report["pass"] else "FAIL"))
    return 0 if report["pass"] else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lab",
        description="Run convergence-lab scenarios from JSON configs. "
                    "Defaults: n_grid [1,2,4,8,16], 10000 Monte Carlo paths; "
                    "every numeric field can be overridden in the config file.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--out", default=None, help="output directory override")
    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config")
    sub.add_parser("list-scenarios", help="list known scenario kinds")
    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        for name in sorted(SCENARIOS):
            print("%-18s %s" % (name, SCENARIOS[name]))
        return 0
    if args.command == "validate":
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print("error: %s" % exc)
            return 1
        errors = validate_dict(raw)
        if errors:
            for e in errors:
                print("error: %s" % e)
            return 1
        print("ok")
        return 0
    try:
        cfg = load_config(args.config)
    except (OSError, json.JSONDecodeError, ValueError, TypeError) as exc:
        print("error: %s" % exc)
        return 1
    return run_scenario(cfg, threads=args.threads, out_dir=args.out)


if __name__ == "__main__":
    sys.exit(main())
