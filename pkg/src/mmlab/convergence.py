"""Convergence harness across a family of spaces.

Given a family of spaces collapsing onto a declared limit, this module
checks measured-Gromov style convergence of the reference measures, compares
nested finite-dimensional-distribution (fdd) functionals of the heat
semigroups, measures W_1 gaps between sampled path laws, and tracks entropy
tightness — all with explicit fiber-bound and Monte Carlo error budgets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .heat import get_kernel, relative_entropy
from .paths import PathEnsemble, extract_fdd, make_rng
from .spaces import (
    Circle,
    CollapseMap,
    FiniteMms,
    Interval,
    PmmSpace,
    QuadratureDensity,
    weighted_measure,
)
from .transport import (
    DiscreteMeasure,
    wasserstein_1d,
    wasserstein_circle,
    wasserstein_exact,
)

QUAD_TOL = 1e-6
LIP_SLACK = 1e-6


class ConvergenceError(ValueError):
    pass


@dataclass(frozen=True)
class LipschitzTestFunction:
    """A test function on the limit space with declared constants."""

    f: Callable
    lip: float
    sup_bound: float
    bounded_support: bool = True
    name: str = "f"

    def __call__(self, x):
        return self.f(x)

    def validate(self, probes: np.ndarray, distance, tol: float = LIP_SLACK) -> float:
        """Max sampled difference quotient minus the declared constant."""
        worst = -np.inf
        vals = [float(np.asarray(self.f(p))) for p in probes]
        for i in range(len(probes)):
            if abs(vals[i]) > self.sup_bound + tol:
                raise ConvergenceError("sup bound violated at a probe")
            for j in range(i + 1, len(probes)):
                d = float(np.asarray(distance(probes[i], probes[j])))
                if d > 1e-12:
                    worst = max(worst, abs(vals[i] - vals[j]) / d - self.lip)
        if worst > tol:
            raise ConvergenceError("Lipschitz constant violated by %.2e" % worst)
        return worst


@dataclass(frozen=True)
class SpaceFamily:
    """Ordered members (label, space, collapse map) with a common limit."""

    members: tuple
    limit: PmmSpace

    def __init__(self, members, limit):
        members = tuple(members)
        for label, space, cmap in members:
            if cmap is not None:
                if not np.isfinite(cmap.fiber_diameter_bound):
                    raise ConvergenceError("fiber bound must be finite")
                if cmap.target is not limit and cmap.target != limit:
                    raise ConvergenceError("collapse maps must share the limit space")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "limit", limit)


def _tilde(space: PmmSpace):
    ref = weighted_measure(space)
    if isinstance(ref, DiscreteMeasure):
        return space.quadrature()[0], ref.weights
    pts = ref.points
    return pts, ref.masses()


def _mapped_points(space: PmmSpace, cmap: Optional[CollapseMap], pts: np.ndarray) -> np.ndarray:
    if cmap is None:
        return pts
    if isinstance(space, FiniteMms):
        return np.asarray(cmap.map(np.asarray(pts, dtype=int)), dtype=float)
    return np.asarray(cmap.map(pts), dtype=float)


def _eval_on(f, pts: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(pts), dtype=float)
        if vals.shape == (len(pts),):
            return vals
    except Exception:
        pass
    return np.asarray([float(np.asarray(f(p))) for p in pts], dtype=float)


def pmg_test(family: SpaceFamily, test_functions: Sequence[LipschitzTestFunction],
             tolerances: Optional[Sequence[float]] = None) -> dict:
    """Convergence of pushed-forward reference measures against the test
    family, plus base-point convergence, member by member."""
    limit_pts, limit_masses = _tilde(family.limit)
    limit_vals = {fi: _eval_on(f, limit_pts) for fi, f in enumerate(test_functions)}
    rows = []
    for mi, (label, space, cmap) in enumerate(family.members):
        pts, masses = _tilde(space)
        mapped = _mapped_points(space, cmap, pts)
        base = _mapped_points(space, cmap, np.asarray([space.base_point]))[0]
        base_gap = float(np.asarray(family.limit.distance(base, family.limit.base_point)))
        tol = None if tolerances is None else tolerances[mi]
        for fi, f in enumerate(test_functions):
            val_n = float(np.sum(masses * _eval_on(f, mapped)))
            val_inf = float(np.sum(limit_masses * limit_vals[fi]))
            gap = abs(val_n - val_inf)
            row = {"label": label, "f": getattr(f, "name", str(fi)), "gap": gap,
                   "base_gap": base_gap}
            if tol is not None:
                row["pass"] = bool(gap <= tol and base_gap <= tol)
            rows.append(row)
    return {"check": "pmg", "rows": rows,
            "pass": all(r.get("pass", True) for r in rows)}


def _unwrap(f):
    return f.f if isinstance(f, LipschitzTestFunction) else f


def fdd_operator(space: PmmSpace, times: Sequence[float], functions, x) -> float:
    """Nested semigroup functional
    P_{t1}(f1 P_{t2-t1}(f2 ... P_{tk-t_{k-1}} fk))(x), with t0 = 0.

    Bounded by the product of the sup norms of the f_i.
    """
    times = [float(t) for t in times]
    if len(times) != len(functions):
        raise ConvergenceError("times and functions must align")
    if any(b <= a for a, b in zip(times, times[1:])) or times[0] < 0:
        raise ConvergenceError("times must be strictly increasing and nonnegative")
    sk = get_kernel(space)
    pts, w = sk.points, sk.weights
    fvals = [_eval_on(_unwrap(f), pts) for f in functions]
    vals = fvals[-1]
    for i in range(len(times) - 1, 0, -1):
        vals = fvals[i - 1] * sk.apply_values(times[i] - times[i - 1], vals)
    t1 = times[0]
    if t1 == 0:
        # evaluate at the grid point nearest x
        if isinstance(space, FiniteMms):
            return float(vals[int(x)])
        d = np.asarray(space.distance(pts, x))
        return float(vals[int(np.argmin(d))])
    row = sk.kernel_row(t1, x)
    return float(np.sum(w * row * vals))


def mcshane_extend(domain_points, values, H: float, metric) -> Callable:
    """Extend an H-Lipschitz function to the whole space by the clamped
    sup-convolution  ((sup_a f(a) - H d(a, x)) /\\ sup f) \\/ inf f."""
    pts = list(domain_points)
    vals = np.asarray(values, dtype=float)
    if len(pts) != len(vals) or len(pts) == 0:
        raise ConvergenceError("domain points and values must align and be nonempty")
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = float(np.asarray(metric(pts[i], pts[j])))
            if abs(vals[i] - vals[j]) > H * d + 1e-9:
                raise ConvergenceError("input is not H-Lipschitz on the domain")
    lo, hi = float(np.min(vals)), float(np.max(vals))

    def extension(x):
        ds = np.asarray([float(np.asarray(metric(x, a))) for a in pts])
        return float(min(max(np.max(vals - H * ds), lo), hi))

    return extension


def fdd_convergence_report(family: SpaceFamily, times: Sequence[float],
                           functions: Sequence[LipschitzTestFunction],
                           mode: str = "point-start",
                           extra_budgets: Optional[dict] = None) -> dict:
    """Per-member gaps |value_n - value_limit| of the nested fdd functional,
    with the test functions pulled back through the collapse maps and a
    fiber-bound error budget (sum of Lip_i x fiber, plus quadrature slack).

    ``extra_budgets`` maps member labels to additional declared tolerance,
    for families whose semigroups differ beyond the collapse geometry.
    """
    if mode not in ("point-start", "weighted-start"):
        raise ConvergenceError("mode must be point-start or weighted-start")
    k = len(times)

    def value_on(space, cmap, fs):
        sk = get_kernel(space)
        pts = sk.points
        mapped = _mapped_points(space, cmap, pts)
        fvals = [_eval_on(_unwrap(f), mapped) for f in fs]
        vals = fvals[-1]
        ts = [float(t) for t in times]
        for i in range(k - 1, 0, -1):
            vals = fvals[i - 1] * sk.apply_values(ts[i] - ts[i - 1], vals)
        if mode == "point-start":
            row = sk.kernel_row(ts[0], space.base_point)
            return float(np.sum(sk.weights * row * vals))
        _, masses = _tilde(space)
        vals = sk.apply_values(ts[0], vals)
        return float(np.sum(masses * vals))

    rows = []
    for f in functions:
        fs = [f] * k
        val_limit = value_on(family.limit, None, fs)
        for label, space, cmap in family.members:
            val_n = value_on(space, cmap, fs)
            fiber = 0.0 if cmap is None else cmap.fiber_diameter_bound
            budget = k * f.lip * fiber + QUAD_TOL
            if extra_budgets is not None:
                budget += float(extra_budgets.get(label, 0.0))
            gap = abs(val_n - val_limit)
            rows.append({"label": label, "f": f.name, "k": k,
                         "times": list(map(float, times)), "mode": mode,
                         "value": val_n, "value_limit": val_limit,
                         "gap": gap, "budget": budget,
                         "gap_plus_budget": gap + budget,
                         "pass": bool(gap <= budget)})
    return {"check": "fdd_convergence", "rows": rows,
            "pass": all(r["pass"] for r in rows)}


def _bin_edges(limit: PmmSpace, pooled: np.ndarray, bins: int):
    if isinstance(limit, Circle):
        return 0.0, limit.circumference / bins, True, limit.circumference
    if isinstance(limit, Interval):
        return limit.a, limit.length / bins, False, None
    if isinstance(limit, FiniteMms):
        # states are atom indices: unit bins snap to the indices themselves
        return -0.5, 1.0, False, None
    lo = float(np.min(pooled)) - 1e-9
    hi = float(np.max(pooled)) + 1e-9
    return lo, (hi - lo) / bins, False, None


def product_distance_matrix(limit: PmmSpace, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Sum-metric distances between product-space atoms (1-D blocks)."""
    out = np.zeros((len(A), len(B)))
    for j in range(A.shape[1]):
        out += np.asarray(limit.distance(A[:, j][:, None], B[:, j][None, :]))
    return out


def pathlaw_w1(ensemble_n: PathEnsemble, ensemble_limit: PathEnsemble,
               times: Sequence[float], collapse: Optional[CollapseMap] = None,
               bins: int = 24, n_splits: int = 4, seed: int = 0,
               baseline_se: Optional[tuple] = None) -> dict:
    """W_1 between mapped empirical fdds, with an error budget.

    The joint laws are snapped onto per-coordinate bins before the exact LP
    (bin diameter reported in the budget); the self-distance baseline and its
    spread come from random half/half splits of the limit ensemble with the
    same binning.
    """
    if len(ensemble_n.times) != len(ensemble_limit.times) or \
            np.max(np.abs(ensemble_n.times - ensemble_limit.times)) > 1e-12:
        raise ConvergenceError("mismatched time grids")
    limit = ensemble_limit.space
    k = len(times)
    mu = extract_fdd(ensemble_n, times, collapse)
    nu = extract_fdd(ensemble_limit, times)
    pooled = np.concatenate([mu.atoms, nu.atoms], axis=0)
    specs = [_bin_edges(limit, pooled[:, j], bins) for j in range(k)]
    mu_b = _weighted_rebin(mu.atoms, mu.weights, specs)
    nu_b = _weighted_rebin(nu.atoms, nu.weights, specs)
    value, _ = wasserstein_exact(
        1, mu_b, nu_b, dist_matrix=product_distance_matrix(limit, mu_b.atoms, nu_b.atoms))
    if baseline_se is not None:
        baseline, se = float(baseline_se[0]), float(baseline_se[1])
    else:
        baseline, se = pathlaw_baseline(ensemble_limit, times, bins=bins,
                                        n_splits=n_splits, seed=seed)
    fiber = 0.0 if collapse is None else collapse.fiber_diameter_bound
    bin_budget = float(sum(spec[1] for spec in specs))
    bound = baseline + k * fiber + 3 * se
    return {"check": "pathlaw_w1", "w1": value, "baseline": baseline, "se": se,
            "fiber_budget": k * fiber, "bin_budget": bin_budget,
            "bound": bound, "pass": bool(value <= bound)}


def pathlaw_baseline(ensemble_limit: PathEnsemble, times: Sequence[float],
                     bins: int = 24, n_splits: int = 4, seed: int = 0) -> tuple:
    """Self-distance of the limit ensemble: mean and spread of binned W_1
    between random half/half splits (the zero-versus-noise reference)."""
    limit = ensemble_limit.space
    nu = extract_fdd(ensemble_limit, times)
    specs = [_bin_edges(limit, nu.atoms[:, j], bins) for j in range(len(times))]
    rng = make_rng(seed, 7)
    split_vals = []
    half = ensemble_limit.count // 2
    for _ in range(n_splits):
        perm = rng.permutation(ensemble_limit.count)
        a_idx, b_idx = perm[:half], perm[half:2 * half]
        fa = extract_fdd(_subset(ensemble_limit, a_idx), times)
        fb = extract_fdd(_subset(ensemble_limit, b_idx), times)
        ma = _weighted_rebin(fa.atoms, fa.weights, specs)
        mb = _weighted_rebin(fb.atoms, fb.weights, specs)
        v, _ = wasserstein_exact(
            1, ma, mb, dist_matrix=product_distance_matrix(limit, ma.atoms, mb.atoms))
        split_vals.append(v)
    return float(np.mean(split_vals)), float(np.std(split_vals)) + 1e-12


def _subset(ensemble: PathEnsemble, idx: np.ndarray) -> PathEnsemble:
    return PathEnsemble(ensemble.times, ensemble.states[idx], ensemble.seed,
                        ensemble.initial_law, ensemble.space, ensemble.flags[idx])


def _weighted_rebin(atoms: np.ndarray, weights: np.ndarray, specs) -> DiscreteMeasure:
    """Snap atoms to per-coordinate bin centers and merge their weights."""
    centers = np.empty_like(atoms)
    for j, (lo, width, periodic, period) in enumerate(specs):
        x = atoms[:, j]
        if periodic:
            x = np.mod(x, period)
        idx = np.floor((x - lo) / width).astype(int)
        if periodic:
            idx = np.mod(idx, int(round(period / width)))
        centers[:, j] = lo + (idx + 0.5) * width
    uniq, inverse = np.unique(centers, axis=0, return_inverse=True)
    w = np.zeros(len(uniq))
    np.add.at(w, inverse, weights)
    return DiscreteMeasure(uniq, w / w.sum())


def entropy_tightness(family: SpaceFamily, eps: float,
                      include_limit: bool = True) -> dict:
    """Relative entropy of the time-eps kernel measure started at the base
    point, w.r.t. each member's probability reference."""
    if eps <= 0:
        raise ConvergenceError("eps must be positive")

    def one(label, space):
        sk = get_kernel(space)
        row = sk.kernel_row(eps, space.base_point)
        _, masses = _tilde(space)
        mu = row * sk.weights
        mu = mu / mu.sum()
        ent = relative_entropy(mu, masses / masses.sum())
        return {"label": label, "entropy": float(ent)}

    rows = [one(label, space) for label, space, _ in family.members]
    if include_limit:
        rows.append(one("limit", family.limit))
    ents = [r["entropy"] for r in rows]
    finite = all(np.isfinite(e) for e in ents)
    return {"check": "entropy_tightness", "eps": float(eps), "rows": rows,
            "sup": float(np.max(ents)), "pass": bool(finite)}


def initial_law_w1(family: SpaceFamily, bins: int = 64) -> dict:
    """W_1 between each mapped probability reference and the limit's, on a
    common 1-D discretization of the limit space."""
    limit = family.limit
    limit_pts, limit_masses = _tilde(limit)
    lim_measure = DiscreteMeasure(np.asarray(limit_pts, dtype=float),
                                  limit_masses / limit_masses.sum())
    rows = []
    for label, space, cmap in family.members:
        pts, masses = _tilde(space)
        mapped = _mapped_points(space, cmap, pts)
        mu = DiscreteMeasure(np.asarray(mapped, dtype=float), masses / masses.sum())
        if isinstance(limit, Circle):
            spec = [(0.0, limit.circumference / bins, True, limit.circumference)]
            mu_b = _weighted_rebin(mu.atoms, mu.weights, spec)
            lim_b = _weighted_rebin(lim_measure.atoms, lim_measure.weights, spec)
            w1 = wasserstein_circle(1, mu_b, lim_b, limit.circumference)
        else:
            w1 = wasserstein_1d(1, mu, lim_measure)
        fiber = 0.0 if cmap is None else cmap.fiber_diameter_bound
        rows.append({"label": label, "w1": float(w1), "fiber": fiber})
    return {"check": "initial_law_w1", "rows": rows}
