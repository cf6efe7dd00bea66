"""Path samplers and path-law statistics.

Three samplers: exact kernel-chain sampling on spaces with computable heat
kernels, Euler-Maruyama for dX = -grad V dt + sqrt(2) dW, and a
mirror-reflected variant for convex domains.  Ensembles are seeded with
counter-based (Philox) streams, so identical seeds give bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .heat import HeatError, get_kernel
from .spaces import (
    Circle,
    ConvexDomain,
    EuclideanLogConcave,
    FiniteMms,
    Interval,
    PmmSpace,
    Potential,
    Torus,
)
from .transport import DiscreteMeasure

DIVERGENCE_GUARD = 1e6
KERNEL_CLIP = 1e-13


class PathError(ValueError):
    pass


def make_rng(seed: int, *key: int) -> Generator:
    return Generator(Philox(SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))))


@dataclass(frozen=True)
class PathSample:
    """One trajectory on a shared time grid."""

    times: np.ndarray
    states: np.ndarray
    lineage: str
    flagged: bool = False


@dataclass(frozen=True)
class PathEnsemble:
    """A seeded Monte Carlo family of paths with a common time grid.

    ``states`` has shape (count, n_times, d).  ``flags`` marks paths aborted
    by the divergence guard (their tail states are frozen at the last value).
    """

    times: np.ndarray
    states: np.ndarray
    seed: int
    initial_law: str
    space: Optional[PmmSpace] = None
    flags: np.ndarray = field(default=None)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float)
        if t.ndim != 1 or np.any(np.diff(t) <= 0):
            raise PathError("times must be strictly increasing")
        if s.ndim != 3 or s.shape[1] != len(t) or s.shape[0] < 1:
            raise PathError("states must have shape (count, n_times, d)")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)
        if self.flags is None:
            object.__setattr__(self, "flags", np.zeros(len(s), dtype=bool))

    @property
    def count(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    def sample(self, i: int) -> PathSample:
        return PathSample(self.times, self.states[i],
                          lineage="%d/%d" % (self.seed, i), flagged=bool(self.flags[i]))

    def time_index(self, t: float) -> int:
        hits = np.nonzero(np.abs(self.times - t) <= 1e-12)[0]
        if len(hits) == 0:
            raise PathError("time %g not on the grid" % t)
        return int(hits[0])

    def state_at(self, t: float) -> np.ndarray:
        return self.states[:, self.time_index(t), :]

    def to_csv(self) -> str:
        cols = ",".join("coord_%d" % j for j in range(self.dim))
        lines = ["path_id,t,%s" % cols]
        for i in range(self.count):
            for k, t in enumerate(self.times):
                vals = ",".join("%.17g" % v for v in self.states[i, k])
                lines.append("%d,%.17g,%s" % (i, t, vals))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_csv(text: str, seed: int = 0, initial_law: str = "unknown",
                 space=None) -> "PathEnsemble":
        lines = text.strip().splitlines()
        body = np.asarray([[float(v) for v in line.split(",")] for line in lines[1:]])
        ids = body[:, 0].astype(int)
        count = ids.max() + 1
        n_t = np.sum(ids == 0)
        times = body[:n_t, 1]
        states = body[:, 2:].reshape(count, n_t, -1)
        return PathEnsemble(times, states, seed, initial_law, space)


def _initial_states(space: Optional[PmmSpace], initial, count: int,
                    rng: Generator, dim: int):
    """Starting points: base point, the probability reference, or a supplied
    discrete law."""
    if isinstance(initial, DiscreteMeasure):
        if initial.dim != dim:
            raise PathError("initial law dimension mismatch")
        idx = rng.choice(len(initial), size=count, p=initial.weights)
        return initial.atoms[idx], "supplied"
    if initial is None or initial == "base":
        base = np.atleast_1d(np.asarray(space.base_point, dtype=float))
        return np.tile(base[:dim], (count, 1)), "base"
    if initial == "weighted":
        from .spaces import weighted_measure
        ref = weighted_measure(space)
        if isinstance(ref, DiscreteMeasure):
            idx = rng.choice(len(ref), size=count, p=ref.weights)
            return ref.atoms[idx].astype(float), "weighted"
        masses = ref.masses()
        idx = rng.choice(len(masses), size=count, p=masses / masses.sum())
        pts = ref.points
        if pts.ndim == 1:
            pts = pts[:, None]
        return pts[idx], "weighted"
    raise PathError("unknown initial law %r" % (initial,))


def _increment_sampler(kernel_arc_row: np.ndarray, grid: np.ndarray, h: float):
    """Inverse-CDF sampler over grid offsets from a kernel density row."""
    probs = kernel_arc_row * h
    if probs.min() < -KERNEL_CLIP:
        raise PathError("kernel truncation produced negative mass %.2e" % probs.min())
    probs = np.clip(probs, 0.0, None)
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]

    def draw(rng: Generator, n: int) -> np.ndarray:
        return grid[np.searchsorted(cdf, rng.random(n), side="left")]

    return draw


def _row_cdf_matrix(transition: np.ndarray) -> np.ndarray:
    if transition.min() < -KERNEL_CLIP:
        raise PathError("kernel truncation produced negative mass %.2e" % transition.min())
    p = np.clip(transition, 0.0, None)
    cdf = np.cumsum(p, axis=1)
    return cdf / cdf[:, -1:]


def sample_kernel_chain(space: PmmSpace, initial, times: Sequence[float],
                        count: int, seed: int) -> PathEnsemble:
    """Markov-chain sampling with exact transition kernels p(dt, x, .).

    States live on the space's quadrature grid (atoms for finite spaces);
    grids are fine enough that the discretization is far below Monte Carlo
    noise at desk scale.
    """
    times = np.asarray(times, dtype=float)
    if len(times) < 1 or abs(times[0]) > 1e-15:
        raise PathError("time grid must start at 0")
    if np.any(np.diff(times) <= 0):
        raise PathError("time grid must be strictly increasing")
    if count < 1:
        raise PathError("count must be >= 1")
    rng = make_rng(seed)
    dts = np.diff(times)

    if isinstance(space, Circle):
        from .heat import circle_kernel_arc
        x, law = _initial_states(space, initial, count, rng, 1)
        x = x[:, 0].copy()
        grid = space.grid()
        h = space.circumference / space.n_nodes
        samplers = {float(dt): _increment_sampler(circle_kernel_arc(dt, grid, space.circumference), grid, h)
                    for dt in np.unique(dts)}
        out = np.empty((count, len(times), 1))
        out[:, 0, 0] = x
        for k, dt in enumerate(dts):
            x = np.mod(x + samplers[float(dt)](rng, count), space.circumference)
            out[:, k + 1, 0] = x
        return PathEnsemble(times, out, seed, law, space)

    if isinstance(space, Torus):
        from .heat import circle_kernel_arc
        x, law = _initial_states(space, initial, count, rng, 2)
        x = x.copy()
        c1, c2 = space.factors()
        samplers = {}
        for dt in np.unique(dts):
            samplers[float(dt)] = (
                _increment_sampler(circle_kernel_arc(dt, c1.grid(), c1.circumference),
                                   c1.grid(), c1.circumference / c1.n_nodes),
                _increment_sampler(circle_kernel_arc(dt, c2.grid(), c2.circumference),
                                   c2.grid(), c2.circumference / c2.n_nodes),
            )
        out = np.empty((count, len(times), 2))
        out[:, 0] = x
        for k, dt in enumerate(dts):
            s1, s2 = samplers[float(dt)]
            x[:, 0] = np.mod(x[:, 0] + s1(rng, count), space.len1)
            x[:, 1] = np.mod(x[:, 1] + s2(rng, count), space.len2)
            out[:, k + 1] = x
        return PathEnsemble(times, out, seed, law, space)

    if isinstance(space, Interval):
        sk = get_kernel(space)
        grid = space.grid()
        x, law = _initial_states(space, initial, count, rng, 1)
        state = np.argmin(np.abs(grid[None, :] - x[:, :1]), axis=1)
        cdfs = {float(dt): _row_cdf_matrix(sk._matrix(dt)) for dt in np.unique(dts)}
        out = np.empty((count, len(times), 1))
        out[:, 0, 0] = grid[state]
        for k, dt in enumerate(dts):
            rows = cdfs[float(dt)][state]
            u = rng.random(count)
            state = np.argmax(rows > u[:, None], axis=1)
            out[:, k + 1, 0] = grid[state]
        return PathEnsemble(times, out, seed, law, space)

    if isinstance(space, FiniteMms):
        sk = get_kernel(space)
        x, law = _initial_states(space, initial, count, rng, 1)
        state = x[:, 0].astype(int)
        cdfs = {float(dt): _row_cdf_matrix(sk.transition_matrix(dt)) for dt in np.unique(dts)}
        out = np.empty((count, len(times), 1))
        out[:, 0, 0] = state
        for k, dt in enumerate(dts):
            rows = cdfs[float(dt)][state]
            u = rng.random(count)
            state = np.argmax(rows > u[:, None], axis=1)
            out[:, k + 1, 0] = state
        return PathEnsemble(times, out, seed, law, space)

    if isinstance(space, EuclideanLogConcave):
        sk = get_kernel(space)  # validates the quadratic form
        a = sk.a
        x, law = _initial_states(space, initial, count, rng, 1)
        x = x[:, 0].copy()
        out = np.empty((count, len(times), 1))
        out[:, 0, 0] = x
        for k, dt in enumerate(dts):
            if a > 0:
                decay = np.exp(-a * dt)
                var = (1.0 - decay * decay) / a
            else:
                decay, var = 1.0, 2.0 * dt
            x = x * decay + np.sqrt(var) * rng.standard_normal(count)
            out[:, k + 1, 0] = x
        return PathEnsemble(times, out, seed, law, space)

    raise PathError("no kernel sampler for %s" % type(space).__name__)


def _batch_grad(potential: Potential, x: np.ndarray) -> np.ndarray:
    try:
        g = np.asarray(potential.grad(x), dtype=float)
        if g.shape == x.shape:
            return g
    except Exception:
        pass
    return np.asarray([np.atleast_1d(potential.grad(row)) for row in x], dtype=float)


def _confine(domain: ConvexDomain, x: np.ndarray, scheme: str) -> np.ndarray:
    """Bring states back into the domain after an unconstrained step.

    ``mirror`` reflects each point through its projection (exact in law for a
    half-line, O(dt)-accurate for general convex domains); ``project`` is the
    plain clip, kept for comparison (its boundary bias is O(sqrt(dt)))."""
    p = np.atleast_2d(np.asarray(domain.project(x), dtype=float))
    if scheme == "project":
        return p
    mirrored = 2.0 * p - x
    # a second pass handles overshoot past the opposite face
    p2 = np.atleast_2d(np.asarray(domain.project(mirrored), dtype=float))
    return np.where(np.abs(mirrored - p2) > 1e-12, p2, mirrored)


def euler_maruyama(potential: Potential, x0, dt: float, T: float, count: int,
                   seed: int, noise: bool = True,
                   domain: Optional[ConvexDomain] = None,
                   space: Optional[PmmSpace] = None,
                   scheme: str = "mirror") -> PathEnsemble:
    """X_{k+1} = X_k - grad V(X_k) dt + sqrt(2 dt) xi_k, optionally confined
    to a convex domain after every step.

    Paths whose norm exceeds the divergence guard are frozen and flagged.
    ``noise=False`` is the deterministic gradient-flow test hook.
    """
    if dt <= 0 or T < dt:
        raise PathError("need dt > 0 and T >= dt")
    steps = int(round(T / dt))
    times = np.arange(steps + 1) * dt
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = len(x0)
    rng = make_rng(seed)
    x = np.tile(x0, (count, 1))
    if domain is not None:
        if not domain.contains(x0):
            raise PathError("x0 outside the domain")
        x = np.atleast_2d(np.asarray(domain.project(x), dtype=float))
    out = np.empty((count, steps + 1, d))
    out[:, 0] = x
    flags = np.zeros(count, dtype=bool)
    alive = ~flags
    scale = np.sqrt(2.0 * dt)
    for k in range(steps):
        step = -_batch_grad(potential, x) * dt
        if noise:
            step = step + scale * rng.standard_normal((count, d))
        xn = x + step
        if domain is not None:
            xn = _confine(domain, xn, scheme)
        blown = np.linalg.norm(xn, axis=1) > DIVERGENCE_GUARD
        newly = blown & alive
        flags |= newly
        alive = ~flags
        x = np.where(alive[:, None], xn, x)
        out[:, k + 1] = x
    law = "point(%s)" % ",".join("%g" % v for v in x0)
    return PathEnsemble(times, out, seed, law, space, flags)


def reflected_em(domain: ConvexDomain, potential: Potential, x0, dt: float,
                 T: float, count: int, seed: int, noise: bool = True,
                 space: Optional[PmmSpace] = None,
                 scheme: str = "mirror") -> PathEnsemble:
    """Euler-Maruyama confined to a convex domain, mirroring each escaping
    state through its Euclidean projection onto the domain."""
    return euler_maruyama(potential, x0, dt, T, count, seed, noise=noise,
                          domain=domain, space=space, scheme=scheme)


def extract_fdd(ensemble: PathEnsemble, times: Sequence[float],
                collapse=None) -> DiscreteMeasure:
    """Empirical joint law of the path at the given times, optionally pushed
    through a collapse map; atoms are the per-time blocks concatenated."""
    blocks = []
    for t in times:
        s = ensemble.state_at(t)
        if collapse is not None:
            if ensemble.space is not None and isinstance(ensemble.space, FiniteMms):
                mapped = np.asarray(collapse.map(s[:, 0].astype(int)), dtype=float)
            else:
                mapped = np.asarray(collapse.map(s), dtype=float)
            s = mapped[:, None] if mapped.ndim == 1 else mapped
        blocks.append(s)
    return DiscreteMeasure(np.concatenate(blocks, axis=1))


def _pair_distance(ensemble: PathEnsemble, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance between state blocks of shape (..., d)."""
    space = ensemble.space
    if space is None:
        return np.linalg.norm(a - b, axis=-1)
    if isinstance(space, FiniteMms):
        return space.dist[a[..., 0].astype(int), b[..., 0].astype(int)]
    if isinstance(space, (Circle, Interval, EuclideanLogConcave)):
        return np.asarray(space.distance(a[..., 0], b[..., 0]))
    return np.asarray(space.distance(a, b))


def modulus_statistic(ensemble: PathEnsemble, T: float, eta: float, delta: float) -> float:
    """Fraction of paths with sup_{|t-s|<=eta, t,s<=T} d(B_t, B_s) > delta,
    the supremum taken over the stored grid (a lower-bound proxy)."""
    sel = ensemble.times <= T + 1e-12
    times = ensemble.times[sel]
    if len(times) < 2:
        raise PathError("grid does not cover [0, T]")
    if np.max(np.diff(times)) > eta / 4 + 1e-12:
        raise PathError("grid step exceeds eta/4")
    states = ensemble.states[:, sel]
    exceeded = np.zeros(ensemble.count, dtype=bool)
    n_t = len(times)
    for lag in range(1, n_t):
        if times[lag] - times[0] > eta + 1e-12:
            break
        d = _pair_distance(ensemble, states[:, :n_t - lag], states[:, lag:])
        exceeded |= np.any(d > delta, axis=1)
    return float(np.mean(exceeded))


def kolmogorov_moment(ensemble: PathEnsemble, beta: float,
                      t_grid: Sequence[float], h_grid: Sequence[float]) -> dict:
    """Empirical moments E[(d /\\ 1)^beta (B_t, B_{t+h})] with standard
    errors, plus a log-log fit m(h) ~ C h^theta over the h grid."""
    if beta <= 0:
        raise PathError("beta must be positive")
    rows = []
    per_h: dict = {}
    for t in t_grid:
        for h in h_grid:
            if h == 0:
                rows.append({"t": float(t), "h": 0.0, "moment": 0.0, "se": 0.0})
                continue
            a = ensemble.state_at(t)
            b = ensemble.state_at(t + h)
            d = np.minimum(_pair_distance(ensemble, a, b), 1.0)
            vals = d ** beta
            m = float(np.mean(vals))
            se = float(np.std(vals) / np.sqrt(len(vals)))
            rows.append({"t": float(t), "h": float(h), "moment": m, "se": se})
            per_h.setdefault(float(h), []).append(m)
    hs = sorted(h for h in per_h if h > 0)
    if len(hs) >= 2 and all(np.mean(per_h[h]) > 0 for h in hs):
        lx = np.log(hs)
        ly = np.log([np.mean(per_h[h]) for h in hs])
        theta, logc = np.polyfit(lx, ly, 1)
        fit = {"theta_hat": float(theta), "C": float(np.exp(logc))}
    else:
        fit = {"theta_hat": float("nan"), "C": float("nan")}
    return {"check": "kolmogorov_moment", "beta": float(beta), "rows": rows, **fit}
