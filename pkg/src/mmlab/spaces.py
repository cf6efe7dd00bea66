"""Pointed metric measure spaces: analytic models and finite discretizations.

Each space carries a base point, a reference measure, and (where meaningful)
a deterministic quadrature grid.  Finite spaces are distance matrices with
positive atom weights; collapse maps are the 1-Lipschitz surrogates used to
compare a family of spaces against a declared limit.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .transport import DiscreteMeasure

TRIANGLE_TOL = 1e-9
LIPSCHITZ_TOL = 1e-9

SIGMA_FINITE = "sigma-finite"
NORMALIZED = "normalized-probability"


class SpaceError(ValueError):
    pass


@dataclass(frozen=True)
class Potential:
    """A potential V with its gradient and a declared convexity modulus.

    ``quadratic_coeff`` marks V(x) = a|x|^2/2 exactly; this unlocks the
    closed-form Gaussian semigroup in the heat module.
    """

    value: Callable
    grad: Callable
    convexity_modulus: float = 0.0
    quadratic_coeff: Optional[float] = None

    def check_gradient(self, probes: np.ndarray, rtol: float = 1e-5, h: float = 1e-5) -> float:
        """Max relative mismatch of grad against central differences."""
        worst = 0.0
        for x in np.atleast_2d(probes):
            g = np.atleast_1d(np.asarray(self.grad(x), dtype=float))
            fd = np.empty_like(g)
            for i in range(len(g)):
                e = np.zeros_like(np.atleast_1d(x), dtype=float)
                e[i] = h
                fd[i] = (self.value(x + e) - self.value(x - e)) / (2 * h)
            scale = max(1.0, float(np.max(np.abs(g))))
            worst = max(worst, float(np.max(np.abs(g - fd))) / scale)
        if worst > rtol:
            raise SpaceError("gradient disagrees with finite differences (%.2e)" % worst)
        return worst


def quadratic_potential(a: float, dim: int = 1) -> Potential:
    return Potential(
        value=lambda x, a=a: 0.5 * a * float(np.sum(np.square(x))),
        grad=lambda x, a=a: a * np.atleast_1d(np.asarray(x, dtype=float)),
        convexity_modulus=a,
        quadratic_coeff=a,
    )


@dataclass(frozen=True)
class ConvexDomain:
    """A closed convex set given by membership, projection, and a radius bound."""

    contains: Callable
    project: Callable
    bounding_radius: float

    def check_projection(self, probes: np.ndarray, tol: float = 1e-9) -> None:
        for x in np.atleast_2d(probes):
            p = np.asarray(self.project(x), dtype=float)
            pp = np.asarray(self.project(p), dtype=float)
            if np.max(np.abs(pp - p)) > tol:
                raise SpaceError("projection not idempotent")
            if self.contains(x) and np.max(np.abs(p - np.atleast_1d(x))) > tol:
                raise SpaceError("projection moves an interior point")


def box_domain(lo, hi) -> ConvexDomain:
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    return ConvexDomain(
        contains=lambda x: bool(np.all(np.atleast_1d(x) >= lo - 1e-12) and np.all(np.atleast_1d(x) <= hi + 1e-12)),
        project=lambda x: np.clip(np.atleast_1d(np.asarray(x, dtype=float)), lo, hi),
        bounding_radius=float(np.linalg.norm(hi - lo)),
    )


class PmmSpace:
    """Base interface: distance, base point, reference measure, quadrature."""

    mass_mode: str = SIGMA_FINITE

    @property
    def base_point(self):
        raise NotImplementedError

    def distance(self, x, y):
        raise NotImplementedError

    def total_mass(self) -> float:
        raise NotImplementedError

    def quadrature(self):
        """(points, weights) with weights w.r.t. the reference measure."""
        raise NotImplementedError

    def ball_mass(self, center, r: float) -> float:
        pts, w = self.quadrature()
        d = self.distance(pts, center)
        return float(np.sum(w[d < r]))


def circle_distance(x, y, circumference: float):
    d = np.abs(np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), circumference))
    return np.minimum(d, circumference - d)


@dataclass(frozen=True)
class Circle(PmmSpace):
    circumference: float = 2 * np.pi
    base: float = 0.0
    n_nodes: int = 2048
    normalized: bool = False

    def __post_init__(self):
        if self.circumference <= 0:
            raise SpaceError("circumference must be positive")

    @property
    def mass_mode(self):
        return NORMALIZED if self.normalized else SIGMA_FINITE

    @property
    def base_point(self):
        return self.base

    def distance(self, x, y):
        return circle_distance(x, y, self.circumference)

    def total_mass(self) -> float:
        return 1.0 if self.normalized else self.circumference

    @property
    def measure_scale(self) -> float:
        # density of the reference measure w.r.t. arc length
        return 1.0 / self.circumference if self.normalized else 1.0

    def grid(self) -> np.ndarray:
        return np.arange(self.n_nodes) * (self.circumference / self.n_nodes)

    def quadrature(self):
        pts = self.grid()
        w = np.full(self.n_nodes, self.total_mass() / self.n_nodes)
        return pts, w


@dataclass(frozen=True)
class Torus(PmmSpace):
    """Flat product of two circles with circumferences (len1, len2)."""

    len1: float = 2 * np.pi
    len2: float = 2 * np.pi
    base: tuple = (0.0, 0.0)
    n_nodes: tuple = (256, 128)
    normalized: bool = False

    def __post_init__(self):
        if self.len1 <= 0 or self.len2 <= 0:
            raise SpaceError("circumferences must be positive")

    @property
    def mass_mode(self):
        return NORMALIZED if self.normalized else SIGMA_FINITE

    @property
    def base_point(self):
        return np.asarray(self.base, dtype=float)

    def factors(self):
        return (
            Circle(self.len1, self.base[0], self.n_nodes[0], normalized=False),
            Circle(self.len2, self.base[1], self.n_nodes[1], normalized=False),
        )

    def distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d1 = circle_distance(x[..., 0], y[..., 0], self.len1)
        d2 = circle_distance(x[..., 1], y[..., 1], self.len2)
        return np.sqrt(d1 * d1 + d2 * d2)

    def total_mass(self) -> float:
        return 1.0 if self.normalized else self.len1 * self.len2

    @property
    def measure_scale(self) -> float:
        return 1.0 / (self.len1 * self.len2) if self.normalized else 1.0

    def quadrature(self):
        c1, c2 = self.factors()
        g1, g2 = c1.grid(), c2.grid()
        xx, yy = np.meshgrid(g1, g2, indexing="ij")
        pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
        w = np.full(len(pts), self.total_mass() / len(pts))
        return pts, w


@dataclass(frozen=True)
class Interval(PmmSpace):
    a: float = 0.0
    b: float = 1.0
    base: Optional[float] = None
    n_nodes: int = 1024
    normalized: bool = False

    def __post_init__(self):
        if not self.a < self.b:
            raise SpaceError("need a < b")

    @property
    def mass_mode(self):
        return NORMALIZED if self.normalized else SIGMA_FINITE

    @property
    def base_point(self):
        return 0.5 * (self.a + self.b) if self.base is None else self.base

    def distance(self, x, y):
        return np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    @property
    def length(self) -> float:
        return self.b - self.a

    def total_mass(self) -> float:
        return 1.0 if self.normalized else self.length

    @property
    def measure_scale(self) -> float:
        return 1.0 / self.length if self.normalized else 1.0

    def grid(self) -> np.ndarray:
        # midpoint rule keeps the Neumann kernel quadrature clean at the ends
        h = self.length / self.n_nodes
        return self.a + (np.arange(self.n_nodes) + 0.5) * h

    def quadrature(self):
        pts = self.grid()
        w = np.full(self.n_nodes, self.total_mass() / self.n_nodes)
        return pts, w


@dataclass(frozen=True)
class EuclideanLogConcave(PmmSpace):
    """(R^d, Euclidean, e^{-V} dx); quadrature supported in dimension 1."""

    dim: int
    potential: Potential
    base: object = 0.0
    grid_radius: float = 10.0
    n_nodes: int = 4096

    mass_mode = SIGMA_FINITE

    def __post_init__(self):
        if self.dim < 1:
            raise SpaceError("dim must be positive")

    @property
    def base_point(self):
        return np.atleast_1d(np.asarray(self.base, dtype=float))

    def distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.dim == 1 and x.ndim <= 1 and y.ndim <= 1:
            return np.abs(x - y)
        return np.linalg.norm(np.atleast_2d(x) - np.atleast_2d(y), axis=-1)

    def total_mass(self) -> float:
        _, w = self.quadrature()
        return float(np.sum(w))

    def quadrature(self):
        if self.dim != 1:
            raise SpaceError("quadrature only available in dimension 1")
        x0 = float(self.base_point[0])
        h = 2 * self.grid_radius / self.n_nodes
        pts = x0 - self.grid_radius + (np.arange(self.n_nodes) + 0.5) * h
        dens = np.exp(-np.asarray([self.potential.value(np.atleast_1d(p)) for p in pts]))
        return pts, dens * h


@dataclass(frozen=True)
class ConvexDomainLogConcave(PmmSpace):
    """e^{-V} dx restricted to a closed convex domain; sampling-only space."""

    dim: int
    potential: Potential
    domain: ConvexDomain
    base: object = 0.0

    mass_mode = SIGMA_FINITE

    def __post_init__(self):
        if not self.domain.contains(self.base_point):
            raise SpaceError("base point outside the domain")

    @property
    def base_point(self):
        return np.atleast_1d(np.asarray(self.base, dtype=float))

    def distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.dim == 1 and x.ndim <= 1 and y.ndim <= 1:
            return np.abs(x - y)
        return np.linalg.norm(np.atleast_2d(x) - np.atleast_2d(y), axis=-1)

    def total_mass(self) -> float:
        raise SpaceError("no quadrature on general convex-domain spaces")

    def quadrature(self):
        raise SpaceError("no quadrature on general convex-domain spaces")


def _check_triangle(dist: np.ndarray, tol: float, rng_seed: int = 0) -> None:
    n = len(dist)
    if n <= 60:
        worst = np.max(dist[:, None, :] - dist[:, :, None] - dist[None, :, :])
        if worst > tol:
            raise SpaceError("triangle inequality violated by %.2e" % worst)
        return
    rng = np.random.default_rng(rng_seed)
    i, j, k = rng.integers(0, n, size=(3, 20000))
    worst = np.max(dist[i, j] - dist[i, k] - dist[k, j])
    if worst > tol:
        raise SpaceError("triangle inequality violated by %.2e" % worst)


@dataclass(frozen=True)
class FiniteMms(PmmSpace):
    """A finite metric measure space: distance matrix plus atom weights."""

    dist: np.ndarray
    weights: np.ndarray
    base_index: int = 0
    coords: Optional[np.ndarray] = None   # optional embedding, for plots/maps

    mass_mode = NORMALIZED

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "weights", w)
        n = len(w)
        if d.shape != (n, n):
            raise SpaceError("dist must be n x n")
        if np.any(np.abs(np.diag(d)) > 0):
            raise SpaceError("nonzero diagonal")
        if np.max(np.abs(d - d.T)) > TRIANGLE_TOL:
            raise SpaceError("dist not symmetric")
        if np.any(d < 0):
            raise SpaceError("negative distances")
        if np.any(w <= 0):
            raise SpaceError("weights must be strictly positive")
        if not 0 <= self.base_index < n:
            raise SpaceError("base_index out of range")
        _check_triangle(d, TRIANGLE_TOL)

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def base_point(self) -> int:
        return self.base_index

    def distance(self, x, y):
        return self.dist[np.asarray(x, dtype=int), np.asarray(y, dtype=int)]

    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def quadrature(self):
        return np.arange(self.n), self.weights.copy()

    def save(self, path) -> None:
        """Flat file: header ``n base_index``, n weight lines, n distance rows."""
        with open(path, "w") as fh:
            fh.write("%d %d\n" % (self.n, self.base_index))
            for w in self.weights:
                fh.write("%.17g\n" % w)
            for row in self.dist:
                fh.write(" ".join("%.17g" % v for v in row) + "\n")

    @staticmethod
    def load(path) -> "FiniteMms":
        with open(path) as fh:
            tokens = fh.read().split()
        it = iter(tokens)
        n = int(next(it))
        base = int(next(it))
        w = np.array([float(next(it)) for _ in range(n)])
        d = np.array([float(next(it)) for _ in range(n * n)]).reshape(n, n)
        return FiniteMms(dist=d, weights=w, base_index=base)


@dataclass(frozen=True)
class CollapseMap:
    """1-Lipschitz map onto a limit space with an explicit fiber bound.

    Stands in for an isometric embedding into a common ambient space: any
    W_1 discrepancy measured after collapsing is off by at most
    ``fiber_diameter_bound`` from the embedded one.
    """

    source: PmmSpace
    target: PmmSpace
    map: Callable
    fiber_diameter_bound: float

    def __call__(self, x):
        return self.map(x)

    def check_lipschitz(self, xs, ys, tol: float = LIPSCHITZ_TOL) -> float:
        """Max of d_target(m(x), m(y)) - d_source(x, y) over given pairs."""
        worst = -np.inf
        for x, y in zip(xs, ys):
            ds = float(np.asarray(self.source.distance(x, y)))
            dt = float(np.asarray(self.target.distance(self.map(x), self.map(y))))
            worst = max(worst, dt - ds)
        if worst > tol:
            raise SpaceError("collapse map not 1-Lipschitz (excess %.2e)" % worst)
        return worst


@dataclass(frozen=True)
class QuadratureDensity:
    """A measure on a quadrature grid: d(mu) = density * d(reference)."""

    points: np.ndarray
    base_weights: np.ndarray
    density: np.ndarray

    def masses(self) -> np.ndarray:
        return self.base_weights * self.density

    def total(self) -> float:
        return float(np.sum(self.masses()))

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(self.masses() * np.asarray(values, dtype=float)))


def weighted_measure(space: PmmSpace, C: float = 1.0):
    """The probability reference: m/m(X) in finite-mass mode, else the
    Gaussian-weighted normalization (1/z) e^{-C d^2(., base)} m."""
    if C <= 0:
        raise SpaceError("C must be positive")
    if isinstance(space, FiniteMms):
        w = space.weights / space.total_mass()
        return DiscreteMeasure(np.arange(space.n), w)
    pts, w = space.quadrature()
    if space.mass_mode == NORMALIZED or not isinstance(space, EuclideanLogConcave):
        # finite-mass branch: C is ignored
        total = float(np.sum(w))
        return QuadratureDensity(pts, w, np.full(len(w), 1.0 / total))
    d2 = np.asarray(space.distance(pts, space.base_point[0] if space.dim == 1 else space.base_point)) ** 2
    weight = np.exp(-C * d2)
    tail = max(weight[0] * w[0], weight[-1] * w[-1])
    z = float(np.sum(w * weight))
    if z <= 0 or tail > 1e-10 * z:
        raise SpaceError("weight e^{-C d^2} not integrable on the grid; C too small")
    return QuadratureDensity(pts, w, weight / z)


def volume_growth_check(space: PmmSpace, c1: float, c2: float, radii) -> dict:
    """Check m(B_r(base)) <= c1 e^{c2 r^2} at each radius."""
    radii = list(radii)
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise SpaceError("radii must be positive and increasing")
    rows = []
    first_violation = None
    for r in radii:
        mass = space.ball_mass(space.base_point, r)
        bound = c1 * np.exp(c2 * r * r)
        ok = mass <= bound + 1e-12
        if not ok and first_violation is None:
            first_violation = r
        rows.append({"r": float(r), "mass": mass, "bound": float(bound), "pass": bool(ok)})
    return {"check": "volume_growth", "rows": rows,
            "first_violation": first_violation, "pass": first_violation is None}


def theta_comparison(kappa: float, theta) -> np.ndarray:
    """The comparison function: sin(sqrt(k) t)/sqrt(k), t, or sinh form."""
    t = np.asarray(theta, dtype=float)
    if kappa > 0:
        s = np.sqrt(kappa)
        return np.sin(s * t) / s
    if kappa < 0:
        s = np.sqrt(-kappa)
        return np.sinh(s * t) / s
    return t


def bishop_gromov_check(space: PmmSpace, N: float, K: float, D: float, radii) -> dict:
    """Lower volume bound m(B_r) >= (int_0^r Theta^N / int_0^D Theta^N) m(B_D),
    plus an empirical exponent fit of r -> m(B_r)."""
    if N <= 1:
        raise SpaceError("N must exceed 1")
    radii = [float(r) for r in radii]
    if any(r > D + 1e-12 for r in radii):
        raise SpaceError("radii must not exceed D")
    ts = np.linspace(0.0, D, 4001)

    def theta_integral(r):
        sel = ts <= r
        return float(np.trapezoid(theta_comparison(K / N, ts[sel]) ** N, ts[sel]))

    denom = theta_integral(D)
    mass_d = space.ball_mass(space.base_point, D)
    c_convention = 1.0 / denom
    rows = []
    for r in radii:
        mass = space.ball_mass(space.base_point, r)
        bound = theta_integral(r) / denom * mass_d
        if mass <= 0:
            rows.append({"r": r, "mass": 0.0, "bound": bound, "pass": False,
                         "degenerate": True})
            continue
        rows.append({"r": r, "mass": mass, "bound": bound,
                     "pass": bool(mass >= bound - 1e-12), "degenerate": False})
    good = [(np.log(r["r"]), np.log(r["mass"])) for r in rows if r["mass"] > 0]
    if len(good) >= 2:
        lx, ly = np.array(good).T
        exponent = float(np.polyfit(lx, ly, 1)[0])
    else:
        exponent = float("nan")
    return {"check": "bishop_gromov", "rows": rows, "exponent_fit": exponent,
            "c_convention": c_convention,
            "pass": all(r["pass"] for r in rows if not r.get("degenerate"))}


def collapse_map_torus(n: int, circumference: float = 2 * np.pi,
                       normalized: bool = True, n_nodes=(256, 64)) -> CollapseMap:
    """Projection Torus(c, c/n) -> Circle(c); fiber diameter = half the
    second-factor circumference."""
    if n < 1:
        raise SpaceError("n must be >= 1")
    torus = Torus(circumference, circumference / n, n_nodes=n_nodes, normalized=normalized)
    circle = Circle(circumference, normalized=normalized)
    return CollapseMap(
        source=torus,
        target=circle,
        map=lambda x: np.asarray(x, dtype=float)[..., 0],
        fiber_diameter_bound=circumference / (2 * n),
    )


def mesh_cone(n: int, resolution: int):
    """Triangulated point cloud on {y^2 + z^2 = x/n, 0 <= x <= 1} with
    graph-geodesic distances; collapses onto Interval(0, 1) by x-projection."""
    if n < 1:
        raise SpaceError("n must be >= 1")
    if resolution < 4:
        raise SpaceError("resolution must be >= 4")
    rings = resolution
    angular = resolution
    xs = np.linspace(0.0, 1.0, rings + 1)[1:]
    radii = np.sqrt(xs / n)
    phis = 2 * np.pi * np.arange(angular) / angular

    # node 0 is the apex; ring j node k is 1 + j*angular + k
    coords = [np.array([0.0, 0.0, 0.0])]
    for x, r in zip(xs, radii):
        for p in phis:
            coords.append(np.array([x, r * np.cos(p), r * np.sin(p)]))
    coords = np.asarray(coords)
    n_nodes = len(coords)

    rows, cols = [], []

    def connect(i, j):
        rows.append(i)
        cols.append(j)

    for k in range(angular):
        connect(0, 1 + k)
    for j in range(rings):
        for k in range(angular):
            a = 1 + j * angular + k
            connect(a, 1 + j * angular + (k + 1) % angular)
            if j + 1 < rings:
                b = 1 + (j + 1) * angular + k
                connect(a, b)
                connect(a, 1 + (j + 1) * angular + (k + 1) % angular)
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    lengths = np.linalg.norm(coords[rows] - coords[cols], axis=1)
    graph = coo_matrix((lengths, (rows, cols)), shape=(n_nodes, n_nodes))
    graph = graph.maximum(graph.T)
    n_comp, _ = connected_components(graph, directed=False)
    if n_comp != 1:
        raise SpaceError("cone mesh graph is disconnected; increase resolution")
    dist = shortest_path(graph, method="D", directed=False)

    # Hausdorff-proportional atom weights: meridian arclength times ring girth
    ds = np.empty(rings)
    edges = np.concatenate([[0.0], 0.5 * (xs[:-1] + xs[1:]), [1.0]])
    for j, x in enumerate(xs):
        lo, hi = edges[j], edges[j + 1]
        tt = np.linspace(max(lo, 1e-9), hi, 64)
        rp = 0.5 / np.sqrt(n * tt)
        ds[j] = np.trapezoid(np.sqrt(1.0 + rp * rp), tt)
    w = np.empty(n_nodes)
    w[0] = 1e-3 * np.min(ds * 2 * np.pi * radii / angular)
    for j in range(rings):
        w[1 + j * angular:1 + (j + 1) * angular] = ds[j] * 2 * np.pi * radii[j] / angular
    w /= w.sum()

    space = FiniteMms(dist=dist, weights=w, base_index=0, coords=coords)
    interval = Interval(0.0, 1.0, base=0.0, normalized=True)
    node_x = coords[:, 0].copy()
    fiber = np.pi * np.sqrt(1.0 / n)
    cmap = CollapseMap(
        source=space,
        target=interval,
        map=lambda idx: node_x[np.asarray(idx, dtype=int)],
        fiber_diameter_bound=fiber,
    )
    return space, cmap
