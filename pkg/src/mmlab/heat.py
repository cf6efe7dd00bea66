"""Heat semigroups and kernels on the model spaces.

Generator convention: the full weighted Laplacian, so Brownian increments
have variance 2t per unit time and the matching SDE is
dX = -grad V dt + sqrt(2) dW.  On a circle of circumference 2*pi the
eigenvalues are k^2 and the spectral gap is 1.

Closed forms are used wherever they exist (wrapped Gaussians / eigen-sums on
circle, torus, interval; Mehler formula for quadratic potentials); finite
spaces get a graph generator with exact detailed balance and a cached
symmetric eigendecomposition.
"""

from __future__ import annotations

import threading
import warnings
from typing import Callable, Optional, Sequence

import numpy as np

from .spaces import (
    Circle,
    ConvexDomainLogConcave,
    EuclideanLogConcave,
    FiniteMms,
    Interval,
    PmmSpace,
    QuadratureDensity,
    Torus,
    weighted_measure,
)
from .transport import DiscreteMeasure

STOCHASTIC_TOL = 1e-10
DETAILED_BALANCE_TOL = 1e-9
# threshold below which image sums beat eigen-sums (both < 50 terms to 1e-12)
SERIES_CROSSOVER = 0.3


class HeatError(ValueError):
    pass


def _gauss(z: np.ndarray, var: float) -> np.ndarray:
    return np.exp(-np.square(z) / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)


def circle_kernel_arc(t: float, dx, circumference: float) -> np.ndarray:
    """Heat kernel density w.r.t. arc length as a function of the
    (signed) coordinate difference."""
    if t <= 0:
        raise HeatError("t must be positive")
    c = float(circumference)
    dx = np.asarray(dx, dtype=float)
    if t < SERIES_CROSSOVER * (c / (2 * np.pi)) ** 2:
        n_img = int(np.ceil(13.0 * np.sqrt(t) / c)) + 2
        shifts = np.arange(-n_img, n_img + 1) * c
        z = dx[..., None] + shifts
        return np.sum(_gauss(z, 2.0 * t), axis=-1)
    k_max = int(np.ceil(c / (2 * np.pi) * np.sqrt(42.0 / t))) + 1
    ks = np.arange(1, k_max + 1)
    omega = (2 * np.pi * ks / c) ** 2
    series = np.sum(np.exp(-omega * t) * np.cos(np.outer(dx.ravel(), 2 * np.pi * ks / c)), axis=-1)
    return (1.0 + 2.0 * series.reshape(dx.shape)) / c


def interval_kernel_leb(t: float, x, y, a: float, length: float) -> np.ndarray:
    """Neumann heat kernel density w.r.t. Lebesgue on [a, a+length]."""
    if t <= 0:
        raise HeatError("t must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    L = float(length)
    if t < SERIES_CROSSOVER * (L / np.pi) ** 2:
        n_img = int(np.ceil(13.0 * np.sqrt(t) / (2 * L))) + 2
        shifts = np.arange(-n_img, n_img + 1) * 2 * L
        u = (x - y)[..., None] + shifts
        v = (x + y - 2 * a)[..., None] + shifts
        return np.sum(_gauss(u, 2.0 * t) + _gauss(v, 2.0 * t), axis=-1)
    k_max = int(np.ceil(L / np.pi * np.sqrt(42.0 / t))) + 1
    ks = np.arange(1, k_max + 1)
    lam = (ks * np.pi / L) ** 2
    cx = np.cos(np.multiply.outer(x - a, ks * np.pi / L))
    cy = np.cos(np.multiply.outer(y - a, ks * np.pi / L))
    return 1.0 / L + (2.0 / L) * np.sum(np.exp(-lam * t) * cx * cy, axis=-1)


class SpectralKernel:
    """Semigroup interface: quadrature grid plus kernel/apply queries.

    All kernel densities are w.r.t. the space's reference measure, so
    conservativeness reads sum_j p(t, x, y_j) w_j = 1.
    """

    space: PmmSpace

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    def kernel_row(self, t: float, x) -> np.ndarray:
        """Density p(t, x, .) at every grid point."""
        raise NotImplementedError

    def kernel_value(self, t: float, x, y) -> float:
        raise NotImplementedError

    def apply_values(self, t: float, values: np.ndarray) -> np.ndarray:
        """P_t f for f given by its values on the grid."""
        raise NotImplementedError

    def gap(self) -> float:
        raise NotImplementedError

    def evaluate(self, f, pts=None) -> np.ndarray:
        pts = self._points if pts is None else pts
        if callable(f):
            if pts.ndim == 1:
                try:
                    vals = np.asarray(f(pts), dtype=float)
                    if vals.shape == pts.shape:
                        return vals
                except Exception:
                    pass
                return np.asarray([f(p) for p in pts], dtype=float)
            return np.asarray([f(p) for p in pts], dtype=float)
        vals = np.asarray(f, dtype=float)
        if vals.shape[0] != len(pts):
            raise HeatError("function vector length mismatch")
        return vals


class CircleKernel(SpectralKernel):
    def __init__(self, space: Circle):
        self.space = space
        self._points, self._weights = space.quadrature()
        self._h = space.circumference / space.n_nodes
        self._cache: dict = {}
        self._lock = threading.Lock()

    def kernel_row(self, t: float, x) -> np.ndarray:
        arc = circle_kernel_arc(t, self._points - float(x), self.space.circumference)
        return arc / self.space.measure_scale

    def kernel_value(self, t: float, x, y) -> float:
        arc = circle_kernel_arc(t, np.asarray(float(x) - float(y)), self.space.circumference)
        return float(arc) / self.space.measure_scale

    def _multiplier(self, t: float) -> np.ndarray:
        key = float(t)
        with self._lock:
            mult = self._cache.get(key)
        if mult is None:
            row = circle_kernel_arc(t, self._points, self.space.circumference)
            mult = np.fft.rfft(row) * self._h
            with self._lock:
                self._cache[key] = mult
        return mult

    def apply_values(self, t: float, values: np.ndarray) -> np.ndarray:
        if t == 0:
            return np.asarray(values, dtype=float)
        f_hat = np.fft.rfft(np.asarray(values, dtype=float))
        return np.fft.irfft(f_hat * self._multiplier(t), n=self.space.n_nodes)

    def gap(self) -> float:
        return (2 * np.pi / self.space.circumference) ** 2


class TorusKernel(SpectralKernel):
    def __init__(self, space: Torus):
        self.space = space
        c1, c2 = space.factors()
        self._f1 = CircleKernel(c1)
        self._f2 = CircleKernel(c2)
        self._points, self._weights = space.quadrature()
        self._shape = (space.n_nodes[0], space.n_nodes[1])

    def kernel_row(self, t: float, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a1 = circle_kernel_arc(t, self._f1._points - x[0], self.space.len1)
        a2 = circle_kernel_arc(t, self._f2._points - x[1], self.space.len2)
        return np.outer(a1, a2).ravel() / self.space.measure_scale

    def kernel_value(self, t: float, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        a1 = circle_kernel_arc(t, np.asarray(x[0] - y[0]), self.space.len1)
        a2 = circle_kernel_arc(t, np.asarray(x[1] - y[1]), self.space.len2)
        return float(a1) * float(a2) / self.space.measure_scale

    def apply_values(self, t: float, values: np.ndarray) -> np.ndarray:
        if t == 0:
            return np.asarray(values, dtype=float)
        n1, n2 = self._shape
        v = np.asarray(values, dtype=float).reshape(self._shape)
        v = np.fft.irfft(np.fft.rfft(v, axis=0) * self._f1._multiplier(t)[:, None], n=n1, axis=0)
        v = np.fft.irfft(np.fft.rfft(v, axis=1) * self._f2._multiplier(t)[None, :], n=n2, axis=1)
        return v.ravel()

    def gap(self) -> float:
        return min(self._f1.gap(), self._f2.gap())


class IntervalKernel(SpectralKernel):
    def __init__(self, space: Interval):
        self.space = space
        self._points, self._weights = space.quadrature()
        self._h = space.length / space.n_nodes
        self._cache: dict = {}
        self._lock = threading.Lock()

    def kernel_row(self, t: float, x) -> np.ndarray:
        leb = interval_kernel_leb(t, np.asarray(float(x)), self._points,
                                  self.space.a, self.space.length)
        return leb / self.space.measure_scale

    def kernel_value(self, t: float, x, y) -> float:
        leb = interval_kernel_leb(t, np.asarray(float(x)), np.asarray(float(y)),
                                  self.space.a, self.space.length)
        return float(leb) / self.space.measure_scale

    def _matrix(self, t: float) -> np.ndarray:
        key = float(t)
        with self._lock:
            mat = self._cache.get(key)
        if mat is None:
            mat = interval_kernel_leb(t, self._points[:, None], self._points[None, :],
                                      self.space.a, self.space.length) * self._h
            with self._lock:
                self._cache[key] = mat
        return mat

    def apply_values(self, t: float, values: np.ndarray) -> np.ndarray:
        if t == 0:
            return np.asarray(values, dtype=float)
        return self._matrix(t) @ np.asarray(values, dtype=float)

    def gap(self) -> float:
        return (np.pi / self.space.length) ** 2


class GaussianKernel(SpectralKernel):
    """Exact semigroup for V(x) = a|x|^2/2 on the line (Mehler / OU), with
    a = 0 degenerating to free Brownian motion."""

    def __init__(self, space: EuclideanLogConcave):
        if space.dim != 1:
            raise HeatError("closed-form Gaussian semigroup is 1-D only")
        if space.potential.quadratic_coeff is None:
            raise HeatError("no computable kernel for non-quadratic potentials")
        self.space = space
        self.a = float(space.potential.quadratic_coeff)
        self._points, self._weights = space.quadrature()
        self._h = 2 * space.grid_radius / space.n_nodes

    def _moments(self, t: float, x):
        if self.a > 0:
            decay = np.exp(-self.a * t)
            var = (1.0 - decay * decay) / self.a
        else:
            decay, var = 1.0, 2.0 * t
        return np.asarray(x, dtype=float) * decay, var

    def kernel_row(self, t: float, x) -> np.ndarray:
        if t <= 0:
            raise HeatError("t must be positive")
        mean, var = self._moments(t, float(np.atleast_1d(x)[0]))
        dens = _gauss(self._points - mean, var)
        return dens * np.exp(0.5 * self.a * np.square(self._points))

    def kernel_value(self, t: float, x, y) -> float:
        if t <= 0:
            raise HeatError("t must be positive")
        x0 = float(np.atleast_1d(x)[0])
        y0 = float(np.atleast_1d(y)[0])
        mean, var = self._moments(t, x0)
        return float(_gauss(y0 - mean, var)) * np.exp(0.5 * self.a * y0 * y0)

    def apply_values(self, t: float, values: np.ndarray) -> np.ndarray:
        if t == 0:
            return np.asarray(values, dtype=float)
        mean, var = self._moments(t, self._points)
        mat = _gauss(self._points[None, :] - mean[:, None], var) * self._h
        return mat @ np.asarray(values, dtype=float)

    def gap(self) -> float:
        if self.a <= 0:
            raise HeatError("no spectral gap without confinement")
        return self.a


class FiniteKernel(SpectralKernel):
    """Matrix semigroup on a finite space.

    The default generator is an epsilon-neighborhood graph with Gaussian edge
    weights m_i m_j exp(-d^2/eps^2) (eps = 2x median nearest-neighbor
    distance, edges kept up to 3 eps), scaled by 2/eps^2 and divided by m_i so
    detailed balance m_i L_ij = m_j L_ji holds exactly.
    """

    def __init__(self, space: FiniteMms, generator: Optional[np.ndarray] = None):
        self.space = space
        self._points, self._weights = space.quadrature()
        m = space.weights
        if generator is None:
            generator = graph_generator(space)
        L = np.asarray(generator, dtype=float)
        if np.max(np.abs(L.sum(axis=1))) > 1e-9:
            raise HeatError("generator rows must sum to 0")
        sym = m[:, None] * L
        if np.max(np.abs(sym - sym.T)) > DETAILED_BALANCE_TOL * max(1.0, np.max(np.abs(sym))):
            raise HeatError("generator violates detailed balance w.r.t. the weights")
        self.generator = L
        sqrt_m = np.sqrt(m)
        s_mat = (sqrt_m[:, None] / sqrt_m[None, :]) * L
        s_mat = 0.5 * (s_mat + s_mat.T)
        lam, q = np.linalg.eigh(s_mat)
        self._lam = lam
        self._modes_left = q / sqrt_m[:, None]      # D^{-1/2} Q
        self._modes_right = (q * sqrt_m[:, None]).T  # Q^T D^{1/2}
        self._cache: dict = {}
        self._lock = threading.Lock()

    def transition_matrix(self, t: float) -> np.ndarray:
        key = float(t)
        with self._lock:
            mat = self._cache.get(key)
        if mat is None:
            mat = (self._modes_left * np.exp(t * self._lam)) @ self._modes_right
            with self._lock:
                self._cache[key] = mat
        return mat

    def kernel_row(self, t: float, x) -> np.ndarray:
        if t <= 0:
            raise HeatError("t must be positive")
        i = int(x)
        if not 0 <= i < self.space.n:
            raise HeatError("atom index out of range")
        return self.transition_matrix(t)[i] / self.space.weights

    def kernel_value(self, t: float, x, y) -> float:
        return float(self.kernel_row(t, x)[int(y)])

    def apply_values(self, t: float, values: np.ndarray) -> np.ndarray:
        if t == 0:
            return np.asarray(values, dtype=float)
        return self.transition_matrix(t) @ np.asarray(values, dtype=float)

    def gap(self) -> float:
        rates = np.sort(-self._lam)
        if len(rates) < 2 or rates[1] < 1e-10:
            warnings.warn("space appears disconnected; spectral gap is 0")
            return 0.0
        return float(rates[1])


def graph_generator(space: FiniteMms, eps: Optional[float] = None) -> np.ndarray:
    d = space.dist
    m = space.weights
    n = space.n
    if n == 1:
        return np.zeros((1, 1))
    if eps is None:
        off = d + np.diag(np.full(n, np.inf))
        nn = np.min(off, axis=1)
        eps = 2.0 * float(np.median(nn))
    if eps <= 0:
        raise HeatError("degenerate distances: zero nearest-neighbor spacing")
    w = np.outer(m, m) * np.exp(-np.square(d) / (eps * eps))
    w[d > 3 * eps] = 0.0
    np.fill_diagonal(w, 0.0)
    L = (2.0 / (eps * eps)) * (w / m[:, None])
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


_KERNEL_CACHE: dict = {}
_GENERATOR_OVERRIDES: dict = {}


def set_generator(space: FiniteMms, generator: np.ndarray) -> None:
    """Pin a custom generator matrix to a finite space (before first use)."""
    _GENERATOR_OVERRIDES[id(space)] = (space, np.asarray(generator, dtype=float))
    _KERNEL_CACHE.pop(id(space), None)


def get_kernel(space: PmmSpace, generator: Optional[np.ndarray] = None) -> SpectralKernel:
    """Semigroup object for a space, cached so eigen-data is built once."""
    if generator is not None:
        return FiniteKernel(space, generator)
    key = id(space)
    hit = _KERNEL_CACHE.get(key)
    if hit is not None and hit[0] is space:
        return hit[1]
    if isinstance(space, Circle):
        sk = CircleKernel(space)
    elif isinstance(space, Torus):
        sk = TorusKernel(space)
    elif isinstance(space, Interval):
        sk = IntervalKernel(space)
    elif isinstance(space, EuclideanLogConcave):
        sk = GaussianKernel(space)
    elif isinstance(space, FiniteMms):
        override = _GENERATOR_OVERRIDES.get(key)
        gen = override[1] if override is not None and override[0] is space else None
        sk = FiniteKernel(space, gen)
    else:
        raise HeatError("no computable heat kernel for %s" % type(space).__name__)
    _KERNEL_CACHE[key] = (space, sk)
    return sk


def _check_point(space: PmmSpace, x) -> None:
    if isinstance(space, Interval):
        v = float(np.atleast_1d(x)[0])
        if not space.a - 1e-12 <= v <= space.b + 1e-12:
            raise HeatError("point outside the interval")
    elif isinstance(space, FiniteMms):
        i = int(x)
        if not 0 <= i < space.n:
            raise HeatError("atom index out of range")


def heat_kernel(space: PmmSpace, t: float, x, y) -> float:
    """p(t, x, y), the transition density w.r.t. the reference measure."""
    if t <= 0:
        raise HeatError("t must be positive")
    _check_point(space, x)
    _check_point(space, y)
    return get_kernel(space).kernel_value(t, x, y)


def semigroup_apply(space: PmmSpace, t: float, f) -> np.ndarray:
    """P_t f as a vector of values on the space's quadrature grid/atoms.

    ``f`` may be a callable on native points or a grid-value vector.
    """
    if t < 0:
        raise HeatError("t must be nonnegative")
    sk = get_kernel(space)
    return sk.apply_values(t, sk.evaluate(f))


def on_diagonal(space: PmmSpace, t: float, x) -> float:
    """p(t, x, x) computed as the squared L^2(m)-norm of p(t/2, x, .)."""
    if t <= 0:
        raise HeatError("t must be positive")
    _check_point(space, x)
    sk = get_kernel(space)
    row = sk.kernel_row(0.5 * t, x)
    return float(np.sum(sk.weights * row * row))


def spectral_gap(space: PmmSpace) -> float:
    """Smallest nonzero eigenvalue of minus the generator."""
    return get_kernel(space).gap()


def _tilde_weights(space: PmmSpace, C: float = 1.0) -> np.ndarray:
    ref = weighted_measure(space, C)
    if isinstance(ref, DiscreteMeasure):
        return ref.weights
    return ref.masses()


def mixing_bound_check(space: PmmSpace, t_grid: Sequence[float], trial_functions,
                       M: Optional[float] = None, eps: Optional[float] = None,
                       tol: float = 1e-9) -> dict:
    """Exponential L^2 mixing at rate given by the spectral gap.

    Checks ||P_t f - mean(f)||_2 <= e^{-gap t} ||f - mean(f)||_2 in L^2 of
    the probability reference, for every trial f and grid t.  If an
    on-diagonal bound ``M`` at a time ``eps`` is supplied, the sup-norm chain
    bound sup|P_t f - mean f| <= M^{1/2} e^{-gap (t - eps)} ||f - mean f||_2
    is evaluated as well for t > eps.
    """
    sk = get_kernel(space)
    lam = sk.gap()
    tw = _tilde_weights(space)
    rows = []
    for fi, f in enumerate(trial_functions):
        vals = sk.evaluate(f)
        mean = float(np.sum(tw * vals))
        centered = vals - mean
        base = float(np.sqrt(np.sum(tw * centered * centered)))
        for t in t_grid:
            pt = sk.apply_values(t, vals) - mean
            lhs = float(np.sqrt(np.sum(tw * pt * pt)))
            rhs = np.exp(-lam * t) * base
            row = {"check": "mixing_l2", "f": fi, "t": float(t),
                   "max_violation": max(lhs - rhs, 0.0),
                   "pass": bool(lhs <= rhs + tol)}
            if M is not None and eps is not None and t > eps:
                sup = float(np.max(np.abs(pt)))
                chain = np.sqrt(M) * np.exp(-lam * (t - eps)) * base
                row["sup_gap"] = sup
                row["chain_bound"] = chain
                row["chain_pass"] = bool(sup <= chain + tol)
            rows.append(row)
    return {"check": "mixing_bound", "gap": lam, "rows": rows,
            "pass": all(r["pass"] and r.get("chain_pass", True) for r in rows)}


def relative_entropy(mu, ref) -> float:
    """Ent(mu | ref) = int rho log rho d(ref); +inf off the support of ref.

    Accepts a pair of probability vectors, or a pair of QuadratureDensity
    objects on the same grid.
    """
    if isinstance(mu, QuadratureDensity) and isinstance(ref, QuadratureDensity):
        if mu.points.shape != ref.points.shape or np.max(np.abs(mu.points - ref.points)) > 1e-12:
            raise HeatError("measures live on different grids")
        p = mu.masses()
        q = ref.masses()
    else:
        if isinstance(mu, DiscreteMeasure):
            mu = mu.weights
        if isinstance(ref, DiscreteMeasure):
            ref = ref.weights
        p = np.asarray(mu, dtype=float)
        q = np.asarray(ref, dtype=float)
        if p.shape != q.shape:
            raise HeatError("probability vectors of different lengths")
    active = p > 0
    if np.any(active & (q <= 0)):
        return float("inf")
    return float(np.sum(p[active] * np.log(p[active] / q[active])))


def entropy_identity_check(space: PmmSpace, C: float, mu_density: np.ndarray,
                           tol: float = 1e-6) -> dict:
    """Consistency of entropies against the raw and the weighted reference:
    Ent_m(mu) = Ent_mtilde(mu) - C int d^2(., base) dmu - log z
    (the correction vanishing into -log m(X) on finite-mass spaces)."""
    pts, w = space.quadrature()
    rho = np.asarray(mu_density, dtype=float)
    mass = float(np.sum(w * rho))
    if abs(mass - 1.0) > 1e-9:
        raise HeatError("mu must be a probability measure (got mass %g)" % mass)
    tilde = weighted_measure(space, C)
    g = tilde.density          # d(mtilde)/dm
    ent_m = float(np.sum(w * rho * np.where(rho > 0, np.log(np.maximum(rho, 1e-300)), 0.0)))
    ratio = rho / g
    ent_tilde = float(np.sum(w * rho * np.where(rho > 0, np.log(np.maximum(ratio, 1e-300)), 0.0)))
    if isinstance(space, EuclideanLogConcave) and space.mass_mode == "sigma-finite":
        d2 = np.asarray(space.distance(pts, float(space.base_point[0]))) ** 2
        z = float(np.sum(w * np.exp(-C * d2)))
        correction = C * float(np.sum(w * rho * d2)) + np.log(z)
    else:
        correction = np.log(space.total_mass())
    residual = ent_m - (ent_tilde - correction)
    return {"check": "entropy_identity", "ent_m": ent_m, "ent_tilde": ent_tilde,
            "correction": correction, "residual": residual,
            "pass": bool(abs(residual) <= tol)}


def feller_check(space: PmmSpace, test_functions, t_grid: Sequence[float],
                 tol: float = 1e-2) -> dict:
    """Strong continuity at t -> 0: sup|P_t f - f| shrinks below tol."""
    ts = sorted(float(t) for t in t_grid)
    sk = get_kernel(space)
    rows = []
    ok = True
    for fi, f in enumerate(test_functions):
        vals = sk.evaluate(f)
        gaps = []
        for t in ts:
            gap = float(np.max(np.abs(sk.apply_values(t, vals) - vals)))
            gaps.append(gap)
            rows.append({"check": "feller", "f": fi, "t": t, "sup_gap": gap})
        monotone = all(a <= b + 1e-9 for a, b in zip(gaps, gaps[1:]))
        if not (monotone and gaps[0] <= tol):
            ok = False
    return {"check": "feller", "rows": rows, "pass": ok}


def kernel_ball_sup(space: PmmSpace, t: float, xbar, r: float) -> float:
    """sup of p(t, xbar, .) over the ball of radius r, by grid scan."""
    if t <= 0 or r <= 0:
        raise HeatError("t and r must be positive")
    sk = get_kernel(space)
    row = sk.kernel_row(t, xbar)
    d = np.asarray(space.distance(sk.points, xbar))
    sel = d < r
    if not np.any(sel):
        return 0.0
    return float(np.max(row[sel]))


def gaussian_bound_check(space: PmmSpace, C1: float, C2: float, c: float, nu: float,
                         t_grid: Sequence[float], probe_pairs) -> dict:
    """Upper bound p(t,x,y) <= (C1/(c t^nu)) exp(-C2 d(x,y)^2 / t) on probes.

    Also reports the tightest admissible C1 and a log-log fit of the
    on-diagonal decay at the base point (empirical nu).
    """
    sk = get_kernel(space)
    rows = []
    tightest = 0.0
    for t in t_grid:
        worst = -np.inf
        for x, y in probe_pairs:
            p = sk.kernel_value(t, x, y)
            d = float(np.asarray(space.distance(x, y)))
            envelope = np.exp(-C2 * d * d / t) / (c * t ** nu)
            worst = max(worst, p - C1 * envelope)
            if envelope > 0:
                tightest = max(tightest, p / envelope)
        rows.append({"check": "gaussian_bound", "t": float(t),
                     "max_violation": max(worst, 0.0), "pass": bool(worst <= 1e-12)})
    diag = np.asarray([on_diagonal(space, t, space.base_point) for t in t_grid])
    if len(t_grid) >= 2 and np.all(diag > 0):
        slope = float(np.polyfit(np.log(np.asarray(t_grid, dtype=float)), np.log(diag), 1)[0])
        nu_fit = -slope
    else:
        nu_fit = float("nan")
    return {"check": "gaussian_bound", "rows": rows, "tightest_C1": tightest,
            "nu_fit": nu_fit, "pass": all(r["pass"] for r in rows)}
