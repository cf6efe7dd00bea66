"""Independent oracles used by the test suite.

Everything here is deliberately naive: brute-force vertex enumeration for the
transportation LP, closed forms for Gaussian/reflected diffusions, and direct
series sums for the periodic kernels.  Nothing imports from mmlab.
"""

import itertools

import numpy as np


def transport_vertex_value(weights_mu, weights_nu, cost):
    """Minimal transport cost by enumerating every vertex of the
    transportation polytope (basic feasible solutions = spanning trees of the
    complete bipartite support graph).  Only sensible for tiny supports."""
    a = np.asarray(weights_mu, dtype=float)
    b = np.asarray(weights_nu, dtype=float)
    c = np.asarray(cost, dtype=float)
    n, m = len(a), len(b)
    cells = list(itertools.product(range(n), range(m)))
    best = np.inf
    for basis in itertools.combinations(cells, n + m - 1):
        # union-find cycle check on the bipartite node set
        parent = list(range(n + m))

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        tree = True
        for i, j in basis:
            ru, rv = find(i), find(n + j)
            if ru == rv:
                tree = False
                break
            parent[ru] = rv
        if not tree:
            continue
        # peel leaves to solve the tree system
        flow = {}
        row_rem = a.copy()
        col_rem = b.copy()
        adj = {u: [] for u in range(n + m)}
        for i, j in basis:
            adj[i].append((n + j, (i, j)))
            adj[n + j].append((i, (i, j)))
        degree = {u: len(adj[u]) for u in range(n + m)}
        removed = set()
        stack = [u for u in range(n + m) if degree[u] == 1]
        feasible = True
        while stack:
            u = stack.pop()
            if u in removed:
                continue
            nbrs = [(v, e) for v, e in adj[u] if e not in flow]
            if not nbrs:
                removed.add(u)
                continue
            v, e = nbrs[0]
            val = row_rem[u] if u < n else col_rem[u - n]
            if val < -1e-9:
                feasible = False
                break
            flow[e] = val
            i, j = e
            row_rem[i] -= val
            col_rem[j] -= val
            removed.add(u)
            degree[v] -= 1
            if degree[v] == 1:
                stack.append(v)
        if not feasible or len(flow) != n + m - 1:
            continue
        vals = np.asarray(list(flow.values()))
        if np.any(vals < -1e-12):
            continue
        total = sum(f * c[i, j] for (i, j), f in flow.items())
        best = min(best, total)
    return best


def wasserstein_vertex(p, atoms_mu, w_mu, atoms_nu, w_nu):
    """W_p between small discrete measures via vertex enumeration."""
    A = np.atleast_2d(np.asarray(atoms_mu, dtype=float))
    B = np.atleast_2d(np.asarray(atoms_nu, dtype=float))
    if A.shape[0] == 1 and len(np.atleast_1d(w_mu)) > 1:
        A = A.T
    if B.shape[0] == 1 and len(np.atleast_1d(w_nu)) > 1:
        B = B.T
    d = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    val = transport_vertex_value(w_mu, w_nu, d ** p)
    return max(val, 0.0) ** (1.0 / p)


def gaussian_w2(sigma_a, sigma_b):
    """W_2 between centered 1-D Gaussians."""
    return abs(float(sigma_a) - float(sigma_b))


def circle_kernel_series(t, dx, circumference, terms=2000):
    """Heat kernel on a circle by the raw eigenfunction series (generator =
    full Laplacian, so eigenvalues (2 pi k / c)^2)."""
    c = float(circumference)
    k = np.arange(1, terms + 1)
    om = (2 * np.pi * k / c) ** 2
    return (1.0 + 2.0 * np.sum(np.exp(-om * t) * np.cos(2 * np.pi * k * dx / c))) / c


def interval_kernel_series(t, x, y, a, length, terms=2000):
    """Neumann heat kernel on [a, a+L] by the cosine eigenseries."""
    L = float(length)
    k = np.arange(1, terms + 1)
    lam = (np.pi * k / L) ** 2
    cx = np.cos(np.pi * k * (x - a) / L)
    cy = np.cos(np.pi * k * (y - a) / L)
    return (1.0 + 2.0 * np.sum(np.exp(-lam * t) * cx * cy)) / L


def ou_mean_var(a, x0, t):
    """Mean and variance of dX = -aX dt + sqrt(2) dW started at x0."""
    if a == 0:
        return x0, 2.0 * t
    return x0 * np.exp(-a * t), (1.0 - np.exp(-2.0 * a * t)) / a


def folded_normal_cdf(x, sigma):
    """CDF of |N(0, sigma^2)|."""
    from scipy.stats import norm
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 0.0, norm.cdf(x / sigma) - norm.cdf(-x / sigma))


def random_measure(rng, max_atoms, dim=1, spread=2.0):
    """Random discrete probability measure for property tests."""
    n = int(rng.integers(1, max_atoms + 1))
    atoms = rng.normal(scale=spread, size=(n, dim))
    w = rng.random(n) + 0.05
    return atoms, w / w.sum()
