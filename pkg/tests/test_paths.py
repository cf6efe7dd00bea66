import numpy as np
import pytest
import scipy.stats

from mmlab import (
    Circle,
    FiniteMms,
    Interval,
    PathEnsemble,
    Torus,
    box_domain,
    euler_maruyama,
    extract_fdd,
    get_kernel,
    kolmogorov_moment,
    modulus_statistic,
    quadratic_potential,
    reflected_em,
    sample_kernel_chain,
)
from mmlab.paths import PathError

from _oracles import folded_normal_cdf, ou_mean_var


def test_chain_determinism():
    space = Circle(2 * np.pi)
    times = np.linspace(0.0, 1.0, 21)
    a = sample_kernel_chain(space, "base", times, 200, seed=9)
    b = sample_kernel_chain(space, "base", times, 200, seed=9)
    assert np.array_equal(a.states, b.states)
    c = sample_kernel_chain(space, "base", times, 200, seed=10)
    assert not np.array_equal(a.states, c.states)


@pytest.mark.parametrize("space", [Circle(2 * np.pi), Interval(0.0, 1.0)])
def test_chain_marginal_matches_semigroup(space):
    times = np.linspace(0.0, 0.5, 11)
    count = 10000
    ens = sample_kernel_chain(space, "base", times, count, seed=21)
    sk = get_kernel(space)
    if isinstance(space, Circle):
        f = lambda x: np.cos(x)
    else:
        f = lambda x: np.cos(np.pi * x)
    final = ens.states[:, -1, 0]
    emp = float(np.mean(f(final)))
    se = float(np.std(f(final))) / np.sqrt(count)
    fvals = f(sk.points)
    pt = sk.apply_values(0.5, fvals)
    x0 = np.asarray(space.base_point, dtype=float)
    ref = float(pt[np.argmin(np.abs(np.asarray(space.distance(sk.points, x0))))])
    assert abs(emp - ref) <= 3 * se + 1e-3


def test_chain_marginal_finite():
    pts = np.linspace(0.0, 2 * np.pi, 16, endpoint=False)
    dist = np.abs(pts[:, None] - pts[None, :])
    dist = np.minimum(dist, 2 * np.pi - dist)
    space = FiniteMms(dist=dist, weights=np.full(16, 2 * np.pi / 16), base_index=0)
    times = np.linspace(0.0, 1.0, 11)
    ens = sample_kernel_chain(space, "base", times, 8000, seed=5)
    sk = get_kernel(space)
    p_ref = sk.transition_matrix(1.0)[0]
    counts = np.bincount(ens.states[:, -1, 0].astype(int), minlength=16) / 8000
    se = np.sqrt(p_ref * (1 - p_ref) / 8000)
    assert np.all(np.abs(counts - p_ref) <= 4 * se + 1e-3)


def test_chain_bad_grid_rejected():
    space = Circle(2 * np.pi)
    with pytest.raises(PathError):
        sample_kernel_chain(space, "base", [0.5, 1.0], 10, seed=0)
    with pytest.raises(PathError):
        sample_kernel_chain(space, "base", [0.0, 0.5, 0.5], 10, seed=0)


def test_em_ou_moments_and_weak_order():
    a, x0, T = 1.0, 1.0, 1.0
    v = quadratic_potential(a)
    m_ref, _ = ou_mean_var(a, x0, T)
    errs = []
    for dt in (2e-2, 1e-2, 5e-3):
        ens = euler_maruyama(v, x0, dt, T, 40000, seed=3)
        errs.append(abs(float(np.mean(ens.states[:, -1, 0])) - m_ref))
    # first-order weak error: halving dt roughly halves the bias
    assert errs[2] < errs[0]
    assert errs[0] <= 0.05


def test_em_zero_noise_gradient_flow():
    a, x0, T = 2.0, 1.0, 1.0
    ens = euler_maruyama(quadratic_potential(a), x0, 1e-4, T, 1, seed=0, noise=False)
    assert abs(ens.states[0, -1, 0] - x0 * np.exp(-a * T)) <= 1e-3


def test_em_divergence_guard_flags():
    # unstable drift dX = 5X dt with a large step blows up and gets frozen
    ens = euler_maruyama(quadratic_potential(-5.0), 1.0, 0.5, 20.0, 8, seed=1)
    assert np.all(ens.flags)
    assert np.all(np.isfinite(ens.states))


def test_reflected_paths_stay_inside():
    dom = box_domain(0.0, 1.0)
    ens = reflected_em(dom, quadratic_potential(0.0), 0.5, 1e-3, 1.0, 200, seed=4)
    assert np.all(ens.states >= -1e-12)
    assert np.all(ens.states <= 1.0 + 1e-12)


def test_reflected_folded_normal_ks():
    dom = box_domain(0.0, np.inf)
    ens = reflected_em(dom, quadratic_potential(0.0), 0.0, 1e-3, 0.5, 10000, seed=6)
    final = ens.states[:, -1, 0]
    ks = scipy.stats.kstest(final, lambda x: folded_normal_cdf(x, np.sqrt(2 * 0.5)))
    assert ks.pvalue >= 0.01


def test_reflected_interior_matches_free():
    # away from the boundary the confined sampler reproduces free EM exactly
    dom = box_domain(-100.0, 100.0)
    v = quadratic_potential(1.0)
    free = euler_maruyama(v, 0.0, 1e-3, 0.2, 50, seed=8)
    confined = euler_maruyama(v, 0.0, 1e-3, 0.2, 50, seed=8, domain=dom)
    assert np.allclose(free.states, confined.states, atol=1e-12)


def test_reflected_occupation_chi2():
    dom = box_domain(0.0, 1.0)
    ens = reflected_em(dom, quadratic_potential(0.0), 0.25, 5e-4, 1.5, 4000, seed=11)
    final = ens.states[:, -1, 0]
    hist, _ = np.histogram(final, bins=10, range=(0.0, 1.0))
    chi2 = scipy.stats.chisquare(hist)
    assert chi2.pvalue >= 0.01


def test_csv_roundtrip():
    space = Torus(2 * np.pi, np.pi)
    times = np.linspace(0.0, 0.5, 6)
    ens = sample_kernel_chain(space, "base", times, 17, seed=12)
    text = ens.to_csv()
    assert text.splitlines()[0] == "path_id,t,coord_0,coord_1"
    back = PathEnsemble.from_csv(text, seed=ens.seed, space=space)
    assert np.array_equal(back.states, ens.states)
    assert np.array_equal(back.times, ens.times)


def test_extract_fdd_point_mass_and_functoriality():
    space = Torus(2 * np.pi, np.pi / 2)
    times = np.linspace(0.0, 0.5, 6)
    ens = sample_kernel_chain(space, "base", times, 100, seed=13)
    single = extract_fdd(ens, [0.0])
    assert len(np.unique(single.atoms, axis=0)) == 1  # all paths start at base

    from mmlab import CollapseMap
    circle = Circle(2 * np.pi)
    cmap = CollapseMap(space, circle, lambda x: np.asarray(x, dtype=float)[..., 0],
                       np.pi / 4)
    mapped = extract_fdd(ens, [0.2, 0.4], cmap)
    raw = extract_fdd(ens, [0.2, 0.4])

    def aggregate(measure):
        uniq, inv = np.unique(measure.atoms[:, 0].round(12), return_inverse=True)
        w = np.zeros(len(uniq))
        np.add.at(w, inv, measure.weights)
        return uniq, w

    ua, wa = aggregate(mapped)
    ub, wb = aggregate(raw)
    assert np.allclose(ua, ub) and np.allclose(wa, wb)


def test_modulus_trivial_cases():
    times = np.linspace(0.0, 1.0, 41)
    const = PathEnsemble(times, np.zeros((50, 41, 1)), 0, "point", Circle(2 * np.pi),
                         np.zeros(50, dtype=bool))
    assert modulus_statistic(const, 1.0, 0.1, 0.5) == 0.0
    moving = sample_kernel_chain(Circle(2 * np.pi), "base", times, 50, seed=14)
    assert modulus_statistic(moving, 1.0, 0.1, 0.0) == 1.0


def test_modulus_grid_too_coarse_rejected():
    times = np.linspace(0.0, 1.0, 11)  # step 0.1 > 0.2/4
    ens = sample_kernel_chain(Circle(2 * np.pi), "base", times, 10, seed=15)
    with pytest.raises(PathError):
        modulus_statistic(ens, 1.0, 0.2, 0.5)


def test_modulus_monotone_in_eta():
    times = np.arange(0, 0.3 + 1e-12, 0.0125)
    ens = sample_kernel_chain(Circle(2 * np.pi), "base", times, 3000, seed=16)
    stats = [modulus_statistic(ens, 0.3, eta, 0.5) for eta in (0.4, 0.2, 0.1, 0.05)]
    assert all(b <= a for a, b in zip(stats, stats[1:]))


def test_kolmogorov_exponent():
    times = np.arange(0, 0.75 + 1e-12, 0.0125)
    ens = sample_kernel_chain(Circle(2 * np.pi), "base", times, 8000, seed=17)
    out = kolmogorov_moment(ens, 4.0, [0.25, 0.5], [0.0125, 0.025, 0.05, 0.1])
    # E d^4 ~ (2h)^2 * 3 for small h: theta = 2 for Brownian motion
    assert 1.7 <= out["theta_hat"] <= 2.3
    assert all(r["moment"] >= 0 for r in out["rows"])


def test_initial_law_from_measure():
    from mmlab import DiscreteMeasure
    space = Circle(2 * np.pi)
    mu = DiscreteMeasure([[0.0], [np.pi]], [0.5, 0.5])
    times = np.linspace(0.0, 0.1, 3)
    ens = sample_kernel_chain(space, mu, times, 4000, seed=18)
    starts = ens.states[:, 0, 0]
    frac = np.mean(np.isclose(starts, np.pi))
    assert abs(frac - 0.5) <= 0.05
