import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmlab import (
    Circle,
    CollapseMap,
    DiscreteMeasure,
    LipschitzTestFunction,
    SpaceFamily,
    Torus,
    entropy_tightness,
    fdd_convergence_report,
    fdd_operator,
    initial_law_w1,
    mcshane_extend,
    pathlaw_w1,
    pmg_test,
    sample_kernel_chain,
    wasserstein_exact,
)
from mmlab.convergence import ConvergenceError, pathlaw_baseline, product_distance_matrix


def torus_family(ns, nodes=(256, 64)):
    limit = Circle(2 * np.pi, n_nodes=nodes[0], normalized=True)
    members = []
    for n in ns:
        torus = Torus(2 * np.pi, 2 * np.pi / n, n_nodes=nodes, normalized=True)
        cmap = CollapseMap(torus, limit,
                           lambda x: np.asarray(x, dtype=float)[..., 0], np.pi / n)
        members.append((n, torus, cmap))
    return SpaceFamily(members, limit)


COS = LipschitzTestFunction(lambda x: np.cos(np.asarray(x, dtype=float)),
                            lip=1.0, sup_bound=1.0, name="cos")
SIN2 = LipschitzTestFunction(lambda x: 0.5 * np.sin(2 * np.asarray(x, dtype=float)),
                             lip=1.0, sup_bound=0.5, name="sin2")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_fdd_operator_uniform_bound(seed):
    rng = np.random.default_rng(seed)
    space = Circle(2 * np.pi, n_nodes=256)
    x = float(rng.random() * 2 * np.pi)
    times = np.sort(rng.random(3) * 2.0 + 0.01)
    while np.any(np.diff(times) <= 0):
        times = np.sort(rng.random(3) * 2.0 + 0.01)
    val = fdd_operator(space, times, [COS, SIN2, COS], x)
    assert abs(val) <= COS.sup_bound * SIN2.sup_bound * COS.sup_bound + 1e-12


def test_fdd_operator_single_time_matches_semigroup():
    space = Circle(2 * np.pi, n_nodes=512)
    from mmlab import get_kernel
    sk = get_kernel(space)
    got = fdd_operator(space, [0.4], [COS], 0.0)
    ref = float(np.sum(sk.weights * sk.kernel_row(0.4, 0.0) * np.cos(sk.points)))
    assert abs(got - ref) <= 1e-12
    # cos is the first eigenfunction: P_t cos = e^{-t} cos
    assert abs(got - np.exp(-0.4)) <= 1e-8


def test_fdd_operator_rejects_bad_times():
    space = Circle(2 * np.pi)
    with pytest.raises(ConvergenceError):
        fdd_operator(space, [0.5, 0.25], [COS, COS], 0.0)
    with pytest.raises(ConvergenceError):
        fdd_operator(space, [0.5], [COS, COS], 0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_mcshane_properties(seed):
    rng = np.random.default_rng(seed)
    metric = lambda x, y: abs(float(x) - float(y))
    pts = np.sort(rng.uniform(-2, 2, size=int(rng.integers(2, 8))))
    H = float(rng.uniform(0.5, 3.0))
    # H-Lipschitz values by construction: clipped increments
    vals = np.cumsum(rng.uniform(-1, 1, len(pts)) * H * np.diff(np.concatenate([[pts[0] - 1], pts])))
    ext = mcshane_extend(pts, vals, H, metric)
    for p, v in zip(pts, vals):
        assert abs(ext(p) - v) <= 1e-12
    probes = rng.uniform(-4, 4, 40)
    evals = np.asarray([ext(p) for p in probes])
    assert np.min(evals) >= np.min(vals) - 1e-12
    assert np.max(evals) <= np.max(vals) + 1e-12
    for i in range(len(probes)):
        for j in range(i + 1, len(probes)):
            assert abs(evals[i] - evals[j]) <= H * metric(probes[i], probes[j]) + 1e-9


def test_mcshane_rejects_non_lipschitz_input():
    metric = lambda x, y: abs(float(x) - float(y))
    with pytest.raises(ConvergenceError):
        mcshane_extend([0.0, 1.0], [0.0, 5.0], 1.0, metric)
    with pytest.raises(ConvergenceError):
        mcshane_extend([], [], 1.0, metric)


def test_lipschitz_test_function_validate():
    probes = np.linspace(0, 2 * np.pi, 25)
    metric = Circle(2 * np.pi).distance
    COS.validate(probes, metric)
    too_steep = LipschitzTestFunction(lambda x: np.cos(5 * np.asarray(x, dtype=float)),
                                      lip=1.0, sup_bound=1.0)
    with pytest.raises(ConvergenceError):
        too_steep.validate(probes, metric)


def test_space_family_rejects_mismatched_limit():
    fam = torus_family([2])
    other = Circle(4 * np.pi)
    (label, torus, cmap) = fam.members[0]
    with pytest.raises(ConvergenceError):
        SpaceFamily([(label, torus, cmap)], other)


def test_kr_inequality_for_integrals():
    # |nu_n(f) - nu_inf(f)| <= L W_1(nu_n, nu_inf) for Lipschitz f
    rng = np.random.default_rng(1)
    for _ in range(10):
        a = DiscreteMeasure(rng.normal(size=4), rng.dirichlet(np.ones(4)))
        b = DiscreteMeasure(rng.normal(size=5), rng.dirichlet(np.ones(5)))
        w1, _ = wasserstein_exact(1, a, b)
        L = 2.0
        f = lambda x: L * abs(float(np.atleast_1d(x)[0]) - 0.3)
        assert abs(a.integrate(f) - b.integrate(f)) <= L * w1 + 1e-10


def test_pmg_torus_family():
    fam = torus_family([1, 2, 4])
    out = pmg_test(fam, [COS, SIN2], tolerances=[np.pi / n + 1e-6 for n in (1, 2, 4)])
    assert out["pass"]
    for r in out["rows"]:
        assert r["base_gap"] <= 1e-12


def test_fdd_report_torus_within_budget():
    fam = torus_family([2, 4])
    out = fdd_convergence_report(fam, [0.25, 0.75], [COS])
    assert out["pass"]
    for r in out["rows"]:
        assert r["gap"] <= r["budget"]
        assert r["budget"] == pytest.approx(2 * COS.lip * np.pi / r["label"] + 1e-6)


def test_fdd_report_extra_budgets():
    fam = torus_family([2])
    out = fdd_convergence_report(fam, [0.25], [COS], extra_budgets={2: 0.5})
    assert out["rows"][0]["budget"] == pytest.approx(COS.lip * np.pi / 2 + 1e-6 + 0.5)


def test_pathlaw_self_distance_within_baseline():
    circle = Circle(2 * np.pi, n_nodes=256, normalized=True)
    grid = np.linspace(0.0, 1.0, 81)
    a = sample_kernel_chain(circle, "base", grid, 4000, seed=30)
    b = sample_kernel_chain(circle, "base", grid, 4000, seed=31)
    out = pathlaw_w1(a, b, [0.25, 0.75], collapse=None, bins=24, seed=7)
    assert out["pass"]
    base, se = pathlaw_baseline(b, [0.25, 0.75], bins=24, seed=7)
    assert out["w1"] <= base + 3 * se + 0.05


def test_product_distance_matrix_sum_metric():
    circle = Circle(2 * np.pi)
    A = np.array([[0.0, 0.0], [1.0, 6.0]])
    B = np.array([[0.5, 2 * np.pi - 0.5]])
    d = product_distance_matrix(circle, A, B)
    assert d.shape == (2, 1)
    assert d[0, 0] == pytest.approx(0.5 + 0.5)
    assert d[1, 0] == pytest.approx(0.5 + abs(2 * np.pi - 6.0 - 0.5) % (2 * np.pi))


def test_entropy_tightness_finite_sup():
    fam = torus_family([1, 2, 4])
    out = entropy_tightness(fam, 0.1)
    assert out["pass"]
    assert np.isfinite(out["sup"])
    with pytest.raises(ConvergenceError):
        entropy_tightness(fam, -1.0)


def test_initial_law_w1_small_for_uniform_family():
    fam = torus_family([1, 2, 4])
    out = initial_law_w1(fam)
    for r in out["rows"]:
        # both sides push to the uniform circle measure; only binning error remains
        assert r["w1"] <= 2 * np.pi / 64 + 1e-9
