import numpy as np
import pytest
from scipy.optimize import linprog

from srwdist.measures import DiscreteMeasure, rng_from_seed, uniform_measure
from srwdist.ot import (
    CostKind,
    Coupling,
    brute_coupling_grid,
    cost_matrix,
    monotone_coupling_1d,
    pairwise_sq_dists,
    quantile_w2_1d,
    separated_w1_lower_bound,
    sinkhorn,
    solve_exact_ot,
    wasserstein,
)
from srwdist.measures import SeparatedSet


def _lp_reference(C, a, b):
    """Independent LP oracle for tiny transport problems."""
    n, m = C.shape
    A_eq = np.zeros((n + m, n * m))
    for i in range(n):
        A_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        A_eq[n + j, j::m] = 1.0
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=np.concatenate([a, b]), method="highs")
    assert res.status == 0
    return res.fun


def test_pairwise_sq_dists_matches_loop():
    rng = rng_from_seed(1)
    X = rng.random((5, 3))
    Y = rng.random((4, 3))
    D = pairwise_sq_dists(X, Y)
    for i in range(5):
        for j in range(4):
            assert D[i, j] == pytest.approx(((X[i] - Y[j]) ** 2).sum(), abs=1e-12)
    assert D.min() >= 0.0


def test_cost_matrix_kinds():
    X = np.array([[0.0, 0.0], [0.3, 0.4]])
    Y = np.array([[0.3, 0.4]])
    sq = cost_matrix(X, Y, CostKind.SQUARED_EUCLIDEAN)
    p1 = cost_matrix(X, Y, CostKind.EUCLIDEAN_P1)
    assert sq.entries[0, 0] == pytest.approx(0.25, abs=1e-15)
    assert p1.entries[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert sq.entries[1, 0] == 0.0


seeds_lp = list(range(8))


@pytest.mark.parametrize("seed", seeds_lp)
def test_exact_ot_matches_lp(seed):
    rng = rng_from_seed(100 + seed)
    n, m = rng.integers(2, 7, size=2)
    C = rng.random((n, m))
    a = rng.random(n) + 0.1
    a /= a.sum()
    b = rng.random(m) + 0.1
    b /= b.sum()
    coupling, obj = solve_exact_ot(C, a, b)
    assert obj == pytest.approx(_lp_reference(C, a, b), abs=1e-9)
    np.testing.assert_allclose(coupling.plan.sum(1), a, atol=1e-12)
    np.testing.assert_allclose(coupling.plan.sum(0), b, atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_assignment_and_simplex_paths_agree(seed):
    """Uniform divisible weights route to the assignment solver; the
    simplex must produce the same objective on the same instance."""
    from srwdist._simplex import solve_dense

    rng = rng_from_seed(200 + seed)
    C = rng.random((6, 12))
    a = np.full(6, 1.0 / 6)
    b = np.full(12, 1.0 / 12)
    _, obj_lap = solve_exact_ot(C, a, b)
    P, _ = solve_dense(C, a, b)
    assert float((C * P).sum()) == pytest.approx(obj_lap, abs=1e-12)


def test_exact_ot_trivial_shapes():
    C = np.array([[0.3, 0.1, 0.4]])
    coupling, obj = solve_exact_ot(C, np.array([1.0]), np.array([0.2, 0.5, 0.3]))
    assert obj == pytest.approx(0.3 * 0.2 + 0.1 * 0.5 + 0.4 * 0.3, abs=1e-15)
    np.testing.assert_array_equal(coupling.plan, np.array([[0.2, 0.5, 0.3]]))


def test_wasserstein_two_diracs():
    mu = uniform_measure(np.array([[0.0, 0.0]]))
    nu = uniform_measure(np.array([[0.3, 0.4]]))
    assert wasserstein(mu, nu, p=1) == pytest.approx(0.5, abs=1e-12)
    assert wasserstein(mu, nu, p=2) == pytest.approx(0.5, abs=1e-12)


def test_wasserstein_translation_1d():
    # translating a uniform grid by delta moves every quantile by delta
    xs = np.linspace(-0.4, 0.4, 9)
    mu = uniform_measure(xs[:, None])
    nu = uniform_measure((xs + 0.2)[:, None])
    assert wasserstein(mu, nu, p=2) == pytest.approx(0.2, abs=1e-12)
    assert wasserstein(mu, nu, p=1) == pytest.approx(0.2, abs=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_monotone_coupling_is_optimal_in_1d(seed):
    rng = rng_from_seed(300 + seed)
    na, nb = rng.integers(2, 9, size=2)
    a_pos = rng.random(na) * 2 - 1
    b_pos = rng.random(nb) * 2 - 1
    wa = rng.random(na) + 0.05
    wa /= wa.sum()
    wb = rng.random(nb) + 0.05
    wb /= wb.sum()
    rows, cols, vals = monotone_coupling_1d(a_pos, wa, b_pos, wb)
    cost = float(vals @ ((a_pos[rows] - b_pos[cols]) ** 2))
    C = (a_pos[:, None] - b_pos[None, :]) ** 2
    assert cost == pytest.approx(_lp_reference(C, wa, wb), abs=1e-9)
    # marginals are reproduced exactly
    P = np.zeros((na, nb))
    np.add.at(P, (rows, cols), vals)
    np.testing.assert_allclose(P.sum(1), wa, atol=1e-12)
    np.testing.assert_allclose(P.sum(0), wb, atol=1e-12)


def test_quantile_w2_1d_matches_general_solver():
    rng = rng_from_seed(31)
    mu = uniform_measure((rng.random(11) * 0.8 - 0.4)[:, None])
    nu = uniform_measure((rng.random(6) * 0.8 - 0.4)[:, None])
    assert quantile_w2_1d(mu, nu) == pytest.approx(wasserstein(mu, nu, p=2), abs=1e-12)


def test_quantile_w2_1d_collinear_in_ambient_space():
    # supports on a shared line through R^3 reduce to the 1-D computation
    direction = np.array([2.0, -1.0, 2.0]) / 3.0
    mu = uniform_measure(np.outer([-0.2, 0.1, 0.5], direction))
    nu = uniform_measure(np.outer([0.0, 0.3], direction))
    assert quantile_w2_1d(mu, nu) == pytest.approx(wasserstein(mu, nu, p=2), abs=1e-12)


def test_quantile_w2_1d_rejects_non_collinear():
    mu = uniform_measure(np.array([[0.1, 0.0], [0.2, 0.0], [0.0, 0.3]]))
    with pytest.raises(ValueError):
        quantile_w2_1d(mu, mu)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_sinkhorn_close_to_exact(seed):
    rng = rng_from_seed(400 + seed)
    X = rng.random((8, 3)) * 0.5
    Y = rng.random((9, 3)) * 0.5
    a = np.full(8, 1.0 / 8)
    b = np.full(9, 1.0 / 9)
    C = cost_matrix(X, Y)
    _, exact = solve_exact_ot(C, a, b)
    _, approx = sinkhorn(C, a, b, reg=1e-3 * C.entries.max(), tol=1e-6)
    assert approx == pytest.approx(exact, rel=0.01)
    # feasible plans satisfy <P, C> >= exact; the marginal slack of tol
    # can push the transport term below that by about tol * max cost
    assert approx >= exact - 1e-6 * C.entries.max()


def test_sinkhorn_rejects_bad_reg():
    C = np.array([[0.1, 0.2], [0.2, 0.1]])
    w = np.array([0.5, 0.5])
    with pytest.raises(ValueError):
        sinkhorn(C, w, w, reg=0.0)


def test_separated_w1_lower_bound_hand_case():
    """Two atoms at distance 1/2: moving delta mass costs at least
    (eps/2) * (2 delta) with eps the separation."""
    pts = np.array([[0.0], [0.5]])
    M = SeparatedSet(0.4, pts)
    mu_w = np.array([0.5, 0.5])
    nu_w = np.array([0.3, 0.7])
    bound = separated_w1_lower_bound(M, mu_w, nu_w)
    assert bound == pytest.approx(0.4 / 2 * 0.4, abs=1e-15)
    mu = DiscreteMeasure(pts, mu_w)
    nu = DiscreteMeasure(pts, nu_w)
    assert bound <= wasserstein(mu, nu, p=1) + 1e-12


def test_coupling_validate():
    plan = np.array([[0.5, 0.0], [0.0, 0.5]])
    Coupling(plan, np.array([0.5, 0.5]), np.array([0.5, 0.5])).validate()
    with pytest.raises(ValueError):
        Coupling(plan, np.array([0.3, 0.7]), np.array([0.5, 0.5])).validate()
    with pytest.raises(ValueError):
        Coupling(np.array([[-0.1, 0.6], [0.5, 0.0]]), np.array([0.5, 0.5]), np.array([0.4, 0.6]))


def test_brute_coupling_grid_two_atom_1d():
    # atoms {0, 0.6} vs {0.3, 0.9}: the monotone matching is optimal
    mu = uniform_measure(np.array([[0.0], [0.6]]))
    nu = uniform_measure(np.array([[0.3], [0.9]]))
    diffs = mu.points[:, None, :] - nu.points[None, :, :]
    D2 = (diffs**2).sum(-1)

    best, plan = brute_coupling_grid(mu, nu, lambda P: float((P * D2).sum()))
    assert best == pytest.approx(0.09, abs=1e-9)
    np.testing.assert_allclose(plan, np.array([[0.5, 0.0], [0.0, 0.5]]), atol=1e-12)


def test_brute_coupling_grid_rejects_nonuniform():
    mu = DiscreteMeasure(np.array([[0.0], [0.5]]), np.array([0.4, 0.6]))
    with pytest.raises(ValueError):
        brute_coupling_grid(mu, mu, lambda P: 0.0)
