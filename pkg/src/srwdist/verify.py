"""Self-contained invariant suites: closed-form lemma checks, metric axioms
at solver precision, and oracle cross-checks of the solvers against
independent references. The CLI's `verify` subcommand runs these as the CI
gate; each check is deterministic and raises on failure.
"""

import math
import sys

import numpy as np

from .bounds import (
    covering_packing_bounds,
    fournier_H,
    fournier_kappa,
    mad_binomial,
    rate_curves,
    t_star,
)
from .measures import (
    DiscreteMeasure,
    greedy_separated_set,
    isometric_embed,
    rng_from_seed,
    uniform_measure,
    worst_case_measure,
)
from .ot import (
    Coupling,
    brute_coupling_grid,
    cost_matrix,
    pairwise_sq_dists,
    quantile_w2_1d,
    separated_w1_lower_bound,
    sinkhorn,
    solve_exact_ot,
    wasserstein,
)
from .srw import displacement_second_moment, srw_distance, topk_eigensum


def _random_measure(rng, d, n) -> DiscreteMeasure:
    pts = rng.standard_normal((n, d))
    pts /= np.maximum(1.0, np.linalg.norm(pts, axis=1))[:, None]
    w = rng.random(n) + 0.1
    return DiscreteMeasure(pts, w / w.sum())


# ---------------------------------------------------------------------------
# lemmas: closed-form statements checked exactly or on exhaustive small grids


def check_mad_lower_bound():
    for n in range(2, 41):
        for i in range(1, n):
            p = i / n
            mad, std = mad_binomial(n, p)
            assert mad >= std / math.sqrt(2.0) - 1e-12, (n, p, mad, std)
    mad, std = mad_binomial(2, 0.5)
    assert abs(mad - std / math.sqrt(2.0)) <= 1e-15, (mad, std)


def check_covering_packing():
    for d in (1, 2, 5):
        for eps in (0.1, 1.0 / 3.0, 0.9):
            lo, hi = covering_packing_bounds(d, eps)
            assert 0 < lo <= hi, (d, eps, lo, hi)
    lo, hi = covering_packing_bounds(5, 1.0 / 3.0)
    assert abs(lo - 3.0**5) < 1e-9 and abs(hi - 9.0**5) < 1e-6


def check_fournier_formulas():
    assert abs(fournier_H(0.0, 1.0, 2.0) - 4.0) < 1e-12
    xs = np.linspace(0.0, 2.0, 9)
    hs = [fournier_H(x, 2.0, 5.0) for x in xs]
    assert all(b >= a - 1e-12 for a, b in zip(hs, hs[1:])), "H not monotone in x"
    kappa_2, kappa_min = fournier_kappa(5)
    d = 5
    front = (3.0**d / 4.0) ** (2.0 / d)
    direct = front * 16.0 * (1.0 - 2.0 ** (-d / 2.0)) ** (1.0 - 4.0 / d) / (
        1.0 * (1.0 - 2.0 ** (2.0 - d / 2.0))
    )
    assert abs(kappa_2 - direct) < 1e-9 * direct, (kappa_2, direct)
    assert kappa_min <= kappa_2 + 1e-12


def check_rate_helpers():
    assert t_star(1000) == (3, False)
    assert t_star(10**6) == (5, True)
    up, lo = rate_curves(10**6)
    n = 10**6
    assert abs(up - math.sqrt(math.log(math.log(n)) / math.log(n))) < 1e-15
    assert abs(lo - 1.0 / math.sqrt(math.log(n))) < 1e-15


def check_packing_certificate():
    s = greedy_separated_set(3, 1.0 / 3.0, 30, seed=7)
    pts = s.points
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff * diff).sum(-1))
    dist[np.diag_indices(len(pts))] = np.inf
    assert dist.min() > 1.0 / 3.0
    mu = worst_case_measure(100, seed=3)
    assert mu.dim == 5 and mu.n_atoms == 100
    assert np.allclose(mu.weights, 0.01)


def check_separated_bound_below_w1():
    rng = rng_from_seed(17)
    mu = worst_case_measure(12, seed=17)
    support = greedy_separated_set(mu.dim, 1.0 / 3.0, 12, seed=17)
    for _ in range(3):
        idx = rng.choice(12, size=12, p=mu.weights)
        emp = DiscreteMeasure(mu.points[idx], np.full(12, 1.0 / 12))
        counts = np.bincount(idx, minlength=12) / 12
        bound = separated_w1_lower_bound(support, mu.weights, counts)
        w1 = wasserstein(mu, emp, p=1)
        assert w1 >= bound - 1e-9, (w1, bound)


def check_trace_spectrum_bound():
    rng = rng_from_seed(23)
    mu = _random_measure(rng, 6, 40)
    sigma = (mu.points.T * mu.weights) @ mu.points
    lam = np.sort(np.linalg.eigvalsh(sigma))[::-1]
    assert lam.sum() <= 1.0 + 1e-12
    for t in range(1, 7):
        assert lam[t - 1] <= 1.0 / t + 1e-12, (t, lam[t - 1])


# ---------------------------------------------------------------------------
# metric: S_k axioms and the sandwich inequalities at solver precision


def check_identity():
    rng = rng_from_seed(31)
    mu = _random_measure(rng, 4, 9)
    res = srw_distance(mu, mu, k=1)
    assert res.distance <= 1e-6, res.distance


def check_symmetry():
    rng = rng_from_seed(37)
    for _ in range(6):
        d = int(rng.integers(2, 6))
        mu = _random_measure(rng, d, int(rng.integers(3, 10)))
        nu = _random_measure(rng, d, int(rng.integers(3, 10)))
        k = int(rng.integers(1, d + 1))
        a = srw_distance(mu, nu, k=k).distance
        b = srw_distance(nu, mu, k=k).distance
        assert abs(a - b) <= 1e-4, (a, b)


def check_triangle():
    rng = rng_from_seed(41)
    for _ in range(6):
        d = int(rng.integers(2, 5))
        ms = [_random_measure(rng, d, int(rng.integers(3, 9))) for _ in range(3)]
        ab = srw_distance(ms[0], ms[1], k=1).distance
        bc = srw_distance(ms[1], ms[2], k=1).distance
        ac = srw_distance(ms[0], ms[2], k=1).distance
        assert ac <= ab + bc + 1e-3, (ac, ab, bc)


def check_sandwich():
    rng = rng_from_seed(43)
    for _ in range(4):
        d = int(rng.integers(2, 6))
        mu = _random_measure(rng, d, int(rng.integers(3, 11)))
        nu = _random_measure(rng, d, int(rng.integers(3, 11)))
        w2 = wasserstein(mu, nu, p=2)
        vals = [srw_distance(mu, nu, k=k).distance for k in range(1, d + 1)]
        assert w2 / math.sqrt(d) <= vals[0] + 1e-3
        assert vals[0] <= w2 + 1e-3
        for k in range(1, d):
            assert vals[k - 1] <= vals[k] + 1e-3
            assert vals[k] <= math.sqrt(k + 1) * vals[0] + 2e-3
        assert abs(vals[d - 1] - w2) <= 1e-6, (vals[d - 1], w2)


def check_ambient_invariance():
    rng = rng_from_seed(47)
    mu = _random_measure(rng, 3, 8)
    nu = _random_measure(rng, 3, 7)
    base = srw_distance(mu, nu, k=1).distance
    lifted = srw_distance(
        isometric_embed(mu, 9, orthogonal_seed=5), isometric_embed(nu, 9, orthogonal_seed=5), k=1
    ).distance
    assert abs(base - lifted) <= 1e-4, (base, lifted)


# ---------------------------------------------------------------------------
# oracle: solvers against independent references


def check_antipodal_instance():
    e1 = np.array([[1.0, 0.0], [-1.0, 0.0]])
    e2 = np.array([[0.0, 1.0], [0.0, -1.0]])
    mu = uniform_measure(e1)
    nu = uniform_measure(e2)
    w2 = wasserstein(mu, nu, p=2)
    assert abs(w2 - math.sqrt(2.0)) <= 1e-9, w2
    s1 = srw_distance(mu, nu, k=1).distance
    assert abs(s1 - 1.0) <= 1e-3, s1


def check_two_atom_grid():
    rng = rng_from_seed(53)
    for _ in range(5):
        A = rng.standard_normal((2, 2)) * 0.4
        B = rng.standard_normal((2, 2)) * 0.4
        A /= np.maximum(1.0, np.linalg.norm(A, axis=1))[:, None]
        B /= np.maximum(1.0, np.linalg.norm(B, axis=1))[:, None]
        mu = uniform_measure(A)
        nu = uniform_measure(B)

        def objective(plan, mu=mu, nu=nu):
            pi = Coupling(plan, mu.weights, nu.weights)
            V = displacement_second_moment(mu, nu, pi)
            return topk_eigensum(V, 1)[0]

        best, _ = brute_coupling_grid(mu, nu, objective)
        got = srw_distance(mu, nu, k=1).distance ** 2
        assert abs(got - best) <= 1e-4, (got, best)


def check_collinear_quantile():
    rng = rng_from_seed(59)
    for _ in range(5):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        ta = rng.random(7) * 2.0 - 1.0
        tb = rng.random(9) * 2.0 - 1.0
        mu = uniform_measure(np.outer(ta, direction) * 0.9)
        nu = uniform_measure(np.outer(tb, direction) * 0.9)
        q = quantile_w2_1d(mu, nu)
        s1 = srw_distance(mu, nu, k=1).distance
        assert abs(s1 - q) <= 1e-5, (s1, q)


def check_sinkhorn_vs_exact():
    rng = rng_from_seed(61)
    for _ in range(3):
        mu = _random_measure(rng, 3, 10)
        nu = _random_measure(rng, 3, 10)
        C = cost_matrix(mu.points, nu.points)
        _, exact = solve_exact_ot(C, mu.weights, nu.weights)
        _, approx = sinkhorn(C, mu.weights, nu.weights, reg=1e-3 * C.entries.max())
        assert abs(approx - exact) <= 0.01 * max(exact, 1e-12), (approx, exact)


def check_lap_simplex_agree():
    rng = rng_from_seed(67)
    X = rng.standard_normal((6, 3)) * 0.4
    Y = rng.standard_normal((12, 3)) * 0.4
    C = pairwise_sq_dists(X, Y)
    a = np.full(6, 1.0 / 6)
    b = np.full(12, 1.0 / 12)
    _, obj = solve_exact_ot(C, a, b)  # dispatches to the assignment path
    from ._simplex import solve_dense

    P, _ = solve_dense(C, a, b)
    obj_simplex = float((C * P).sum())
    assert abs(obj - obj_simplex) <= 1e-9, (obj, obj_simplex)


SUITES = {
    "lemmas": [
        ("mad-lower-bound", check_mad_lower_bound),
        ("covering-packing", check_covering_packing),
        ("fournier-formulas", check_fournier_formulas),
        ("rate-helpers", check_rate_helpers),
        ("packing-certificate", check_packing_certificate),
        ("separated-bound-below-w1", check_separated_bound_below_w1),
        ("trace-spectrum-bound", check_trace_spectrum_bound),
    ],
    "metric": [
        ("identity", check_identity),
        ("symmetry", check_symmetry),
        ("triangle", check_triangle),
        ("sandwich", check_sandwich),
        ("ambient-invariance", check_ambient_invariance),
    ],
    "oracle": [
        ("antipodal-instance", check_antipodal_instance),
        ("two-atom-grid", check_two_atom_grid),
        ("collinear-quantile", check_collinear_quantile),
        ("sinkhorn-vs-exact", check_sinkhorn_vs_exact),
        ("lap-simplex-agree", check_lap_simplex_agree),
    ],
}


def run_suite(suite="all", out=None, err=None) -> bool:
    """Run one named suite (or all of them); True iff every check passed."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    if suite == "all":
        names = [(s, name, fn) for s in ("lemmas", "metric", "oracle") for name, fn in SUITES[s]]
    elif suite in SUITES:
        names = [(suite, name, fn) for name, fn in SUITES[suite]]
    else:
        raise ValueError(f"unknown suite {suite!r}")
    failures = []
    for sname, name, fn in names:
        label = f"{sname}/{name}"
        try:
            fn()
        except Exception as exc:
            failures.append((label, exc))
            print(f"FAIL {label}: {exc}", file=err)
        else:
            print(f"ok {label}", file=out)
    print(f"{len(names) - len(failures)}/{len(names)} checks passed", file=out)
    if failures:
        print("failed checks: " + ", ".join(label for label, _ in failures), file=err)
    return not failures
