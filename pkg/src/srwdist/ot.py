"""Discrete optimal transport: exact solvers, Sinkhorn, and 1-D oracles.

The exact path dispatches between a scipy assignment solve (uniform weights
whose atom counts divide evenly, provably exact by splitting atoms into
equal shares) and the in-house transportation simplex for general weights.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from . import _simplex
from .validation import as_float_array, check_weights

MARGINAL_TOL = 1e-9
COLLINEAR_TOL = 1e-10

# largest expanded assignment size the uniform fast path will build
_MAX_LAP_SIZE = 4608


class CostKind(Enum):
    EUCLIDEAN_P1 = "euclidean_p1"
    SQUARED_EUCLIDEAN = "squared_euclidean"
    PROJECTED_SQUARED = "projected_squared"


@dataclass(frozen=True)
class CostMatrix:
    """Pairwise transport costs between two support sets."""

    entries: np.ndarray
    kind: CostKind

    def __post_init__(self):
        e = as_float_array(self.entries, "cost entries")
        if e.ndim != 2:
            raise ValueError("cost entries must be a 2-D array")
        if e.min() < 0:
            raise ValueError("cost entries must be nonnegative")
        object.__setattr__(self, "entries", e)

    @property
    def shape(self):
        return self.entries.shape


def pairwise_sq_dists(X, Y):
    """Squared Euclidean distances, clipped to zero against rounding."""
    sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * (X @ Y.T)
    return np.maximum(sq, 0.0)


def cost_matrix(X, Y, kind=CostKind.SQUARED_EUCLIDEAN, basis=None) -> CostMatrix:
    """Build the cost matrix for two point arrays.

    Parameters
    ----------
    X : array (n, d)
    Y : array (m, d)
    kind : CostKind
        euclidean_p1 for ||x-y||, squared_euclidean for ||x-y||^2,
        projected_squared for ||B(x-y)||^2 with B the row basis.
    basis : array (k, d), only for projected_squared.
    """
    X = as_float_array(X, "X")
    Y = as_float_array(Y, "Y")
    if kind == CostKind.PROJECTED_SQUARED:
        if basis is None:
            raise ValueError("projected_squared cost needs a basis")
        B = np.atleast_2d(as_float_array(basis, "basis"))
        entries = pairwise_sq_dists(X @ B.T, Y @ B.T)
    elif kind == CostKind.SQUARED_EUCLIDEAN:
        entries = pairwise_sq_dists(X, Y)
    elif kind == CostKind.EUCLIDEAN_P1:
        entries = np.sqrt(pairwise_sq_dists(X, Y))
    else:
        raise ValueError(f"unknown cost kind {kind!r}")
    return CostMatrix(entries, kind)


@dataclass(frozen=True)
class Coupling:
    """A transport plan with its prescribed marginals."""

    plan: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def __post_init__(self):
        plan = as_float_array(self.plan, "plan")
        if plan.min() < -1e-15:
            raise ValueError(f"coupling has negative entry {plan.min()!r}")
        object.__setattr__(self, "plan", np.maximum(plan, 0.0))
        object.__setattr__(self, "row_marginal", as_float_array(self.row_marginal, "row_marginal"))
        object.__setattr__(self, "col_marginal", as_float_array(self.col_marginal, "col_marginal"))

    def validate(self, tol=MARGINAL_TOL):
        row_err = np.abs(self.plan.sum(1) - self.row_marginal).max()
        col_err = np.abs(self.plan.sum(0) - self.col_marginal).max()
        if max(row_err, col_err) > tol:
            raise ValueError(
                f"coupling marginals off by {max(row_err, col_err):.2e} (tol {tol:.0e})"
            )
        return self


def _trivial_plan(a, b):
    if len(a) == 1:
        return b[None, :].copy()
    return a[:, None].copy()


def _uniform_lap_plan(C, n, m):
    """Exact plan for uniform marginals with n | m or m | n via assignment."""
    big = max(n, m)
    if n == m:
        rows, cols = linear_sum_assignment(C)
        P = np.zeros((n, m))
        P[rows, cols] = 1.0 / n
        return P
    if n < m:
        rep = m // n
        Cx = np.repeat(C, rep, axis=0)
        rows, cols = linear_sum_assignment(Cx)
        P = np.zeros((n, m))
        np.add.at(P, (rows // rep, cols), 1.0 / big)
    else:
        rep = n // m
        Cx = np.repeat(C, rep, axis=1)
        rows, cols = linear_sum_assignment(Cx)
        P = np.zeros((n, m))
        np.add.at(P, (rows, cols // rep), 1.0 / big)
    return P


def _is_uniform(w):
    n = len(w)
    return np.abs(w - 1.0 / n).max() <= 1e-12


def solve_exact_ot(cost, mu_w, nu_w):
    """Exact OT between weight vectors under the given cost.

    Returns (Coupling, objective). The objective is the exact optimum of the
    transport linear program; the plan is a vertex of the polytope.
    """
    C = cost.entries if isinstance(cost, CostMatrix) else as_float_array(cost, "cost")
    n, m = C.shape
    a = check_weights(mu_w, n, "mu_w")
    b = check_weights(nu_w, m, "nu_w")

    # drop zero-weight atoms, reinsert as zero rows/cols afterwards
    ra = np.nonzero(a > 0)[0]
    cb = np.nonzero(b > 0)[0]
    Cs = C[np.ix_(ra, cb)]
    asub = a[ra]
    bsub = b[cb]
    ns, ms = Cs.shape

    if ns == 1 or ms == 1:
        Ps = _trivial_plan(asub, bsub)
    elif (
        _is_uniform(asub)
        and _is_uniform(bsub)
        and max(ns, ms) % min(ns, ms) == 0
        and max(ns, ms) <= _MAX_LAP_SIZE
    ):
        Ps = _uniform_lap_plan(Cs, ns, ms)
    else:
        Ps, _ = _simplex.solve_dense(Cs, asub, bsub)

    if len(ra) == n and len(cb) == m:
        P = Ps
    else:
        P = np.zeros((n, m))
        P[np.ix_(ra, cb)] = Ps
    objective = float((P * C).sum())
    return Coupling(P, a, b).validate(), objective


def wasserstein(mu, nu, p=2, method="exact", reg=None, **kwargs):
    """Wasserstein distance W_p between two discrete measures, p in {1, 2}."""
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p}")
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    kind = CostKind.EUCLIDEAN_P1 if p == 1 else CostKind.SQUARED_EUCLIDEAN
    cost = cost_matrix(mu.points, nu.points, kind)
    if method == "exact":
        _, objective = solve_exact_ot(cost, mu.weights, nu.weights)
    elif method == "sinkhorn":
        if reg is None:
            reg = 1e-3 * max(cost.entries.max(), 1e-30)
        _, objective = sinkhorn(cost, mu.weights, nu.weights, reg, **kwargs)
    else:
        raise ValueError(f"unknown method {method!r}")
    return objective ** (1.0 / p)


def sinkhorn(cost, mu_w, nu_w, reg, max_iters=20000, tol=1e-9):
    """Entropic-regularized OT in the log domain.

    reg is in absolute cost units. Runs a halving schedule from a large
    starting regularization down to reg (warm-started potentials), which
    keeps iteration counts reasonable at small reg. The reported objective
    is the transport term <P, C> without the entropy term.

    Returns (Coupling, objective). Raises RuntimeError with the final
    marginal violation if the target tolerance is not reached.
    """
    if reg <= 0:
        raise ValueError("reg must be positive")
    C = cost.entries if isinstance(cost, CostMatrix) else as_float_array(cost, "cost")
    n, m = C.shape
    a = check_weights(mu_w, n, "mu_w")
    b = check_weights(nu_w, m, "nu_w")
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("sinkhorn needs strictly positive weights")
    log_a = np.log(a)
    log_b = np.log(b)

    f = np.zeros(n)
    g = np.zeros(m)
    cmax = C.max()
    eps = max(reg, 0.25 * max(cmax, reg))
    err = np.inf
    while True:
        stage_tol = tol if eps <= reg else max(tol, 1e-6)
        for _ in range(max_iters):
            f = eps * (log_a - logsumexp((g[None, :] - C) / eps, axis=1))
            g = eps * (log_b - logsumexp((f[:, None] - C) / eps, axis=0))
            # after the g update columns are exact; rows carry the violation
            P = np.exp((f[:, None] + g[None, :] - C) / eps)
            err = float(np.abs(P.sum(1) - a).sum())
            if err <= stage_tol:
                break
        if eps <= reg:
            break
        eps = max(reg, 0.5 * eps)
    if err > tol:
        raise RuntimeError(f"sinkhorn did not converge: marginal violation {err:.2e}")
    objective = float((P * C).sum())
    return Coupling(P, a, b).validate(max(MARGINAL_TOL, tol)), objective


@njit(cache=True, nogil=True)
def _monotone_merge(order_a, order_b, wa, wb):
    """Monotone (northwest) coupling of two sorted 1-D weight sequences."""
    na = order_a.shape[0]
    nb = order_b.shape[0]
    rows = np.empty(na + nb, np.int64)
    cols = np.empty(na + nb, np.int64)
    vals = np.empty(na + nb, np.float64)
    i = 0
    j = 0
    k = 0
    ra = wa[order_a[0]]
    rb = wb[order_b[0]]
    while True:
        mass = ra if ra < rb else rb
        rows[k] = order_a[i]
        cols[k] = order_b[j]
        vals[k] = mass
        k += 1
        ra -= mass
        rb -= mass
        if ra <= rb:
            i += 1
            if i == na:
                break
            ra = wa[order_a[i]]
        else:
            j += 1
            if j == nb:
                break
            rb = wb[order_b[j]]
    return rows[:k], cols[:k], vals[:k]


def monotone_coupling_1d(a_vals, a_w, b_vals, b_w):
    """Optimal 1-D coupling for convex costs: sparse (rows, cols, vals)."""
    order_a = np.argsort(a_vals, kind="stable")
    order_b = np.argsort(b_vals, kind="stable")
    return _monotone_merge(order_a, order_b, np.asarray(a_w), np.asarray(b_w))


def _principal_line(points):
    """Direction and center of the line carrying the points, or None."""
    center = points.mean(0)
    Z = points - center
    # rank check via singular values
    s = np.linalg.svd(Z, compute_uv=False)
    if s[0] <= COLLINEAR_TOL:
        # all points coincide: any direction works
        return np.eye(points.shape[1])[0], center
    if len(s) > 1 and s[1] > COLLINEAR_TOL * max(1.0, s[0]):
        return None, center
    _, _, Vt = np.linalg.svd(Z, full_matrices=False)
    return Vt[0], center


def quantile_w2_1d(mu, nu):
    """W2 between measures with collinear supports, via the sorted coupling."""
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    allpts = np.vstack([mu.points, nu.points])
    direction, center = _principal_line(allpts)
    if direction is None:
        raise ValueError("supports are not collinear")
    av = (mu.points - center) @ direction
    bv = (nu.points - center) @ direction
    rows, cols, vals = monotone_coupling_1d(av, mu.weights, bv, nu.weights)
    diffs = av[rows] - bv[cols]
    return float(np.sqrt(max(vals @ (diffs * diffs), 0.0)))


def separated_w1_lower_bound(M, mu_w, nu_w):
    """(eps/2) * sum_x |mu{x} - nu{x}| over a separated support set M."""
    npts = M.points.shape[0]
    a = check_weights(mu_w, npts, "mu_w")
    b = check_weights(nu_w, npts, "nu_w")
    return 0.5 * M.epsilon * float(np.abs(a - b).sum())


def brute_coupling_grid(mu, nu, objective, grid_steps=10000):
    """Minimize a coupling functional over the 2x2 transport segment.

    Both measures must have exactly 2 atoms with weights (1/2, 1/2); the
    polytope is then the segment t in [0, 1/2] with plan
    [[t, 1/2-t], [1/2-t, t]]. Returns (best_value, best_plan).
    """
    for meas in (mu, nu):
        if meas.n_atoms != 2 or np.abs(meas.weights - 0.5).max() > 1e-12:
            raise ValueError("brute_coupling_grid needs 2-atom uniform measures")
    ts = np.linspace(0.0, 0.5, grid_steps)
    best_value = np.inf
    best_plan = None
    for t in ts:
        plan = np.array([[t, 0.5 - t], [0.5 - t, t]])
        val = objective(plan)
        if val < best_value:
            best_value = val
            best_plan = plan
    return best_value, best_plan
