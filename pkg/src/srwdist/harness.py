"""Monte-Carlo experiment harness: convergence-rate sweeps, the packing
lower-bound constant, the sample-covariance operator-norm bound, and the
projection three-term decomposition.

Reproducibility contract: every trial's randomness is a pure function of
(master_seed, n, trial index), aggregation runs in fixed trial order, and
reports carry wall_time_s = 0.0 so identical configurations serialize to
identical bytes. Real timings go to stderr.
"""

import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import rate_curves, t_star
from .measures import (
    DiscreteMeasure,
    Sampler,
    SeparatedSet,
    parse_sampler_spec,
    project_measure,
    rng_from_seed,
    uniform_measure,
    worst_case_measure,
)
from .ot import separated_w1_lower_bound, wasserstein
from .srw import DEFAULT_MAX_ITERS, DEFAULT_TOL, srw_distance

PROXY_SIZE = 4096
# spawn keys reserved for shared draws; trial streams use (n, trial) with
# n >= 1, so a leading zero can never collide with them
_PROXY_KEY = (0, 0)
_PLUGIN_SIGMA_KEY = (0, 1)
_PLUGIN_SIGMA_SIZE = 10**5

METRICS = ("w1", "w2", "s1", "sk")

CSV_COLUMNS = (
    "n",
    "trials",
    "mean_dist",
    "std_err",
    "mean_sq_dist",
    "upper_curve",
    "lower_curve",
    "fitted_C_upper",
    "fitted_c_lower",
    "wall_time_s",
    "seed",
)

TRIANGLE_TOL = 1e-3
SPECTRAL_TOL = 1e-4
_CHAIN_TOL = 1e-9


def fmt17(x) -> str:
    """Floats with 17 significant digits (round-trip exact); ints verbatim."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully serializable description of one rate experiment."""

    sampler_spec: str
    metric: str
    n_schedule: tuple
    trials: int
    master_seed: int
    k: int | None = None
    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.metric == "sk" and (self.k is None or self.k < 1):
            raise ValueError("metric 'sk' needs k >= 1")
        sched = tuple(int(n) for n in self.n_schedule)
        if not sched or any(n < 1 for n in sched):
            raise ValueError("n_schedule must be non-empty positive integers")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("n_schedule must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        object.__setattr__(self, "n_schedule", sched)

    def to_dict(self):
        return {
            "sampler_spec": self.sampler_spec,
            "metric": self.metric,
            "n_schedule": list(self.n_schedule),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "k": self.k,
            "tol": self.tol,
            "max_iters": self.max_iters,
        }


@dataclass(frozen=True)
class RateRow:
    n: int
    trials: int
    mean_dist: float
    std_err: float
    mean_sq_dist: float
    upper_curve: float
    lower_curve: float
    fitted_C_upper: float
    fitted_c_lower: float
    wall_time_s: float
    seed: int

    def as_tuple(self):
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass(frozen=True)
class RateReport:
    rows: tuple
    metadata: dict = field(default_factory=dict)

    def csv_text(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(",".join(fmt17(v) for v in row.as_tuple()))
        return "\n".join(lines) + "\n"

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.csv_text())

    def json_obj(self):
        return {
            "metadata": self.metadata,
            "rows": [dict(zip(CSV_COLUMNS, row.as_tuple())) for row in self.rows],
        }


@dataclass(frozen=True)
class CovarianceReport:
    rows: tuple  # of (n, mean_opnorm_sum, two_n_sigma_opnorm, residual_over_logn)
    metadata: dict = field(default_factory=dict)

    columns = ("n", "mean_opnorm_sum", "two_n_sigma_opnorm", "residual_over_logn")

    def csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(fmt17(v) for v in row))
        return "\n".join(lines) + "\n"

    def json_obj(self):
        return {
            "metadata": self.metadata,
            "rows": [dict(zip(self.columns, row)) for row in self.rows],
        }


@dataclass(frozen=True)
class DecompositionReport:
    """Means of the three-term split of the empirical-rate triangle."""

    n: int
    t: int
    trials: int
    lambda_t: float
    lambda_next: float
    mean_full: float        # S1(mu, mu_n)
    term_projection: float  # S1(mu, P#mu), trial independent
    mean_projected: float   # S1(P#mu, P#mu_n)
    mean_lift: float        # S1(P#mu_n, mu_n)
    metadata: dict = field(default_factory=dict)


def _metric_fn(metric, k, tol, max_iters):
    if metric == "w1":
        return lambda a, b: wasserstein(a, b, p=1)
    if metric == "w2":
        return lambda a, b: wasserstein(a, b, p=2)
    kk = 1 if metric == "s1" else int(k)
    return lambda a, b: srw_distance(a, b, k=kk, tol=tol, max_iters=max_iters).distance


def _reference_measure(sampler: Sampler, master_seed) -> DiscreteMeasure:
    """Finite truth when the sampler has one, else a fixed empirical proxy
    drawn from a reserved stream (the solver only takes discrete inputs)."""
    if sampler.kind == "finite":
        return sampler.measure
    pts = sampler.draw(PROXY_SIZE, rng=rng_from_seed(master_seed, *_PROXY_KEY))
    return uniform_measure(pts)


def _run_trials(task, trials, threads):
    """Map task(trial) over range(trials) into a pre-sized slot array.

    Slots are indexed by trial and reduced by the caller in index order, so
    the result is identical for any thread count. A failed trial aborts.
    """
    out = [None] * trials
    if threads is not None and threads > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for trial, value in enumerate(pool.map(task, range(trials))):
                out[trial] = value
    else:
        for trial in range(trials):
            out[trial] = task(trial)
    return out


def fit_rate_constant(report: RateReport, curve: str) -> float:
    """Schedule-level constant fits: upper = max_n mean_root/upper_curve(n),
    lower = min_n mean_root * sqrt(ln n). Rows whose curve is undefined
    (n too small) are skipped; nan when nothing remains."""
    if not report.rows:
        raise ValueError("empty report")
    if curve == "upper":
        vals = [
            math.sqrt(row.mean_sq_dist) / row.upper_curve
            for row in report.rows
            if math.isfinite(row.upper_curve) and row.upper_curve > 0
        ]
        return max(vals) if vals else float("nan")
    if curve == "lower":
        vals = [
            math.sqrt(row.mean_sq_dist) * math.sqrt(math.log(row.n))
            for row in report.rows
            if row.n >= 2
        ]
        return min(vals) if vals else float("nan")
    raise ValueError(f"curve must be 'upper' or 'lower', got {curve!r}")


def run_rate_experiment(cfg: ExperimentConfig, threads=None) -> RateReport:
    """Empirical-measure convergence sweep for one metric and one sampler.

    For each n in the schedule, draws `trials` independent empirical
    measures and evaluates metric(reference, empirical); the reference is
    the sampler's finite truth when it has one, a fixed proxy otherwise.
    """
    sampler = parse_sampler_spec(
        cfg.sampler_spec, seed=cfg.master_seed, construct_seed=cfg.master_seed
    )
    reference = _reference_measure(sampler, cfg.master_seed)
    fn = _metric_fn(cfg.metric, cfg.k, cfg.tol, cfg.max_iters)

    aggregates = []
    for n in cfg.n_schedule:

        def one_trial(trial, n=n):
            rng = rng_from_seed(cfg.master_seed, n, trial)
            emp = uniform_measure(sampler.draw(n, rng=rng))
            try:
                return float(fn(reference, emp))
            except Exception as exc:
                raise RuntimeError(f"trial failed at n={n}, trial={trial}: {exc}") from exc

        t0 = time.perf_counter()
        dists = np.array(_run_trials(one_trial, cfg.trials, threads))
        wall = time.perf_counter() - t0
        print(f"[rate] n={n} trials={cfg.trials} wall={wall:.3f}s", file=sys.stderr)

        std_err = float(dists.std(ddof=1) / math.sqrt(cfg.trials)) if cfg.trials > 1 else 0.0
        up, lo = rate_curves(n) if n >= 3 else (float("nan"), float("nan"))
        aggregates.append(
            {
                "n": n,
                "mean_dist": float(dists.mean()),
                "std_err": std_err,
                "mean_sq_dist": float((dists * dists).mean()),
                "upper_curve": up,
                "lower_curve": lo,
            }
        )

    roots = [math.sqrt(agg["mean_sq_dist"]) for agg in aggregates]
    up_ratios = [
        r / agg["upper_curve"]
        for r, agg in zip(roots, aggregates)
        if math.isfinite(agg["upper_curve"]) and agg["upper_curve"] > 0
    ]
    lo_ratios = [
        r * math.sqrt(math.log(agg["n"])) for r, agg in zip(roots, aggregates) if agg["n"] >= 2
    ]
    c_up = max(up_ratios) if up_ratios else float("nan")
    c_lo = min(lo_ratios) if lo_ratios else float("nan")

    rows = tuple(
        RateRow(
            n=agg["n"],
            trials=cfg.trials,
            mean_dist=agg["mean_dist"],
            std_err=agg["std_err"],
            mean_sq_dist=agg["mean_sq_dist"],
            upper_curve=agg["upper_curve"],
            lower_curve=agg["lower_curve"],
            fitted_C_upper=c_up,
            fitted_c_lower=c_lo,
            wall_time_s=0.0,
            seed=cfg.master_seed,
        )
        for agg in aggregates
    )
    from . import __version__

    metadata = {"config": cfg.to_dict(), "version": __version__, "reference": sampler.kind}
    return RateReport(rows, metadata)


def run_lower_bound_experiment(n, trials, master_seed, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS) -> RateReport:
    """Worst-case packing measure against its own empirical draws.

    Per trial records W2, W1, S1 and the separated-support lower bound
    (eps/2) sum |mu_n{x} - 1/n|, checking the pointwise chain
    W2 >= W1 >= separated bound on every trial. The headline row reports
    W2; the other means and per-trial arrays ride in metadata.
    """
    mu = worst_case_measure(n, seed=master_seed)
    support = SeparatedSet(1.0 / 3.0, mu.points)
    d = mu.dim

    w1s = np.empty(trials)
    w2s = np.empty(trials)
    s1s = np.empty(trials)
    seps = np.empty(trials)
    t0 = time.perf_counter()
    for trial in range(trials):
        rng = rng_from_seed(master_seed, n, trial)
        idx = rng.choice(mu.n_atoms, size=n, p=mu.weights)
        emp = DiscreteMeasure(mu.points[idx], np.full(n, 1.0 / n))
        counts = np.bincount(idx, minlength=mu.n_atoms) / n
        try:
            w1s[trial] = wasserstein(mu, emp, p=1)
            w2s[trial] = wasserstein(mu, emp, p=2)
            s1s[trial] = srw_distance(mu, emp, k=1, tol=tol, max_iters=max_iters).distance
        except Exception as exc:
            raise RuntimeError(f"trial failed at n={n}, trial={trial}: {exc}") from exc
        seps[trial] = separated_w1_lower_bound(support, mu.weights, counts)
        if w2s[trial] < w1s[trial] - _CHAIN_TOL or w1s[trial] < seps[trial] - _CHAIN_TOL:
            raise RuntimeError(
                f"pointwise chain violated at trial {trial}: "
                f"W2={w2s[trial]!r} W1={w1s[trial]!r} separated={seps[trial]!r}"
            )
    wall = time.perf_counter() - t0
    print(f"[lower-bound] n={n} trials={trials} wall={wall:.3f}s", file=sys.stderr)

    std_err = float(w2s.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    up, lo = rate_curves(n) if n >= 3 else (float("nan"), float("nan"))
    mean_root = math.sqrt(float((w2s * w2s).mean()))
    row = RateRow(
        n=n,
        trials=trials,
        mean_dist=float(w2s.mean()),
        std_err=std_err,
        mean_sq_dist=float((w2s * w2s).mean()),
        upper_curve=up,
        lower_curve=lo,
        fitted_C_upper=mean_root / up if math.isfinite(up) else float("nan"),
        fitted_c_lower=mean_root * math.sqrt(math.log(n)),
        wall_time_s=0.0,
        seed=master_seed,
    )
    metadata = {
        "experiment": "lower-bound",
        "n": n,
        "dim": d,
        "trials": trials,
        "master_seed": master_seed,
        "means": {
            "w1": float(w1s.mean()),
            "w2": float(w2s.mean()),
            "s1": float(s1s.mean()),
            "separated_bound": float(seps.mean()),
        },
        "per_trial": {
            "w1": w1s.tolist(),
            "w2": w2s.tolist(),
            "s1": s1s.tolist(),
            "separated_bound": seps.tolist(),
        },
    }
    return RateReport((row,), metadata)


def run_covariance_experiment(sampler, n_schedule, trials, r, master_seed) -> CovarianceReport:
    """Mean operator norm of summed outer products against 2n||Sigma||_op.

    Sigma is the sampler's exact second moment when the law is finite and a
    large plug-in estimate otherwise; residual_over_logn = (mean - 2n
    ||Sigma||_op) / (r^2 ln n) isolates the additive term of the bound.
    """
    if isinstance(sampler, str):
        sampler = parse_sampler_spec(sampler, seed=master_seed, construct_seed=master_seed)
    if r <= 0:
        raise ValueError("r must be positive")
    schedule = [int(n) for n in n_schedule]
    if any(n < 3 for n in schedule):
        raise ValueError("n_schedule entries must be at least 3 (ln n > 1)")

    if sampler.kind == "finite":
        pts, w = sampler.measure.points, sampler.measure.weights
        sigma = (pts.T * w) @ pts
    else:
        pts = sampler.draw(_PLUGIN_SIGMA_SIZE, rng=rng_from_seed(master_seed, *_PLUGIN_SIGMA_KEY))
        sigma = pts.T @ pts / pts.shape[0]
    sigma_op = float(np.linalg.eigvalsh(sigma)[-1])

    rows = []
    for n in schedule:
        t0 = time.perf_counter()
        norms = np.empty(trials)
        for trial in range(trials):
            X = sampler.draw(n, rng=rng_from_seed(master_seed, n, trial))
            norms[trial] = np.linalg.eigvalsh(X.T @ X)[-1]
        wall = time.perf_counter() - t0
        print(f"[covariance] n={n} trials={trials} wall={wall:.3f}s", file=sys.stderr)
        mean = float(norms.mean())
        two_n = 2.0 * n * sigma_op
        rows.append((n, mean, two_n, (mean - two_n) / (r * r * math.log(n))))

    metadata = {
        "experiment": "covariance",
        "sampler": sampler.kind,
        "dim": sampler.dim,
        "trials": trials,
        "r": r,
        "master_seed": master_seed,
        "sigma_opnorm": sigma_op,
    }
    return CovarianceReport(tuple(rows), metadata)


def run_decomposition_experiment(
    mu: DiscreteMeasure, n, trials, master_seed, t=None, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS
) -> DecompositionReport:
    """Three-term split of S1(mu, mu_n) through the top-t eigenprojection.

    P projects onto the top-t eigenvectors of mu's second moment. Every
    trial asserts the triangle split within 1e-3 and the projection term
    against sqrt(lambda_{t+1}) within 1e-4; the exact spectrum must satisfy
    lambda_t <= 1/t (trace of the second moment is at most 1 on the ball).
    """
    if t is None:
        t = t_star(n)[0]
    t = int(t)
    if t < 1:
        raise ValueError(f"t must be at least 1, got {t}")
    if mu.dim <= t:
        raise ValueError(f"measure dimension {mu.dim} too small for t={t} (needs dim > t)")

    sigma = (mu.points.T * mu.weights) @ mu.points
    lam = np.linalg.eigvalsh(sigma)[::-1]  # descending
    lam_t = float(lam[t - 1])
    lam_next = float(max(lam[t], 0.0))
    if lam_t > 1.0 / t + 1e-12:
        raise RuntimeError(f"spectrum violates lambda_t <= 1/t: {lam_t!r} at t={t}")

    _, vecs = np.linalg.eigh(sigma)
    basis = np.ascontiguousarray(vecs[:, -t:].T[::-1])
    mu_p = project_measure(mu, basis)

    def s1(a, b):
        return srw_distance(a, b, k=1, tol=tol, max_iters=max_iters).distance

    term_b1 = s1(mu, mu_p)
    if term_b1 > math.sqrt(lam_next) + SPECTRAL_TOL:
        raise RuntimeError(
            f"projection term {term_b1!r} exceeds sqrt(lambda_(t+1)) = {math.sqrt(lam_next)!r}"
        )

    fulls = np.empty(trials)
    projected = np.empty(trials)
    lifts = np.empty(trials)
    t0 = time.perf_counter()
    for trial in range(trials):
        rng = rng_from_seed(master_seed, n, trial)
        idx = rng.choice(mu.n_atoms, size=n, p=mu.weights)
        emp = DiscreteMeasure(mu.points[idx], np.full(n, 1.0 / n))
        emp_p = project_measure(emp, basis)
        try:
            fulls[trial] = s1(mu, emp)
            projected[trial] = s1(mu_p, emp_p)
            lifts[trial] = s1(emp_p, emp)
        except Exception as exc:
            raise RuntimeError(f"trial failed at n={n}, trial={trial}: {exc}") from exc
        if fulls[trial] > term_b1 + projected[trial] + lifts[trial] + TRIANGLE_TOL:
            raise RuntimeError(
                f"triangle split violated at trial {trial}: "
                f"{fulls[trial]!r} > {term_b1!r} + {projected[trial]!r} + {lifts[trial]!r}"
            )
    wall = time.perf_counter() - t0
    print(f"[decomposition] n={n} t={t} trials={trials} wall={wall:.3f}s", file=sys.stderr)

    return DecompositionReport(
        n=n,
        t=t,
        trials=trials,
        lambda_t=lam_t,
        lambda_next=lam_next,
        mean_full=float(fulls.mean()),
        term_projection=float(term_b1),
        mean_projected=float(projected.mean()),
        mean_lift=float(lifts.mean()),
        metadata={
            "master_seed": master_seed,
            "per_trial": {
                "full": fulls.tolist(),
                "projected": projected.tolist(),
                "lift": lifts.tolist(),
            },
        },
    )
