"""Closed-form constants and rate curves for empirical convergence studies.

Everything here is deterministic arithmetic: binomial dispersion constants,
covering/packing counts for the unit ball, the Fournier-Guillin moment
bound machinery for W2 convergence in d >= 5, and the log-ratio schedule
that governs the dimension-free S_1 rate.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp


def mad_binomial(n: int, p: float) -> tuple[float, float]:
    """Mean absolute deviation around the mean and standard deviation of
    Binomial(n, p), both exact.

    The MAD is the full pmf sum with log-gamma binomial coefficients, so it
    stays accurate for n in the hundreds where naive factorials overflow.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    k = np.arange(n + 1)
    log_pmf = (
        gammaln(n + 1)
        - gammaln(k + 1)
        - gammaln(n - k + 1)
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )
    dev = np.abs(k - n * p)
    pos = dev > 0
    mad = float(np.exp(logsumexp(log_pmf[pos], b=dev[pos]))) if pos.any() else 0.0
    std = math.sqrt(n * p * (1.0 - p))
    return mad, std


def covering_packing_bounds(d: int, eps: float) -> tuple[float, float]:
    """(lower, upper) bounds on the size of a maximal eps-separated set in
    the unit ball: volume packing gives at least (1/eps)^d points and a
    covering argument caps it at (3/eps)^d."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must be in (0, 1], got {eps}")
    return (1.0 / eps) ** d, (3.0 / eps) ** d


def fournier_H(x: float, s: float, q: float) -> float:
    """Moment-interpolation factor H(x) with exponents s < q:

        H = (x (q-s)/s + (1+x) (q/s)^(q/(q-s)))^(s/q) * q/(q-s).
    """
    if x < 0.0:
        raise ValueError(f"x must be >= 0, got {x}")
    if s <= 0.0:
        raise ValueError(f"s must be > 0, got {s}")
    if q <= s:
        raise ValueError(f"q must exceed s, got q={q}, s={s}")
    inner = x * (q - s) / s + (1.0 + x) * (q / s) ** (q / (q - s))
    return inner ** (s / q) * q / (q - s)


def fournier_kappa(d: int, r_max: float = 64.0, r_steps: int = 4096) -> tuple[float, float]:
    """(kappa_{d,2}, kappa_d) for the W2 moment bound in dimension d >= 5.

    With K_d = 3^d dyadic covering pieces,

        kappa_{d,r} = (K_d/4)^(2/d) r^4 (1 - r^(-d/2))^(1-4/d)
                      / ((r-1)^2 (1 - r^(2-d/2))),

    and kappa_d minimizes over the geometric grid r in [2, r_max]. The
    direct value at r = 2 is returned alongside as a sanity anchor.
    """
    if d < 5:
        raise ValueError(f"d must be >= 5, got {d}")
    if r_max < 2.0:
        raise ValueError(f"r_max must be >= 2, got {r_max}")
    if r_steps < 2:
        raise ValueError(f"r_steps must be >= 2, got {r_steps}")
    K_d = 3.0**d
    front = (K_d / 4.0) ** (2.0 / d)

    def kappa_at(r):
        num = r**4 * (1.0 - r ** (-d / 2.0)) ** (1.0 - 4.0 / d)
        den = (r - 1.0) ** 2 * (1.0 - r ** (2.0 - d / 2.0))
        return front * num / den

    grid = np.geomspace(2.0, r_max, r_steps)
    values = kappa_at(grid)
    return float(kappa_at(2.0)), float(values.min())


def fournier_w2_upper(d: int, n: int, q: float) -> float:
    """Finite-n upper bound on E[W2^2] between the uniform measure on the
    unit ball in R^d (d >= 5) and its n-sample empirical measure, for a
    reference q-th moment of 1:

        4 (kappa_d / n^(2/d)) H(2^(-4/d) / kappa_d)

    with H at exponents s = 2d/(d-2) and q.
    """
    if d < 5:
        raise ValueError(f"d must be >= 5, got {d}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    s = 2.0 * d / (d - 2.0)
    if q <= s:
        raise ValueError(f"q must exceed 2d/(d-2) = {s}, got {q}")
    _, kappa_d = fournier_kappa(d)
    x = 2.0 ** (-4.0 / d) / kappa_d
    return 4.0 * (kappa_d / n ** (2.0 / d)) * fournier_H(x, s, q)


def t_star(n: int) -> tuple[int, bool]:
    """Subspace-dimension schedule t*(n) = floor(ln n / ln ln n) together
    with whether n is deep enough (t* >= 5) for the main rate branch."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    t = int(math.floor(math.log(n) / math.log(math.log(n))))
    return t, t >= 5


def rate_curves(n: int) -> tuple[float, float]:
    """(upper, lower) envelope curves for the dimension-free S_1 rate:
    sqrt(ln ln n / ln n) above and 1/sqrt(ln n) below."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    ln = math.log(n)
    return math.sqrt(math.log(ln) / ln), 1.0 / math.sqrt(ln)


@dataclass(frozen=True)
class BoundSet:
    """All closed-form quantities for a (d, n, q) configuration."""

    d: int
    n: int
    q: float
    H_value: float
    kappa_dr: float
    kappa_d: float
    fournier_w2_sq_bound: float
    t_star: int
    upper_curve: float
    lower_curve: float


def bound_set(d: int, n: int, q: float) -> BoundSet:
    """Evaluate every bound for one configuration; see BoundSet."""
    kappa_dr, kappa_d = fournier_kappa(d)
    s = 2.0 * d / (d - 2.0)
    x = 2.0 ** (-4.0 / d) / kappa_d
    H_value = fournier_H(x, s, q)
    w2_sq = fournier_w2_upper(d, n, q)
    t, _ = t_star(n)
    upper, lower = rate_curves(n)
    return BoundSet(
        d=d,
        n=n,
        q=q,
        H_value=H_value,
        kappa_dr=kappa_dr,
        kappa_d=kappa_d,
        fournier_w2_sq_bound=w2_sq,
        t_star=t,
        upper_curve=upper,
        lower_curve=lower,
    )
