"""Discrete probability measures on the unit ball: construction, sampling,
packing-based worst cases, and isometric embeddings/projections.

All randomness flows through numpy's counter-based Philox generator seeded
from explicit user-supplied integers, so every construction is
bit-reproducible.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .validation import (
    as_float_array,
    check_basis,
    check_points,
    check_unit_ball,
    check_weights,
)

DEFAULT_MAX_ATTEMPTS = 10**6


class PackingError(RuntimeError):
    """Raised when greedy packing cannot reach the target size."""

    def __init__(self, attempts, found, target):
        self.attempts = attempts
        self.found = found
        self.target = target
        super().__init__(
            f"packing-not-found: {found}/{target} points after {attempts} attempts"
        )


def rng_from_seed(seed, *spawn_key) -> np.random.Generator:
    """Philox generator for a master seed and an optional derivation path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class DiscreteMeasure:
    """A finitely supported probability measure inside the unit ball."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = check_points(self.points)
        w = check_weights(self.weights, pts.shape[0])
        check_unit_ball(pts)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.points.shape[0]

    def to_dict(self):
        return {
            "dim": self.dim,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def from_dict(cls, payload):
        dim = payload["dim"]
        pts = check_points(payload["points"], dim=dim)
        return cls(pts, payload["weights"])

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def uniform_measure(points) -> DiscreteMeasure:
    pts = check_points(points)
    n = pts.shape[0]
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))


@dataclass(frozen=True)
class SeparatedSet:
    """Points in the unit ball with pairwise distances strictly above epsilon."""

    epsilon: float
    points: np.ndarray

    def __post_init__(self):
        pts = check_points(self.points)
        check_unit_ball(pts)
        if not 0 < self.epsilon:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "points", pts)
        self.assert_separated()

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def assert_separated(self):
        """Certificate: every pairwise distance strictly exceeds epsilon."""
        pts = self.points
        n = pts.shape[0]
        if n < 2:
            return self
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff * diff).sum(-1))
        dist[np.diag_indices(n)] = np.inf
        if not np.all(dist > self.epsilon):
            raise ValueError(f"separation certificate failed: min distance {dist.min()!r}")
        return self


@dataclass(frozen=True)
class Sampler:
    """A seeded law on the unit ball that empirical measures are drawn from.

    kind is one of "uniform-sphere", "uniform-ball", "finite"; finite
    samplers carry the measure they draw atoms from (this covers the
    worst-case packing construction too).
    """

    kind: str
    dim: int
    seed: int
    measure: DiscreteMeasure | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ("uniform-sphere", "uniform-ball", "finite"):
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.kind == "finite":
            if self.measure is None:
                raise ValueError("finite sampler needs a measure")
            if self.measure.dim != self.dim:
                raise ValueError("finite sampler dim mismatch")
        if self.dim < 1:
            raise ValueError("dim must be positive")

    def with_seed(self, seed) -> "Sampler":
        return replace(self, seed=int(seed))

    def draw(self, n, rng=None):
        """n i.i.d. points as an (n, dim) array."""
        if rng is None:
            rng = rng_from_seed(self.seed)
        if self.kind == "uniform-sphere":
            z = rng.standard_normal((n, self.dim))
            return z / np.linalg.norm(z, axis=1, keepdims=True)
        if self.kind == "uniform-ball":
            z = rng.standard_normal((n, self.dim))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            radii = rng.random(n) ** (1.0 / self.dim)
            return z * radii[:, None]
        idx = rng.choice(self.measure.n_atoms, size=n, p=self.measure.weights)
        return self.measure.points[idx]


def sample_empirical(sampler: Sampler, n: int) -> DiscreteMeasure:
    """Empirical measure: n i.i.d. draws, each with weight 1/n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    pts = sampler.draw(n)
    norms = np.linalg.norm(pts, axis=1)
    if norms.max() > 1.0 + 1e-12:
        raise ValueError(f"sampler law escaped the unit ball (norm {norms.max()!r})")
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))


def greedy_separated_set(dim, epsilon, target, seed, max_attempts=DEFAULT_MAX_ATTEMPTS):
    """Greedy rejection-sampled packing: uniform ball draws, keep a draw iff
    it lies strictly more than epsilon from everything kept so far.

    Raises PackingError with the attempt count if target is not reached.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if target < 1:
        raise ValueError("target must be at least 1")
    rng = rng_from_seed(seed)
    ball = Sampler("uniform-ball", dim, seed=0)
    kept = np.empty((target, dim))
    count = 0
    eps_sq = epsilon * epsilon
    attempts = 0
    batch = max(64, 4 * target)
    while count < target:
        if attempts >= max_attempts:
            raise PackingError(attempts, count, target)
        take = min(batch, max_attempts - attempts)
        draws = ball.draw(take, rng=rng)
        attempts += take
        for x in draws:
            if count:
                d2 = ((kept[:count] - x) ** 2).sum(1)
                if d2.min() <= eps_sq:
                    continue
            kept[count] = x
            count += 1
            if count == target:
                break
    return SeparatedSet(epsilon, kept.copy())


def worst_case_measure(n, seed=0) -> DiscreteMeasure:
    """Uniform measure on n points of a 1/3-separated set in dimension
    ceil(ln n): the hard instance for empirical convergence rates."""
    if n < 2:
        raise ValueError("n must be at least 2")
    d = max(1, math.ceil(math.log(n)))
    packing = greedy_separated_set(d, 1.0 / 3.0, n, seed)
    return uniform_measure(packing.points)


def random_orthogonal(dim, seed) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian, signs fixed)."""
    rng = rng_from_seed(seed)
    G = rng.standard_normal((dim, dim))
    Q, R = np.linalg.qr(G)
    return Q * np.sign(np.diag(R))[None, :]


def isometric_embed(mu: DiscreteMeasure, target_dim, orthogonal_seed=None) -> DiscreteMeasure:
    """Zero-pad to target_dim, then apply a seeded random orthogonal map
    (identity map when orthogonal_seed is None). Pairwise distances and
    norms are preserved."""
    if target_dim < mu.dim:
        raise ValueError(f"target_dim {target_dim} below measure dim {mu.dim}")
    pts = np.zeros((mu.n_atoms, target_dim))
    pts[:, : mu.dim] = mu.points
    if orthogonal_seed is not None:
        Q = random_orthogonal(target_dim, orthogonal_seed)
        pts = pts @ Q.T
    return DiscreteMeasure(pts, mu.weights)


def project_measure(mu: DiscreteMeasure, basis) -> DiscreteMeasure:
    """Pushforward of mu under orthogonal projection onto span(basis),
    expressed in ambient coordinates. Coincident images stay distinct atoms."""
    B = check_basis(basis, dim=mu.dim)
    pts = (mu.points @ B.T) @ B
    return DiscreteMeasure(pts, mu.weights)


def parse_sampler_spec(spec, seed=0, construct_seed=0) -> Sampler:
    """Parse a sampler description like "uniform-sphere:d=40",
    "uniform-ball:d=5", "packing:n=100", or "file:path.json"."""
    kind, _, arg = spec.partition(":")
    kind = kind.strip()
    arg = arg.strip()
    if kind in ("uniform-sphere", "uniform-ball"):
        if not arg.startswith("d="):
            raise ValueError(f"sampler spec {spec!r} needs d=<dim>")
        return Sampler(kind, int(arg[2:]), seed=seed)
    if kind == "packing":
        if not arg.startswith("n="):
            raise ValueError(f"sampler spec {spec!r} needs n=<points>")
        mu = worst_case_measure(int(arg[2:]), seed=construct_seed)
        return Sampler("finite", mu.dim, seed=seed, measure=mu)
    if kind == "file":
        if not arg:
            raise ValueError(f"sampler spec {spec!r} needs a path")
        mu = DiscreteMeasure.load(arg)
        return Sampler("finite", mu.dim, seed=seed, measure=mu)
    raise ValueError(f"unknown sampler spec {spec!r}")
