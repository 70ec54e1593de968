import json
import math

import numpy as np
import pytest

from srwdist.measures import (
    DiscreteMeasure,
    PackingError,
    Sampler,
    SeparatedSet,
    greedy_separated_set,
    isometric_embed,
    parse_sampler_spec,
    project_measure,
    random_orthogonal,
    rng_from_seed,
    sample_empirical,
    uniform_measure,
    worst_case_measure,
)


def test_measure_basic_properties():
    pts = np.array([[0.1, 0.2], [-0.3, 0.4], [0.0, 0.0]])
    w = np.array([0.2, 0.3, 0.5])
    mu = DiscreteMeasure(pts, w)
    assert mu.dim == 2
    assert mu.n_atoms == 3
    assert mu.weights.sum() == pytest.approx(1.0, abs=1e-15)


def test_measure_rejects_bad_weights():
    pts = np.array([[0.1], [0.2]])
    with pytest.raises(ValueError):
        DiscreteMeasure(pts, [0.7, 0.7])
    with pytest.raises(ValueError):
        DiscreteMeasure(pts, [1.2, -0.2])
    with pytest.raises(ValueError):
        DiscreteMeasure(pts, [1.0])


def test_measure_rejects_points_outside_ball():
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([[1.2, 0.0]]), [1.0])


def test_save_load_roundtrip(tmp_path):
    rng = rng_from_seed(3)
    pts = rng.random((7, 4)) * 0.4
    w = rng.random(7)
    w /= w.sum()
    mu = DiscreteMeasure(pts, w)
    path = tmp_path / "mu.json"
    mu.save(path)
    back = DiscreteMeasure.load(path)
    assert back.dim == mu.dim
    np.testing.assert_array_equal(back.points, mu.points)
    np.testing.assert_array_equal(back.weights, mu.weights)
    payload = json.loads(path.read_text())
    assert set(payload) == {"dim", "points", "weights"}


def test_rng_from_seed_deterministic_and_keyed():
    a = rng_from_seed(42).random(5)
    b = rng_from_seed(42).random(5)
    c = rng_from_seed(42, 1).random(5)
    d = rng_from_seed(42, 1, 0).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert not np.allclose(c, d)


@pytest.mark.parametrize("kind", ["uniform-sphere", "uniform-ball"])
def test_sampler_draws_stay_in_ball(kind):
    samp = Sampler(kind, dim=6, seed=11)
    pts = samp.draw(500)
    norms = np.linalg.norm(pts, axis=1)
    assert norms.max() <= 1.0 + 1e-12
    if kind == "uniform-sphere":
        assert np.abs(norms - 1.0).max() <= 1e-12


def test_sampler_draw_reproducible():
    samp = Sampler("uniform-ball", dim=3, seed=5)
    np.testing.assert_array_equal(samp.draw(20), samp.draw(20))
    r1 = samp.draw(20, rng=rng_from_seed(5, 20, 0))
    r2 = samp.draw(20, rng=rng_from_seed(5, 20, 0))
    np.testing.assert_array_equal(r1, r2)


def test_finite_sampler_draws_atoms():
    mu = uniform_measure(np.array([[0.1, 0.0], [0.0, 0.5], [-0.3, -0.3]]))
    samp = Sampler("finite", dim=2, seed=9, measure=mu)
    pts = samp.draw(100)
    # every draw must be one of the three atoms
    matches = (pts[:, None, :] == mu.points[None, :, :]).all(-1)
    assert matches.any(axis=1).all()


def test_sampler_validation():
    with pytest.raises(ValueError):
        Sampler("gaussian", dim=2, seed=0)
    with pytest.raises(ValueError):
        Sampler("finite", dim=2, seed=0)  # missing measure
    mu = uniform_measure(np.array([[0.1, 0.2, 0.3]]))
    with pytest.raises(ValueError):
        Sampler("finite", dim=2, seed=0, measure=mu)


def test_sample_empirical_uniform_weights():
    samp = Sampler("uniform-ball", dim=2, seed=21)
    emp = sample_empirical(samp, 50)
    assert emp.n_atoms == 50
    np.testing.assert_allclose(emp.weights, 1.0 / 50)


@pytest.mark.parametrize("dim,eps,target,seed", [(2, 0.3, 12, 0), (3, 0.25, 40, 1), (5, 1 / 3, 60, 2)])
def test_greedy_separated_set(dim, eps, target, seed):
    sep = greedy_separated_set(dim, eps, target, seed)
    assert sep.points.shape == (target, dim)
    diff = sep.points[:, None, :] - sep.points[None, :, :]
    dist = np.sqrt((diff * diff).sum(-1))
    dist[np.diag_indices(target)] = np.inf
    assert dist.min() > eps


def test_greedy_separated_set_raises_when_infeasible():
    # at most 3 points can be 0.9-separated inside the 1-D ball
    with pytest.raises(PackingError) as info:
        greedy_separated_set(1, 0.9, 10, seed=0, max_attempts=5000)
    assert info.value.target == 10
    assert info.value.found < 10


@pytest.mark.parametrize("n,expect_d", [(2, 1), (10, 3), (100, 5), (1000, 7)])
def test_worst_case_measure_dimension(n, expect_d):
    mu = worst_case_measure(n, seed=0)
    assert mu.dim == expect_d
    assert mu.n_atoms == n
    np.testing.assert_allclose(mu.weights, 1.0 / n)
    SeparatedSet(1.0 / 3.0, mu.points)  # separation certificate


def test_separated_set_rejects_close_points():
    pts = np.array([[0.0, 0.0], [0.1, 0.0]])
    with pytest.raises(ValueError):
        SeparatedSet(0.5, pts)


def test_random_orthogonal():
    Q = random_orthogonal(7, seed=13)
    np.testing.assert_allclose(Q @ Q.T, np.eye(7), atol=1e-12)
    np.testing.assert_array_equal(Q, random_orthogonal(7, seed=13))


def test_isometric_embed_preserves_distances():
    rng = rng_from_seed(17)
    pts = rng.random((9, 3)) * 0.5
    mu = uniform_measure(pts)
    emb = isometric_embed(mu, 9, orthogonal_seed=4)
    assert emb.dim == 9
    d_before = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
    d_after = np.linalg.norm(emb.points[:, None] - emb.points[None, :], axis=-1)
    np.testing.assert_allclose(d_after, d_before, atol=1e-12)
    with pytest.raises(ValueError):
        isometric_embed(mu, 2)


def test_project_measure_is_idempotent():
    rng = rng_from_seed(19)
    pts = rng.random((8, 5)) * 0.4
    mu = uniform_measure(pts)
    basis = np.eye(5)[:2]
    proj = project_measure(mu, basis)
    again = project_measure(proj, basis)
    np.testing.assert_allclose(proj.points, again.points, atol=1e-15)
    assert np.abs(proj.points[:, 2:]).max() == 0.0


def test_parse_sampler_spec():
    s1 = parse_sampler_spec("uniform-sphere:d=40", seed=3)
    assert (s1.kind, s1.dim, s1.seed) == ("uniform-sphere", 40, 3)
    s2 = parse_sampler_spec("uniform-ball:d=5")
    assert (s2.kind, s2.dim) == ("uniform-ball", 5)
    s3 = parse_sampler_spec("packing:n=20", seed=1, construct_seed=6)
    assert s3.kind == "finite"
    assert s3.measure.n_atoms == 20
    for bad in ("gauss:d=3", "uniform-ball:n=5", "file:", "uniform-sphere:"):
        with pytest.raises(ValueError):
            parse_sampler_spec(bad)


def test_parse_sampler_spec_file(tmp_path):
    mu = uniform_measure(np.array([[0.2, 0.1], [-0.4, 0.0]]))
    path = tmp_path / "m.json"
    mu.save(path)
    samp = parse_sampler_spec(f"file:{path}", seed=8)
    assert samp.kind == "finite"
    np.testing.assert_array_equal(samp.measure.points, mu.points)
