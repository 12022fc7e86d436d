import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qop.erm import (
    Anchor,
    Dataset,
    LassoProblem,
    clip_vector,
    dataset_from_json,
    dataset_to_json,
    generate_interpolation_dataset,
    load_dataset,
    save_dataset,
)


@pytest.fixture
def setup_data():
    return generate_interpolation_dataset(300, 100, 5.0, math.sqrt(0.1), np.random.default_rng(0))


def test_interpolation_at_theta_star(setup_data):
    data, theta_star, anchor = setup_data
    prob = LassoProblem(data, 1.0, 10.0)
    assert np.max(prob.losses(theta_star)) <= 1e-18
    assert np.max(np.abs(data.X)) == pytest.approx(5.0, rel=1e-15)
    assert anchor.eta == pytest.approx(np.linalg.norm(anchor.theta_tilde_star - theta_star), rel=1e-15)


def test_zero_anchor_noise():
    _, theta_star, anchor = generate_interpolation_dataset(5, 3, 1.0, 0.0, np.random.default_rng(1))
    assert anchor.eta == 0.0 and np.array_equal(anchor.theta_tilde_star, theta_star)


def test_generator_draw_order():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((4, 3))
    theta = rng.standard_normal(3)
    offset = 0.5 * rng.standard_normal(3)
    data, theta_star, anchor = generate_interpolation_dataset(4, 3, 2.0, 0.5, np.random.default_rng(9))
    np.testing.assert_array_equal(data.X, X * (2.0 / np.max(np.abs(X))))
    np.testing.assert_array_equal(theta_star, theta)
    np.testing.assert_array_equal(anchor.theta_tilde_star, theta + offset)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 2)) * 3.0, np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 2)), np.zeros(3), 1.0)
    d = Dataset(np.ones((2, 2)), np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        d.X[0, 0] = 0.5  # read-only
    assert len(d.points) == 2 and d.points[0].y == 0.0
    with pytest.raises(ValueError):
        Anchor(np.zeros(2), -1.0)


def test_loss_grad_examples(setup_data):
    data, theta_star, _ = setup_data
    prob = LassoProblem(data, 1.0, 1.0)
    assert not np.any(prob.loss_grad(theta_star, 17))
    tiny = LassoProblem(Dataset(np.array([[1.0, 0.0]]), np.array([0.0]), 1.0), 0.0, 1.0)
    np.testing.assert_array_equal(tiny.loss_grad(np.array([2.0, 5.0]), 0), [2.0, 0.0])
    with pytest.raises(IndexError):
        tiny.loss_grad(np.zeros(2), 1)


def test_loss_grad_finite_differences():
    data, _, _ = generate_interpolation_dataset(20, 6, 2.0, 0.1, np.random.default_rng(3))
    prob = LassoProblem(data, 0.0, 1.0)
    rng = np.random.default_rng(4)
    h = 1e-5
    for _ in range(100):
        theta = rng.standard_normal(6)
        i = int(rng.integers(20))
        fd = np.array([(prob.losses(theta + h * e)[i] - prob.losses(theta - h * e)[i]) / (2 * h)
                       for e in np.eye(6)])
        g = prob.loss_grad(theta, i)
        assert np.linalg.norm(fd - g) <= 1e-6 * max(1.0, np.linalg.norm(g))


def test_empirical_objective_examples(setup_data):
    prob0 = LassoProblem(Dataset(np.ones((3, 2)), np.zeros(3), 1.0), 1.0, 1.0)
    assert prob0.empirical_objective(np.zeros(2)) == 0.0
    data, theta_star, _ = setup_data
    prob = LassoProblem(data, 1.0, 1.0)
    assert prob.empirical_objective(theta_star) == pytest.approx(np.sum(np.abs(theta_star)), rel=1e-12)


def test_empirical_objective_naive_oracle():
    data, _, _ = generate_interpolation_dataset(7, 4, 1.5, 0.1, np.random.default_rng(5))
    prob = LassoProblem(data, 0.7, 1.0)
    theta = np.random.default_rng(6).standard_normal(4)
    naive = 0.0
    for x, y in zip(data.X, data.y):
        r = sum(a * b for a, b in zip(x, theta)) - y
        naive += 0.5 * r * r
    naive += 0.7 * sum(abs(t) for t in theta)
    assert prob.empirical_objective(theta) == pytest.approx(naive, rel=1e-13)
    np.testing.assert_allclose(prob.loss_grad_sum(theta),
                               sum(prob.loss_grad(theta, i) for i in range(7)), rtol=1e-12)


def test_clipping():
    g = np.array([3.0, 0.0])
    assert clip_vector(g, 10.0) is g
    np.testing.assert_array_equal(clip_vector(np.array([30000.0, 0.0]), 10000.0), [10000.0, 0.0])
    with pytest.raises(ValueError):
        clip_vector(g, 0.0)
    prob = LassoProblem(Dataset(np.array([[1.0, 0.0]]), np.array([0.0]), 1.0), 0.0, 1.0)
    np.testing.assert_allclose(prob.clipped_loss_grad(np.array([5.0, 0.0]), 0, 2.0), [2.0, 0.0])


def test_derived_constants(setup_data):
    data, _, _ = setup_data
    prob = LassoProblem(data, 1.0, 2.0)
    assert prob.L == 100 * 25.0
    assert prob.G == 10.0
    assert prob.hess_rank == 1
    s = 5.0 * 10.0
    assert prob.zeta == pytest.approx((2 * 2.0 * 10.0 * s + np.max(np.abs(data.y))) * s, rel=1e-15)


def test_hessians_rank_one_and_bounded(setup_data):
    data, _, _ = setup_data
    prob = LassoProblem(data, 1.0, 1.0)
    for x in data.X[:30]:
        h = np.outer(x, x)
        ev = np.linalg.eigvalsh(h)
        assert np.sum(ev > 1e-10 * ev[-1]) == 1
        assert ev[-1] <= prob.L * (1 + 1e-12)


@pytest.mark.parametrize("kappa", [0.1, 1.0, 100.0])
def test_zeta_dominates_gradients(setup_data, kappa):
    data, _, _ = setup_data
    prob = LassoProblem(data, 1.0, kappa)
    rng = np.random.default_rng(8)
    thetas = rng.uniform(-kappa, kappa, (1000, data.d))
    norms = np.linalg.norm(((thetas @ data.X.T) - data.y)[:, :, None] * data.X[None], axis=2)
    assert norms.max() <= prob.zeta


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.floats(0.0, 3.0))
def test_subgradients_bounded_by_G(theta, omega):
    prob = LassoProblem(Dataset(np.ones((1, 4)), np.zeros(1), 1.0), omega, 1.0)
    theta = np.array(theta)
    rng = np.random.default_rng(0)
    sub = omega * np.where(theta != 0, np.sign(theta), rng.uniform(-1, 1, 4))
    assert np.linalg.norm(sub) <= prob.G + 1e-12


@given(st.integers(0, 10_000))
def test_objective_convexity(seed):
    rng = np.random.default_rng(seed)
    data, _, _ = generate_interpolation_dataset(10, 5, 2.0, 0.1, rng)
    prob = LassoProblem(data, 1.0, 1.0)
    a, b = rng.standard_normal(5) * 3, rng.standard_normal(5) * 3
    mid = prob.empirical_objective(0.5 * (a + b))
    assert mid <= 0.5 * prob.empirical_objective(a) + 0.5 * prob.empirical_objective(b) + 1e-9


def test_json_round_trip(tmp_path):
    data, theta_star, anchor = generate_interpolation_dataset(6, 3, 1.0, 0.2, np.random.default_rng(2))
    doc = dataset_to_json(data, theta_star, anchor)
    assert set(doc) == {"d", "n", "xi", "points", "theta_star", "theta_tilde_star", "eta"}
    d2, t2, a2 = dataset_from_json(doc)
    assert d2.digest() == data.digest()
    path = tmp_path / "data.json"
    save_dataset(path, data, theta_star, anchor)
    d3, t3, a3 = load_dataset(path)
    np.testing.assert_array_equal(d3.X, data.X)
    np.testing.assert_array_equal(t3, theta_star)
    assert a3.eta == anchor.eta
    d4, t4, a4 = dataset_from_json(dataset_to_json(data))
    assert t4 is None and a4 is None


def test_problem_validation(setup_data):
    data, _, _ = setup_data
    with pytest.raises(ValueError):
        LassoProblem(data, -1.0, 1.0)
    with pytest.raises(ValueError):
        LassoProblem(data, 1.0, 0.0)
