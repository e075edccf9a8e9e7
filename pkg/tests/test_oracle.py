import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markov_urng.errors import BudgetExceeded, ValidationError
from markov_urng.markov_core import build_model, iid_model
from markov_urng.oracle import (
    enumerate_paths,
    exact_renyi_n,
    exact_tail,
    optimal_delta,
    run_verification,
    verify_sandwich,
)
from markov_urng.renyi_measures import renyi_entropy

small_distributions = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=5).map(
    lambda w: np.asarray(w) / np.sum(w)
)


def brute_force_delta(p, M):
    best = np.inf
    for assignment in itertools.product(range(M), repeat=len(p)):
        bins = np.zeros(M)
        np.add.at(bins, list(assignment), p)
        best = min(best, float(np.sum(np.maximum(bins - 1.0 / M, 0.0))))
    return best


def test_enumerated_path_probability(worked_example):
    dist = enumerate_paths(worked_example, 3)
    assert dist.probabilities.sum() == pytest.approx(1.0)
    assert dist.probabilities[0] == pytest.approx(0.81)
    # 0 -> 1 -> 0
    assert dist.probabilities[0b010] == pytest.approx(0.1 * 0.2)


def path_product(model, path):
    weight = model.initial[path[0]]
    for prev, cur in zip(path, path[1:]):
        weight *= model.kernel[cur, prev]
    return weight


@pytest.mark.parametrize("n", range(3, 13))
def test_enumeration_matches_path_products(worked_example, n):
    dist = enumerate_paths(worked_example, n)
    assert dist.probabilities.size == 2**n
    expected = [path_product(worked_example, path) for path in itertools.product(range(2), repeat=n)]
    assert np.allclose(dist.probabilities, expected, rtol=1e-12, atol=0)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_joint_enumeration_matches_path_products(a2_model, n):
    dist = enumerate_paths(a2_model, n)
    expected = [path_product(a2_model, path) for path in itertools.product(range(4), repeat=n)]
    assert np.allclose(dist.probabilities, expected, rtol=1e-12, atol=0)


def test_deterministic_chain_has_one_path():
    model = build_model([[0.0, 1.0], [1.0, 0.0]], [1.0, 0.0])
    dist = enumerate_paths(model, 6)
    assert np.count_nonzero(dist.probabilities) == 1
    assert dist.probabilities[0b010101] == pytest.approx(1.0)


def test_iid_paths_are_product_weights():
    dist = enumerate_paths(iid_model([0.6, 0.4]), 3)
    assert dist.probabilities[0b011] == pytest.approx(0.6 * 0.4 * 0.4)


def test_joint_layout_separates_source_and_side_information(a2_model):
    dist = enumerate_paths(a2_model, 3)
    joint = dist.joint_xy()
    assert joint.shape == (8, 8)
    assert joint.sum() == pytest.approx(1.0)
    assert dist.x_marginal().sum() == pytest.approx(1.0)
    assert dist.position_marginal(0) == pytest.approx(a2_model.initial)


def test_enumeration_budget(worked_example):
    with pytest.raises(BudgetExceeded):
        enumerate_paths(worked_example, 25)


def test_exact_renyi_matches_direct_summation(worked_example):
    dist = enumerate_paths(worked_example, 6)
    assert exact_renyi_n(worked_example, 6, 1.0, dist=dist) == pytest.approx(
        renyi_entropy(dist.probabilities, 1.0)
    )
    assert exact_renyi_n(worked_example, 6, np.inf, "min", dist=dist) == pytest.approx(-5 * np.log(0.9))


def test_tails_partition_unity(worked_example):
    dist = enumerate_paths(worked_example, 8)
    for gamma in (1.0, 2.5, 4.0):
        below = exact_tail(worked_example, 8, gamma, "<", dist=dist)
        above = exact_tail(worked_example, 8, gamma, ">=", dist=dist)
        assert below + above == pytest.approx(1.0)
        assert exact_tail(worked_example, 8, gamma, "<=", dist=dist) >= below


def test_optimal_delta_examples():
    assert optimal_delta([0.7, 0.2, 0.1], 2).value == pytest.approx(0.2)
    assert optimal_delta([0.5, 0.25, 0.25], 2).value == pytest.approx(0.0)
    assert optimal_delta(np.full(4, 0.25), 2).value == pytest.approx(0.0)
    result = optimal_delta([0.7, 0.2, 0.1], 2)
    assert result.rigorous
    assert result.assignment[1] == result.assignment[2] != result.assignment[0]


@settings(max_examples=40, deadline=None)
@given(small_distributions, st.integers(1, 3))
def test_optimal_delta_matches_brute_force(p, M):
    assert optimal_delta(p, M).value == pytest.approx(brute_force_delta(p, M), abs=1e-12)


def test_optimal_delta_rejects_non_distributions():
    with pytest.raises(ValidationError):
        optimal_delta([0.5, 0.6], 2)


def test_large_search_falls_back_to_greedy():
    p = np.full(30, 1 / 30)
    result = optimal_delta(p, 4)
    assert not result.rigorous
    assert 0 <= result.value <= 1


@pytest.mark.parametrize("theta", [-0.5, -0.2, 0.3, 1.0, 2.0])
@pytest.mark.parametrize("n", [8, 10, 12])
def test_delta_sandwich(worked_example, n, theta):
    assert verify_sandwich(worked_example, n, theta, "delta").holds


@pytest.mark.parametrize("n", [8, 10, 12])
def test_min_entropy_sandwich(worked_example, n):
    report = verify_sandwich(worked_example, n, kind="delta_inf")
    assert report.holds
    assert report.slack_low >= 0


@pytest.mark.parametrize("theta", [-0.5, 0.3, 1.0])
def test_side_information_sandwiches(a2_model, theta):
    dist = enumerate_paths(a2_model, 6)
    assert verify_sandwich(a2_model, 6, theta, "delta", dist=dist).holds
    assert verify_sandwich(a2_model, 6, theta, "xi", dist=dist).holds
    assert verify_sandwich(a2_model, 6, theta, "zeta", theta_prime=theta, dist=dist).holds


def test_sandwich_needs_theta(worked_example):
    with pytest.raises(ValidationError):
        verify_sandwich(worked_example, 8, kind="delta")


@pytest.mark.slow
def test_full_verification_matrix(worked_example, a2_model):
    plain = run_verification(worked_example)
    assert plain["holds"]
    assert plain["passed"] == 18
    joint = run_verification(a2_model)
    assert joint["holds"]
    assert joint["failed"] == 0
