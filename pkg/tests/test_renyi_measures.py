import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markov_urng.errors import StateSpaceTooLarge, ValidationError
from markov_urng.markov_core import iid_model
from markov_urng.oracle import enumerate_paths
from markov_urng.renyi_measures import (
    binary_closed_form,
    cond_renyi,
    conditional_entropy,
    correction_terms,
    entropy_rate,
    min_entropy,
    min_entropy_rate,
    renyi_entropy,
    renyi_profile,
    renyi_rate,
    shannon_entropy,
    single_shot_profile,
    smooth_min_entropy,
    spectrum_table,
    variance_rate,
    zero_order_rate,
)

from .conftest import V_GIVEN_Y

distributions = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6).map(
    lambda w: np.asarray(w) / np.sum(w)
)


def test_renyi_entropy_of_order_two():
    assert renyi_entropy([0.5, 0.25, 0.25], 1.0) == pytest.approx(0.980829, abs=1e-6)


def test_renyi_entropy_near_zero_is_shannon():
    assert renyi_entropy([0.5, 0.25, 0.25], 1e-8) == pytest.approx(1.039721, abs=1e-6)
    assert shannon_entropy([0.5, 0.25, 0.25]) == pytest.approx(1.039721, abs=1e-6)


def test_renyi_entropy_rejects_orders_at_or_below_zero():
    with pytest.raises(ValidationError):
        renyi_entropy([0.5, 0.5], -1.0)


def test_min_entropy():
    assert min_entropy([0.7, 0.2, 0.1]) == pytest.approx(0.356675, abs=1e-6)


def test_smooth_min_entropy_caps_both_masses():
    assert smooth_min_entropy([0.5, 0.5], 0.1) == pytest.approx(0.916291, abs=1e-6)


def test_smooth_min_entropy_without_smoothing():
    assert smooth_min_entropy([0.7, 0.2, 0.1], 0.0) == pytest.approx(min_entropy([0.7, 0.2, 0.1]))


@settings(max_examples=50, deadline=None)
@given(distributions)
def test_renyi_entropy_decreases_in_order(p):
    values = [renyi_entropy(p, t) for t in (-0.5, 0.0, 0.5, 1.0, 3.0)]
    assert all(a >= b - 1e-9 for a, b in zip(values, values[1:]))
    assert values[-1] >= min_entropy(p) - 1e-9


@settings(max_examples=50, deadline=None)
@given(distributions, st.floats(0.0, 0.4))
def test_smooth_min_entropy_dominates_min_entropy(p, epsilon):
    assert smooth_min_entropy(p, epsilon) >= min_entropy(p) - 1e-12


def test_unconditional_input_to_conditional_entropy():
    p = [0.5, 0.25, 0.25]
    for variant in ("lower", "upper"):
        assert cond_renyi(p, 1.0, variant) == pytest.approx(renyi_entropy(p, 1.0))


def test_upper_conditional_dominates_lower():
    joint = np.array([[0.4, 0.1], [0.1, 0.2], [0.1, 0.1]])
    for theta in (0.3, 1.0, 2.0):
        assert cond_renyi(joint, theta, "upper") >= cond_renyi(joint, theta, "lower") - 1e-12
    assert cond_renyi(joint, 0.0, "lower") == pytest.approx(conditional_entropy(joint))


def test_two_parameter_with_equal_orders_is_upper():
    joint = np.array([[0.4, 0.1], [0.1, 0.2], [0.1, 0.1]])
    assert cond_renyi(joint, 0.7, "two_param", theta_prime=0.7) == pytest.approx(
        cond_renyi(joint, 0.7, "upper")
    )


def test_relative_variant_needs_supporting_q():
    joint = np.array([[0.5, 0.2], [0.2, 0.1]])
    with pytest.raises(ValidationError):
        cond_renyi(joint, 1.0, "relative", q_y=[1.0, 0.0])


def test_single_shot_profile_matches_direct_evaluation():
    p = np.array([0.5, 0.25, 0.125, 0.125])
    profile = single_shot_profile(p)
    assert profile.value_at(1.0) == pytest.approx(renyi_entropy(p, 1.0))
    assert profile.entropy_rate == pytest.approx(shannon_entropy(p))


def test_worked_example_rates(worked_example):
    assert renyi_rate(worked_example, 1.0) == pytest.approx(0.2078594, abs=1e-6)
    assert entropy_rate(worked_example) == pytest.approx(0.383523, abs=1e-6)
    assert renyi_rate(worked_example, 0.0) == pytest.approx(entropy_rate(worked_example))


def test_min_entropy_rate_certificate(worked_example):
    certificate = min_entropy_rate(worked_example)
    assert certificate.rate == pytest.approx(-math.log(0.9), abs=1e-9)
    assert certificate.best_cycle == (0, 0)
    assert certificate.path_constant == pytest.approx(0.1)


def test_renyi_rate_decreases_towards_min_entropy_rate(worked_example):
    thetas = [-0.9, -0.5, 0.0, 0.5, 1.0, 5.0, 30.0]
    values = [renyi_rate(worked_example, t) for t in thetas]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
    assert values[-1] >= min_entropy_rate(worked_example).rate - 1e-9


def test_zero_order_rate_of_full_support_chain(worked_example):
    assert zero_order_rate(worked_example) == pytest.approx(math.log(2), abs=1e-3)


def test_iid_rates_match_single_letter_entropies():
    p = [0.6, 0.3, 0.1]
    model = iid_model(p)
    assert entropy_rate(model) == pytest.approx(shannon_entropy(p))
    assert renyi_rate(model, 1.5) == pytest.approx(renyi_entropy(p, 1.5))


def test_binary_closed_form_agrees_with_perron(worked_example):
    closed = binary_closed_form(0.1, 0.2, 1.0)
    assert closed.eigenvalue == pytest.approx(0.8123213, abs=1e-7)
    assert -math.log(closed.eigenvalue) == pytest.approx(renyi_rate(worked_example, 1.0))


def test_delta_lower_reads_first_left_entry(worked_example):
    # initial (1, 0) puts all weight on the first coordinate of the left vector
    closed = binary_closed_form(0.1, 0.2, 1.0)
    terms = correction_terms(worked_example, 1.0)
    assert terms.lower == pytest.approx(-math.log(closed.left_vec[0]), abs=1e-9)
    assert terms.upper >= terms.lower


def test_min_entropy_corrections(worked_example):
    terms = correction_terms(worked_example, kind="delta_inf")
    assert terms.lower == pytest.approx(math.log(0.1))
    assert terms.upper > terms.lower


def test_variance_rate_matches_exact_enumeration_slope(worked_example):
    def variance(n):
        dist = enumerate_paths(worked_example, n)
        mask = dist.probabilities > 0
        p, log_p = dist.probabilities[mask], dist.log_probs[mask]
        return float(np.sum(p * log_p**2) - np.sum(p * log_p) ** 2)

    slope = variance(15) - variance(14)
    assert variance_rate(worked_example) == pytest.approx(slope, rel=0.02)


def test_conditional_entropy_rate_of_strongly_non_hidden_model(a2_model):
    expected = (2 / 3) * shannon_entropy(V_GIVEN_Y[:, 0]) + (1 / 3) * shannon_entropy(V_GIVEN_Y[:, 1])
    assert entropy_rate(a2_model, conditional=True) == pytest.approx(expected, abs=1e-10)


def test_conditional_rate_orderings(a2_model):
    for theta in (0.5, 1.0, 2.0):
        lower = renyi_rate(a2_model, theta, "lower_cond")
        upper = renyi_rate(a2_model, theta, "upper_cond")
        assert upper >= lower - 1e-10
        assert renyi_rate(a2_model, theta, "two_param", theta_prime=theta) == pytest.approx(upper, rel=1e-9)


def test_upper_conditional_needs_a2(a1_model):
    with pytest.raises(ValidationError):
        renyi_rate(a1_model, 1.0, "upper_cond")


def test_profile_reports_entropy_and_variance(worked_example):
    profile = renyi_profile(worked_example)
    assert profile.entropy_rate == pytest.approx(0.383523, abs=1e-6)
    assert profile.variance_rate == pytest.approx(variance_rate(worked_example))
    assert profile.value_at(1.0) == pytest.approx(0.2078594, abs=1e-6)
    assert profile.corrections(1.0).kind == "delta"


def test_cycle_enumeration_is_bounded():
    with pytest.raises(StateSpaceTooLarge):
        min_entropy_rate(iid_model(np.full(11, 1 / 11)))


def test_spectrum_table_lists_supported_variants(a2_model, worked_example):
    table = spectrum_table(a2_model, [0.5, 1.0])
    assert table["variants"] == ["single", "lower_cond", "upper_cond"]
    assert len(table["rows"]) == 2
    plain = spectrum_table(worked_example, [1.0])
    assert plain["rows"][0]["single"] == pytest.approx(0.2078594, abs=1e-6)
    assert plain["summary"]["min_entropy_rate"] == pytest.approx(0.105361, abs=1e-6)
