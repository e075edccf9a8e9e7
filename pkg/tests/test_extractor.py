import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markov_urng.bounds import BoundQuery, single_shot_bound, urng_markov_bound
from markov_urng.errors import LengthMismatch, ValidationError
from markov_urng.extractor import (
    DistanceEstimate,
    ToeplitzSpec,
    exact_delta,
    extract_stream,
    hash_bits,
    hash_blocks,
    mc_delta,
    pack_bits,
    read_bits,
    write_bits,
)
from markov_urng.markov_core import iid_model
from markov_urng.oracle import enumerate_paths


def all_inputs(n):
    return (np.arange(2**n)[:, None] >> np.arange(n)) & 1


def test_matrix_follows_seed_diagonals():
    rng = np.random.default_rng(11)
    spec = ToeplitzSpec.random(7, 3, rng)
    T = spec.matrix
    assert T.shape == (3, 7)
    for i in range(3):
        for j in range(7):
            assert T[i, j] == spec.seed[i + 6 - j]


def test_single_and_batched_hashing_agree():
    spec = ToeplitzSpec.random(12, 5, np.random.default_rng(3))
    blocks = np.random.default_rng(4).integers(0, 2, size=(20, 12))
    batched = hash_blocks(spec, blocks)
    for row, out in zip(blocks, batched):
        assert np.array_equal(hash_bits(spec, row), out)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**14 - 1), st.integers(0, 2**10 - 1), st.integers(0, 2**10 - 1))
def test_hash_is_linear_over_gf2(seed_index, a, b):
    spec = ToeplitzSpec.from_index(10, 5, seed_index)
    x = (a >> np.arange(10)) & 1
    y = (b >> np.arange(10)) & 1
    assert np.array_equal(hash_bits(spec, x ^ y), hash_bits(spec, x) ^ hash_bits(spec, y))


def test_family_is_two_universal():
    n, m = 4, 2
    inputs = all_inputs(n)
    outputs = np.stack(
        [hash_blocks(ToeplitzSpec.from_index(n, m, s), inputs) for s in range(2 ** (n + m - 1))]
    )
    for x in range(2**n):
        for x_prime in range(x + 1, 2**n):
            collisions = np.all(outputs[:, x] == outputs[:, x_prime], axis=1).sum()
            assert collisions == 2 ** (n + m - 1) // 2**m


def test_seed_hex_keeps_only_needed_bits():
    spec = ToeplitzSpec.from_hex(16, 4, "9a3f0c")
    assert spec.seed.size == 19
    assert spec.seed_hex == "9a3f04"


def test_short_seed_is_rejected():
    with pytest.raises(LengthMismatch):
        ToeplitzSpec.from_hex(16, 4, "9a3f")
    with pytest.raises(LengthMismatch):
        ToeplitzSpec(4, 2, [0, 1, 0])
    with pytest.raises(ValidationError):
        ToeplitzSpec.from_hex(4, 2, "zz")
    with pytest.raises(ValidationError):
        ToeplitzSpec(4, 5, np.zeros(8))


def test_input_length_must_match():
    spec = ToeplitzSpec.from_index(4, 2, 8)
    with pytest.raises(LengthMismatch):
        hash_bits(spec, [1, 0, 1])
    with pytest.raises(LengthMismatch):
        hash_blocks(spec, np.zeros((3, 5)))


def test_full_rank_matrix_keeps_fair_coins_uniform(fair_coin):
    # seed bit 3 alone gives T = [[1, 0, 0, 0], [0, 1, 0, 0]]
    spec = ToeplitzSpec.from_index(4, 2, 8)
    assert exact_delta(fair_coin, 4, spec).value == pytest.approx(0.0)
    constant = ToeplitzSpec.from_index(4, 2, 0)
    assert exact_delta(fair_coin, 4, constant).value == pytest.approx(0.75)


def test_function_table(fair_coin):
    parity = [bin(x).count("1") & 1 for x in range(16)]
    assert exact_delta(fair_coin, 4, table=parity).value == pytest.approx(0.0)
    with pytest.raises(LengthMismatch):
        exact_delta(fair_coin, 4, table=[0, 1])


def test_family_average_on_fair_coins(fair_coin):
    result = exact_delta(fair_coin, 4, ToeplitzSpec.from_index(4, 1, 0), mode="family_average")
    assert result.value == pytest.approx(1 / 32)
    assert result.member_range == pytest.approx((0.0, 0.5))
    assert result.method == "family_exact"


def test_family_average_respects_single_shot_upper_bounds(biased_coin):
    n = 6
    result = exact_delta(biased_coin, n, ToeplitzSpec.from_index(n, 1, 0), mode="family_average")
    dist = enumerate_paths(biased_coin, n).probabilities
    for kind in ("exp_ach", "leftover_loose"):
        assert result.value <= single_shot_bound(dist, 2, kind).value + 1e-12


def test_family_average_respects_markov_direct_bound(worked_example):
    n = 6
    result = exact_delta(worked_example, n, ToeplitzSpec.from_index(n, 1, 0), mode="family_average")
    report = urng_markov_bound(worked_example, BoundQuery(n=n, log_m=math.log(2)))
    assert result.value <= math.exp(-report.value) + 1e-12


def test_side_information_distance(a2_model):
    spec = ToeplitzSpec.from_index(4, 1, 0b1000)
    plain = exact_delta(a2_model, 4, spec)
    joint = exact_delta(a2_model, 4, spec, side_info=True)
    assert joint.value >= plain.value - 1e-12
    with pytest.raises(ValidationError):
        exact_delta(iid_model([0.5, 0.5]), 4, spec, side_info=True)


def test_non_binary_alphabet_needs_power_of_two():
    model = iid_model([0.5, 0.3, 0.2])
    with pytest.raises(ValidationError):
        exact_delta(model, 3, ToeplitzSpec.from_index(3, 1, 0))


def test_quaternary_symbols_expand_to_two_bits():
    model = iid_model([0.25, 0.25, 0.25, 0.25])
    spec = ToeplitzSpec.from_index(6, 2, 0b0100000)
    assert exact_delta(model, 3, spec).value == pytest.approx(0.0)


def test_monte_carlo_estimate_is_not_rigorous(fair_coin):
    spec = ToeplitzSpec.from_index(8, 2, 0b101010101)
    result = mc_delta(fair_coin, 8, spec, samples=20_000, seed=5)
    assert result.value < 0.05
    assert not result.rigorous
    assert result.ci95 is not None and result.ci95 >= 0
    with pytest.raises(ValidationError):
        mc_delta(fair_coin, 8, spec, samples=10)


def test_extract_raw_bits():
    spec = ToeplitzSpec.from_hex(16, 4, "9a3f0c")
    raw = np.random.default_rng(2).integers(0, 2, size=64).astype(np.uint8)
    result = extract_stream(raw, 16, 4, spec)
    assert result.blocks == 4
    assert np.array_equal(result.bits, hash_blocks(spec, raw.reshape(-1, 16)).ravel())
    assert result.bound is None
    assert result.summary()["output_bits"] == 16


def test_raw_bits_must_fill_whole_blocks():
    spec = ToeplitzSpec.from_index(16, 4, 1)
    with pytest.raises(LengthMismatch):
        extract_stream(np.zeros(20, dtype=np.uint8), 16, 4, spec)


def test_audit_needs_a_model():
    spec = ToeplitzSpec.from_index(16, 4, 1)
    with pytest.raises(ValidationError):
        extract_stream(np.zeros(32, dtype=np.uint8), 16, 4, spec, audit="exact")


def test_extract_from_model_attaches_bound_and_audit(worked_example):
    spec = ToeplitzSpec.from_index(8, 1, 0b10000000)
    result = extract_stream(worked_example, 8, 1, spec, blocks=50, audit="exact", sample_seed=1)
    assert result.bits.size == 50
    assert result.bound is not None
    assert result.bound.theorem == "ach"
    assert result.audit.method == "exact_enumeration"
    summary = result.summary()
    assert summary["bound"]["theorem"] == "ach"
    assert summary["audit"]["rigorous"] is True


def test_model_extraction_is_reproducible(worked_example):
    spec = ToeplitzSpec.from_index(8, 2, 77)
    first = extract_stream(worked_example, 8, 2, spec, blocks=20, sample_seed=9)
    second = extract_stream(worked_example, 8, 2, spec, blocks=20, sample_seed=9)
    assert np.array_equal(first.bits, second.bits)


def test_bit_files_are_little_endian(tmp_path):
    bits = np.array([1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0], dtype=np.uint8)
    assert pack_bits(bits) == b"\x01\x02"
    path = tmp_path / "bits.bin"
    write_bits(path, bits)
    assert np.array_equal(read_bits(path), bits)


@pytest.mark.slow
def test_full_family_average_stays_below_achievability(worked_example):
    n, m = 10, 3
    result = exact_delta(worked_example, n, ToeplitzSpec.from_index(n, m, 0), mode="family_average")
    dist = enumerate_paths(worked_example, n).probabilities
    assert result.value <= single_shot_bound(dist, 2**m, "exp_ach").value + 1e-12
    report = urng_markov_bound(worked_example, BoundQuery(n=n, log_m=m * math.log(2)))
    assert result.value <= math.exp(-report.value) + 1e-12


def test_estimate_methods_are_checked():
    with pytest.raises(ValidationError):
        DistanceEstimate(value=0.1, method="guess")
    with pytest.raises(ValidationError):
        DistanceEstimate(value=0.1, method="monte_carlo")
    assert DistanceEstimate(value=0.1, method="monte_carlo", rigorous=False).to_dict()["rigorous"] is False
