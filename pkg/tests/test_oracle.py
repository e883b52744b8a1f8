from fractions import Fraction

import numpy as np
import pytest

from sparsemud import (
    enumerate_solutions,
    random_bits,
    sample_poissonian,
    sample_regular,
    transmit,
    verify_deterministic_phase,
    z_factor_exact,
    z_factor_oracle,
)

from conftest import make_bits, make_code, make_signal


def test_z_oracle_frozen_values():
    assert z_factor_oracle(2) == Fraction(1, 1)
    assert z_factor_oracle(3) == Fraction(1, 3)
    assert z_factor_oracle(4) == Fraction(1, 7)
    assert z_factor_oracle(10) == Fraction(1, 511)


def test_z_closed_form_matches_oracle_exactly():
    for l in range(2, 17):
        assert z_factor_exact(l) == z_factor_oracle(l)
        assert z_factor_exact(l) == Fraction(2, 2**l) / (1 - Fraction(2, 2**l))


def test_z_oracle_rejects_out_of_range():
    with pytest.raises(ValueError):
        z_factor_oracle(1)
    with pytest.raises(ValueError):
        z_factor_oracle(17)


def test_z3_monte_carlo_spot_check():
    # independent estimate: degenerate length-3 chip, remove one user,
    # P(now extremal) should be 1/3
    rng = np.random.default_rng(5)
    hits = total = 0
    while total < 20_000:
        s = rng.integers(0, 2, size=3) * 2 - 1
        y = s.sum()
        if abs(y) == 3:
            continue
        total += 1
        if abs(y - s[2]) == 2:
            hits += 1
    freq = hits / total
    sigma = (freq * (1 - freq) / total) ** 0.5
    assert abs(freq - 1 / 3) < 4 * sigma + 1e-9


def test_enumeration_hand_instances(hand_code, hand_signal):
    sols = enumerate_solutions(hand_code, hand_signal)
    assert len(sols) == 1
    assert sols.solutions.tolist() == [[1, 1, -1]]

    single = make_code(1, 1, [(0, 0, 1)])
    sols = enumerate_solutions(single, make_signal([1]))
    assert sols.solutions.tolist() == [[1]]

    pair = make_code(2, 1, [(0, 0, 1), (0, 1, 1)])
    sols = enumerate_solutions(pair, make_signal([0]))
    assert sorted(sols.solutions.tolist()) == [[-1, 1], [1, -1]]


def test_enumeration_contains_and_agreement(hand_code, hand_signal):
    sols = enumerate_solutions(hand_code, hand_signal)
    assert sols.contains(make_bits([1, 1, -1]).values)
    assert not sols.contains(make_bits([1, 1, 1]).values)
    assert sols.all_agree(0, 1)
    assert not sols.all_agree(0, -1)


def test_enumeration_rejects_large_k():
    code = sample_regular(25, 1.0, 3.0, seed=1)
    sig = transmit(code, random_bits(25, 2))
    with pytest.raises(ValueError):
        enumerate_solutions(code, sig)


def test_truth_is_always_a_solution():
    rng = np.random.default_rng(31)
    for _ in range(30):
        K = int(rng.integers(4, 15))
        sampler = sample_poissonian if rng.integers(2) else sample_regular
        try:
            code = sampler(K, float(rng.choice([0.5, 1.0, 2.0])),
                           float(rng.choice([2.0, 3.0])),
                           seed=int(rng.integers(1 << 30)))
        except ValueError:
            continue
        bits = random_bits(K, int(rng.integers(1 << 30)))
        sols = enumerate_solutions(code, transmit(code, bits))
        assert sols.contains(bits.values)


def test_verify_passes_on_hand_instances(hand_code, hand_signal):
    rep = verify_deterministic_phase(hand_code, hand_signal, seed=3)
    assert rep.passed
    assert rep.num_solutions == 1
    assert rep.first_violation is None
    assert rep.result.status == "UNIQUE_JO"

    pair = make_code(2, 1, [(0, 0, 1), (0, 1, 1)])
    rep = verify_deterministic_phase(pair, make_signal([0]), seed=4)
    assert rep.passed
    assert rep.num_solutions == 2
    assert rep.result.status == "JO_WITH_GUESSES"


def test_verify_report_dict_shape(hand_code, hand_signal):
    doc = verify_deterministic_phase(hand_code, hand_signal, seed=5).to_dict()
    assert set(doc) == {"passed", "num_solutions", "status", "checks",
                        "first_violation"}
    assert doc["passed"] is True


def test_verify_random_small_instances():
    rng = np.random.default_rng(47)
    for _ in range(60):
        K = int(rng.integers(4, 13))
        sampler = sample_poissonian if rng.integers(2) else sample_regular
        try:
            code = sampler(K, float(rng.choice([0.5, 1.0, 2.0])),
                           float(rng.choice([2.0, 3.0, 4.0])),
                           seed=int(rng.integers(1 << 30)))
        except ValueError:
            continue
        bits = random_bits(K, int(rng.integers(1 << 30)))
        sig = transmit(code, bits)
        rep = verify_deterministic_phase(code, sig, int(rng.integers(1 << 30)))
        assert rep.passed, rep.first_violation
