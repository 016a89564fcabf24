import copy
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repdim import errors
from repdim.core import (
    AffineContraction,
    as_matrix,
    build_transition_matrix,
    compose_inverse,
    count_words,
    cylinder,
    enumerate_words,
    is_admissible,
    iter_words,
    parse_number,
    validate_system,
)
from repdim.jsonio import system_to_dict

GOLDEN = [[1, 1], [1, 0]]


def takagi_spec():
    return {
        "d": 1,
        "k": 1,
        "branches": [
            {
                "cell": [["0", "1/2"]],
                "base": {"ratio": "2", "orth": [["1"]], "shift": ["0"]},
                "fiber": {"ratio": "4/3", "orth": [["1"]], "coupling": [["-4/3"]], "shift": ["0"]},
            },
            {
                "cell": [["1/2", "1"]],
                "base": {"ratio": "2", "orth": [["1"]], "shift": ["-1"]},
                "fiber": {"ratio": "4/3", "orth": [["1"]], "coupling": [["4/3"]], "shift": ["-4/3"]},
            },
        ],
    }


# ---------------------------------------------------------------- validation


def test_classic_spec_is_markov():
    S = validate_system(takagi_spec())
    assert S.markov
    assert S.size == 2
    np.testing.assert_array_equal(as_matrix(build_transition_matrix(S)), np.ones((2, 2)))


def test_builder_and_json_agree(takagi):
    assert system_to_dict(validate_system(takagi_spec()))["branches"] == system_to_dict(takagi)["branches"]


def test_single_branch_rejected():
    spec = takagi_spec()
    spec["branches"] = spec["branches"][:1]
    spec["branches"][0]["cell"] = [["0", "1"]]
    with pytest.raises(errors.AlphabetTooSmall):
        validate_system(spec)


def test_domination_violated():
    spec = takagi_spec()
    for b in spec["branches"]:
        b["fiber"]["ratio"] = "5/2"
    with pytest.raises(errors.DominationViolated):
        validate_system(spec)


def test_not_expanding():
    spec = takagi_spec()
    spec["branches"][0]["fiber"]["ratio"] = "1"
    with pytest.raises(errors.NotExpanding):
        validate_system(spec)


def test_partition_gap_and_overlap():
    gap = takagi_spec()
    gap["branches"][1]["cell"] = [["3/5", "1"]]
    gap["branches"][1]["base"]["shift"] = ["-1"]
    with pytest.raises(errors.PartitionGap):
        validate_system(gap)
    over = takagi_spec()
    over["branches"][0]["cell"] = [["0", "3/5"]]
    with pytest.raises(errors.PartitionOverlap):
        validate_system(over)


def test_image_escapes():
    spec = takagi_spec()
    spec["branches"][0]["base"]["shift"] = ["1/4"]
    with pytest.raises(errors.ImageEscapes):
        validate_system(spec)


def test_non_orthogonal_rejected():
    spec = takagi_spec()
    spec["branches"][0]["fiber"]["orth"] = [["2"]]
    with pytest.raises(errors.ValidationError):
        validate_system(spec)


def test_malformed_input():
    with pytest.raises(errors.MalformedSystem):
        validate_system({"d": 1})
    spec = takagi_spec()
    spec["branches"][0]["base"]["ratio"] = "two"
    with pytest.raises(errors.ValidationError):
        validate_system(spec)


def test_parse_number_keeps_rationals():
    assert parse_number("3/2") == F(3, 2) and isinstance(parse_number("3/2"), F)
    assert isinstance(parse_number(0.75), float)
    assert parse_number(2) == F(2)


# ---------------------------------------------------------------- transition matrices


def test_t1_transition_matrix(t1):
    np.testing.assert_array_equal(as_matrix(build_transition_matrix(t1)), [[1, 1, 0], [1, 1, 1], [0, 1, 1]])


def test_non_integer_beta_not_markov(beta32):
    assert not beta32.markov
    with pytest.raises(errors.NotMarkov):
        build_transition_matrix(beta32)


def test_float_endpoints_snap():
    spec = takagi_spec()
    spec["branches"][0]["cell"] = [[0.0, 0.5 + 1e-12]]
    spec["branches"][1]["cell"] = [[0.5 + 1e-12, 1.0]]
    S = validate_system(spec)
    assert S.markov


# ---------------------------------------------------------------- words


def test_full_shift_words():
    assert len(enumerate_words(np.ones((2, 2)), 3)) == 8


def test_golden_mean_words():
    assert enumerate_words(GOLDEN, 3) == [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 0, 1)]


def test_length_one_words():
    Q = [[0, 1, 0], [0, 0, 0], [0, 0, 0]]
    assert enumerate_words(Q, 1) == [(0,), (1,)]


def test_word_budget(monkeypatch):
    monkeypatch.setenv("REPDIM_WORD_BUDGET", "100")
    with pytest.raises(errors.BudgetExceeded):
        enumerate_words(np.ones((2, 2)), 7)
    assert len(enumerate_words(np.ones((2, 2)), 6)) == 64


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=9, max_size=9), st.integers(1, 7))
def test_word_counts(entries, n):
    Q = np.array(entries).reshape(3, 3)
    words = list(iter_words(Q, n))
    assert len(words) == count_words(Q, n)
    assert all(is_admissible(Q, w) for w in words)
    assert words == sorted(words)
    if n > 1:
        one = np.ones(3, dtype=object)
        expected = one @ np.linalg.matrix_power(Q.astype(object), n - 1) @ one
        assert count_words(Q, n) == expected
        assert count_words(Q, n) <= 3 * count_words(Q, n - 1)


# ---------------------------------------------------------------- inverse branches


def test_compose_single(takagi):
    f = compose_inverse(takagi, (0,))
    np.testing.assert_allclose(f.linear, [[0.5, 0], [0.5, 0.75]], atol=1e-15)
    np.testing.assert_allclose(f.shift, [0, 0], atol=1e-15)


def test_compose_pair(takagi):
    f = compose_inverse(takagi, (0, 1))
    np.testing.assert_allclose(f.linear, [[0.25, 0], [-0.125, 0.5625]], atol=1e-15)
    np.testing.assert_allclose(f.shift, [0.25, 0.625], atol=1e-15)


def test_empty_word_identity(takagi):
    assert compose_inverse(takagi, ()).allclose(AffineContraction.identity(1, 1))


def test_inadmissible_word(t1):
    with pytest.raises(errors.EmptyCylinder):
        compose_inverse(t1, (0, 2))


def test_cylinder_boxes(takagi, beta32):
    assert cylinder(takagi, (0, 1)) == ((F(1, 4), F(1, 2)),)
    # [1/2, 2/3] maps onto [3/4, 1], which misses the first cell
    assert cylinder(beta32, (1, 0)) is None


def _random_word(rng, Q, n):
    Q = as_matrix(Q)
    w = [int(rng.integers(Q.shape[0]))]
    while len(w) < n:
        nxt = np.flatnonzero(Q[w[-1]])
        if nxt.size == 0:
            return None
        w.append(int(rng.choice(nxt)))
    return tuple(w)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6), st.integers(1, 6))
def test_composition_invariants(t1, seed, a, b):
    rng = np.random.default_rng(seed)
    Q = build_transition_matrix(t1)
    w = _random_word(rng, Q, a + b)
    i, j = w[:a], w[a:]
    fij = compose_inverse(t1, w)
    assert fij.allclose(compose_inverse(t1, i) @ compose_inverse(t1, j), atol=1e-10)
    L = fij.linear
    assert np.all(L[:1, 1:] == 0)
    assert np.linalg.norm(fij.base_block, 2) < np.linalg.norm(fij.fiber_block, 2)
    assert np.linalg.norm(fij.fiber_block, 2) < 1


def test_systems_are_immutable(takagi):
    clone = copy.deepcopy(takagi)
    assert clone == takagi
    with pytest.raises(Exception):
        takagi.d = 3
