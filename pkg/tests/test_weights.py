import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from finvariant.errors import SchemaError
from finvariant.weights import (F_of_weight, Weight, d_i, d_star, q_of_weight, round_weight,
                                validate, weight_from_json, weight_to_json, xlogx)
from helpers import HALF, random_weight

Q = Fraction(1, 4)
UNIFORM = Weight.uniform("ab", 2)
IDENT = Weight.from_edges("ab", [[[HALF, 0], [0, HALF]]] * 2)


def test_uniform_validates():
    assert validate(UNIFORM).ok
    assert UNIFORM.vertex == (HALF, HALF)
    assert all(x == Q for tab in UNIFORM.edges for row in tab for x in row)


def test_row_sum_violation_named():
    W = Weight("ab", (HALF, HALF), (((Q, Q), (Fraction(1, 8), Fraction(3, 8))),))
    rep = validate(W)
    assert not rep.ok
    assert any("i=1" in v.constraint and "'b'" in v.constraint for v in rep.violations)


def test_float_weights_use_tolerance():
    W = UNIFORM.to_float()
    assert not W.exact
    bumped = Weight(W.alphabet, W.vertex, (((0.25 + 1e-10, 0.25), (0.25, 0.25)),) * 2)
    assert validate(bumped, tol=1e-8).ok
    assert not validate(bumped, tol=0).ok


def test_d_star_examples():
    assert d_star(UNIFORM, UNIFORM) == 0
    assert d_star(UNIFORM, IDENT) == 2
    d = Fraction(1, 10)
    W1 = Weight.from_edges("ab", [[[Fraction(3, 10), Fraction(1, 5)], [Fraction(1, 5), Fraction(3, 10)]]])
    W2 = Weight.from_edges("ab", [[[Fraction(3, 10) - d, Fraction(1, 5) + d],
                                   [Fraction(1, 5) + d, Fraction(3, 10) - d]]])
    assert d_i(W1, W2, 1) == 4 * d
    with pytest.raises(ValueError):
        d_star(UNIFORM, W1)


def test_d_star_metric():
    rng = random.Random(3)
    for _ in range(200):
        A, B, C = (random_weight(rng, 3, 2, rng.randint(1, 12)) for _ in range(3))
        assert d_star(A, B) == d_star(B, A)
        assert d_star(A, C) <= d_star(A, B) + d_star(B, C)
        assert d_star(A, A) == 0


def test_F_examples():
    one = Weight.from_edges("a", [[[1]], [[1]]])
    assert F_of_weight(one) == 0
    for k in (2, 3, 5):
        for r in (1, 2, 3):
            assert F_of_weight(Weight.uniform(range(k), r)) == pytest.approx(math.log(k), abs=1e-12)
    assert F_of_weight(IDENT) == pytest.approx(-math.log(2), abs=1e-12)


def test_xlogx_zero_branch():
    assert xlogx(0) == 0.0
    assert xlogx(Fraction(0)) == 0.0


def test_F_continuity():
    rng = random.Random(11)
    for _ in range(300):
        W = random_weight(rng, 3, 2, 60, positive=True).to_float()
        k = W.size
        i = rng.randrange(2)
        a, a2 = rng.sample(range(k), 2)
        b, b2 = rng.sample(range(k), 2)
        tab = [list(row) for row in W.edges[i]]
        delta = 2.5e-7
        if min(tab[a][b2], tab[a2][b]) < delta:
            continue
        tab[a][b] += delta
        tab[a][b2] -= delta
        tab[a2][b] -= delta
        tab[a2][b2] += delta
        edges = list(W.edges)
        edges[i] = tuple(map(tuple, tab))
        V = Weight(W.alphabet, W.vertex, tuple(edges))
        assert d_star(W, V) <= 1e-6 + 1e-15
        assert abs(F_of_weight(W) - F_of_weight(V)) <= 1e-4


def test_q_examples():
    assert q_of_weight(IDENT) == 2
    zero_one = Weight.from_edges("ab", [[[1, 0], [0, 0]]])
    assert q_of_weight(zero_one) == 1
    assert q_of_weight(Weight.uniform("ab", 1)) == 4
    s, t = Fraction(1, 6), Fraction(1, 10)
    W = Weight.from_edges("ab", [[[s, HALF - s], [HALF - s, s]], [[t, HALF - t], [HALF - t, t]]])
    assert q_of_weight(W) == 30
    with pytest.raises(ValueError):
        q_of_weight(W.to_float())


def test_round_exact_when_q_divides():
    W = Weight.uniform("ab", 2)
    assert round_weight(W, 8).same_as(W)


def test_round_worked_example():
    W = Weight.from_edges("ab", [[[Fraction(3, 10), Fraction(1, 5)], [Fraction(1, 5), Fraction(3, 10)]]])
    R = round_weight(W, 3)
    t = Fraction(1, 3)
    assert R.edges[0] == ((t, t), (t, 0))
    assert d_star(W, R) == Fraction(3, 5)


def test_round_n1_point_mass():
    rng = random.Random(5)
    W = random_weight(rng, 3, 2, 7)
    R = round_weight(W, 1)
    assert validate(R).ok
    assert sorted(R.vertex) == [0, 0, 1]
    assert d_star(W, R) <= 2 * 9


def test_round_three_symbols_anchor_failure_case():
    # the anchor construction would give a negative anchor entry here
    q = Fraction(1, 4)
    W = Weight.from_edges("abc", [[[0, 0, 0], [0, q, q], [0, q, q]]])
    R = round_weight(W, 2)
    assert validate(R).ok
    assert q_of_weight(R) in (1, 2)
    assert d_star(W, R) <= Fraction(9, 2)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 4), st.integers(1, 3), st.integers(1, 30),
       st.integers(1, 100))
def test_round_properties(seed, k, r, denom, n):
    W = random_weight(random.Random(seed), k, r, denom)
    R = round_weight(W, n)
    assert validate(R).ok
    assert n % q_of_weight(R) == 0
    assert d_star(W, R) <= Fraction(r * k * k, n)


def test_json_roundtrip():
    rng = random.Random(2)
    for _ in range(20):
        W = random_weight(rng, 3, 2, 9)
        assert weight_from_json(weight_to_json(W)).same_as(W)


@pytest.mark.parametrize("doc", [
    {},
    {"alphabet": ["a"], "rank": 0, "edges": {}},
    {"alphabet": ["a", "b"], "rank": 1, "edges": {"1": [[1, 4]] * 3}},
    {"alphabet": ["a", "b"], "rank": 1, "edges": {"1": [[1, 2], [0, 1], [0, 1], [0, 1]]}},
    {"alphabet": ["a", "b"], "rank": 1, "edges": {"1": [[1, 0]] * 4}},
    {"alphabet": ["a", "b"], "rank": 1, "edges": {"1": ["x", 0, 0, 0]}},
])
def test_json_schema_errors(doc):
    with pytest.raises(SchemaError):
        weight_from_json(doc)


def test_json_accepts_strings_and_floats():
    doc = {"alphabet": ["a", "b"], "rank": 1, "edges": {"1": ["1/4", "1/4", "1/4", "1/4"]}}
    assert weight_from_json(doc).exact
    doc["edges"]["1"] = [0.25] * 4
    assert not weight_from_json(doc).exact
