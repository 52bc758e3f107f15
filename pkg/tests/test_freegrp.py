import pytest
from hypothesis import given, settings, strategies as st

from finvariant import freegrp as fg
from finvariant.freegrp import E, GroupSpec

G2 = GroupSpec(2)
G1 = GroupSpec(1)
S1, S1i, S2, S2i = ((1, 1),), ((1, -1),), ((2, 1),), ((2, -1),)


def raw_letters(rank):
    return st.lists(st.tuples(st.integers(1, rank), st.sampled_from([1, -1])), max_size=12)


def test_reduce_examples():
    assert fg.reduce([], G2) == E
    assert fg.reduce([(1, 1), (1, -1)], G2) == E
    assert fg.reduce([(1, 1), (2, 1), (2, -1), (1, 1)], G2) == S1 + S1


def test_reduce_rejects_bad_letters():
    with pytest.raises(ValueError):
        fg.reduce([(3, 1)], G2)
    with pytest.raises(ValueError):
        fg.reduce([(1, -1)], GroupSpec(2, "semigroup"))


@given(raw_letters(3))
def test_reduce_idempotent_and_shortening(letters):
    g = GroupSpec(3)
    w = fg.reduce(letters, g)
    assert fg.reduce(w, g) == w
    assert len(w) <= len(letters)
    assert all(w[k] != (w[k + 1][0], -w[k + 1][1]) for k in range(len(w) - 1))


@given(raw_letters(2), raw_letters(2))
def test_multiply_inverse(a, b):
    u, v = fg.reduce(a, G2), fg.reduce(b, G2)
    assert fg.multiply(u, fg.inverse(u, G2), G2) == E
    assert fg.multiply(fg.multiply(u, v, G2), fg.inverse(v, G2), G2) == u


def test_ball_examples():
    assert fg.ball(G2, 0) == [E]
    assert len(fg.ball(G2, 1)) == 5
    assert len(fg.ball(G2, 2)) == 17


@pytest.mark.parametrize("kind", ["group", "semigroup"])
@pytest.mark.parametrize("r", [1, 2, 3])
def test_ball_sizes_and_nesting(kind, r):
    g = GroupSpec(r, kind)
    prev = set()
    for m in range(7):
        b = fg.ball(g, m)
        assert len(b) == len(set(b)) == fg.ball_size(g, m)
        assert prev <= set(b)
        assert all(fg.reduce(w, g) == w for w in b)
        prev = set(b)


def test_ball_is_sorted():
    b = fg.ball(G2, 2)
    assert b == sorted(b, key=fg.word_key)
    assert b[:5] == [E, S1, S1i, S2, S2i]


def test_semigroup_ball_positive():
    g = GroupSpec(2, "semigroup")
    assert all(s > 0 for w in fg.ball(g, 3) for _, s in w)


def test_hull_examples():
    h = fg.hull(G2, [E])
    assert h.vertices == {E} and not h.edges
    h = fg.hull(G2, [S1 + S2])
    assert h.vertices == {E, S1, S1 + S2} and len(h.edges) == 2
    B = fg.ball(G2, 1)
    h = fg.hull(G2, set(B) | fg.right_translate(B, S1, G2))
    assert len(h.vertices) == 8 and len(h.edges) == 7


@pytest.mark.parametrize("side", ["prefix", "suffix"])
@given(st.lists(raw_letters(2), min_size=1, max_size=5))
def test_hull_is_tree(side, raw):
    S = [fg.reduce(x, G2) for x in raw]
    h = fg.hull(G2, S, side)
    assert set(S) <= h.vertices and E in h.vertices
    assert len(h.edges) == len(h.vertices) - 1
    for v in h.vertices:
        for k in range(len(v)):
            assert (v[:k] if side == "prefix" else v[len(v) - k:]) in h.vertices
    for v, i in h.edges:
        assert v in h.vertices and h.head(v, i, G2) in h.vertices


def test_right_translate_examples():
    assert fg.right_translate([E], S1, G2) == {S1}
    assert fg.right_translate(fg.ball(G1, 1), S1, G1) == {E, S1, S1 + S1}
    t = fg.right_translate(fg.ball(G2, 1), S1, G2)
    assert len(t) == 5 and E in t and S1 + S1 in t


def test_endomorphism_examples():
    w = S1 + S2
    assert fg.apply_endomorphism(w, [S1, S2], G2) == w
    assert fg.apply_endomorphism(w, [S2, S1], G2) == S2 + S1
    assert fg.apply_endomorphism(S1 + S1, [S1i], G1) == S1i + S1i


def test_inverse_check():
    assert fg.check_inverse_images([S2, S1], [S2, S1], G2)
    assert fg.check_inverse_images([S1 + S2, S2], [S1 + S2i, S2], G2)
    assert not fg.check_inverse_images([S1 + S2, S2], [S1, S2], G2)


def test_parse_format_roundtrip():
    for w in fg.ball(G2, 3):
        assert fg.parse_word(fg.format_word(w), G2) == w
    assert fg.parse_word("s1*s1", G2) == S1 + S1
    assert fg.parse_word("s2^-2", G2) == S2i + S2i
    assert fg.parse_word("e", G2) == E
    with pytest.raises(ValueError):
        fg.parse_word("t1", G2)
