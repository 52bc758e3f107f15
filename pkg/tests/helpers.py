"""Shared generators for the test suite."""

import random
from fractions import Fraction

from finvariant.counting import HomRep, MicroObservable, weight_of_pair
from finvariant.freegrp import GroupSpec
from finvariant.systems import Bernoulli, FiniteAction, Markov
from finvariant.weights import Weight

HALF = Fraction(1, 2)


def random_pair(rng: random.Random, n, r, k):
    perms = []
    for _ in range(r):
        p = list(range(n))
        rng.shuffle(p)
        perms.append(tuple(p))
    labels = [rng.randrange(k) for _ in range(n)]
    return HomRep(n, tuple(perms)), MicroObservable(tuple(labels), tuple(range(k)))


def random_weight(rng: random.Random, k, r, denom, positive=False):
    """An exact weight with masses in (1/denom)Z, realized by a random (sigma, psi)."""
    while True:
        sigma, psi = random_pair(rng, denom, r, k)
        if not positive or len(set(psi.labels)) == k:
            return weight_of_pair(sigma, psi)


def random_kappa(rng: random.Random, k, denom=60):
    cuts = sorted(rng.randrange(1, denom) for _ in range(k - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [denom])]
    if min(parts) == 0:
        return random_kappa(rng, k, denom)
    return tuple(Fraction(p, denom) for p in parts)


def negative_markov(spec=GroupSpec(2)):
    """Two states, color 1 keeps the symbol and color 2 flips it."""
    W = Weight.from_edges("ab", [[[HALF, 0], [0, HALF]], [[0, HALF], [HALF, 0]]])
    return Markov(W, spec)


def rate_markov(spec=GroupSpec(2)):
    a, b = Fraction(2, 5), Fraction(1, 10)
    W = Weight.from_edges("ab", [[[a, b], [b, a]], [[b, a], [a, b]]])
    return Markov(W, spec)


def asymmetric_markov(spec=GroupSpec(2)):
    """Three states; the two colors have different, non-symmetric edge tables."""
    s, t = Fraction(1, 6), Fraction(1, 12)
    c1 = [[s, s, 0], [0, s, s], [s, 0, s]]
    c2 = [[Fraction(1, 4), t, 0], [0, s, s], [t, t, s]]
    return Markov(Weight.from_edges("abc", [c1, c2]), spec)


def bernoulli_half(spec=GroupSpec(2)):
    return Bernoulli(("a", "b"), (HALF, HALF), spec)


def identity_action(N, spec=GroupSpec(2)):
    ident = tuple(range(N))
    return FiniteAction((ident,) * spec.rank, tuple(range(N)), spec)
