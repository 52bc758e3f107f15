"""Exact expectations over uniformly random homomorphisms into Sym(n).

All counts here are expectations over sigma, computed exactly: either by the
closed-form factorial formula or by enumerating every sigma in Sym(n)^r.
Sampled sigma belong to :mod:`finvariant.montecarlo`.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import BudgetError
from .freegrp import Word
from .systems import System, weight_from_system
from .weights import F_of_weight, Weight, q_of_weight

DEFAULT_BUDGET = 10 ** 7


@dataclass(frozen=True)
class HomRep:
    """A homomorphism G -> Sym(n) given by the images of the generators (0-based)."""

    n: int
    perms: tuple

    def __post_init__(self):
        perms = tuple(tuple(int(v) for v in p) for p in self.perms)
        for p in perms:
            if sorted(p) != list(range(self.n)):
                raise ValueError(f"not a permutation of {self.n} points: {p}")
        object.__setattr__(self, "perms", perms)

    @property
    def rank(self) -> int:
        return len(self.perms)

    @classmethod
    def from_one_line(cls, perms: Sequence[Sequence[int]]) -> "HomRep":
        perms = [[v - 1 for v in p] for p in perms]
        return cls(len(perms[0]) if perms else 0, tuple(map(tuple, perms)))

    def inverse(self, i: int) -> tuple:
        p = self.perms[i - 1]
        q = [0] * self.n
        for x, y in enumerate(p):
            q[y] = x
        return tuple(q)

    def word_perm(self, w: Word) -> list[int]:
        """Images of ``sigma(w)`` as a list; the rightmost letter acts first."""
        res = list(range(self.n))
        for i, s in reversed(w):
            p = self.perms[i - 1] if s > 0 else self.inverse(i)
            res = [p[x] for x in res]
        return res

    def conjugate(self, tau: Sequence[int]) -> "HomRep":
        """``tau sigma tau^-1``."""
        tinv = [0] * self.n
        for x, y in enumerate(tau):
            tinv[y] = x
        return HomRep(self.n, tuple(tuple(tau[p[tinv[j]]] for j in range(self.n))
                                    for p in self.perms))


@dataclass(frozen=True)
class MicroObservable:
    labels: tuple
    alphabet: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        if not set(self.labels) <= set(self.alphabet):
            raise ValueError("labels outside the alphabet")

    @property
    def n(self) -> int:
        return len(self.labels)


def pair_counts(sigma: HomRep, psi: MicroObservable) -> tuple:
    """Integer tables ``#{j : psi(j)=a, psi(sigma(s_i) j)=b}`` per color."""
    if sigma.n != psi.n:
        raise ValueError(f"sigma acts on {sigma.n} points, psi on {psi.n}")
    index = {a: j for j, a in enumerate(psi.alphabet)}
    lab = [index[a] for a in psi.labels]
    k = len(psi.alphabet)
    out = []
    for p in sigma.perms:
        tab = [[0] * k for _ in range(k)]
        for j in range(sigma.n):
            tab[lab[j]][lab[p[j]]] += 1
        out.append(tuple(map(tuple, tab)))
    return tuple(out)


def weight_of_pair(sigma: HomRep, psi: MicroObservable) -> Weight:
    n = sigma.n
    tabs = pair_counts(sigma, psi)
    return Weight.from_edges(psi.alphabet, [[[Fraction(x, n) for x in row] for row in tab]
                                            for tab in tabs])


def _require_exact(W: Weight, what: str):
    if not W.exact:
        raise ValueError(f"{what} needs an exact weight; convert explicitly with "
                         "Weight.to_exact() or round_weight()")


def _counts(W: Weight, n: int):
    """Vertex and edge counts n*W, or ValueError when q_W does not divide n."""
    _require_exact(W, "counting")
    q = q_of_weight(W)
    if n % q:
        raise ValueError(f"q_W = {q} does not divide n = {n}")
    c = [int(x * n) for x in W.vertex]
    X = [[[int(x * n) for x in row] for row in tab] for tab in W.edges]
    return c, X


@lru_cache(maxsize=None)
def _fact(m: int) -> int:
    return math.factorial(m)


def _formula(c: Sequence[int], tabs, n: int) -> Fraction:
    r = len(tabs)
    num = 1
    for x in c:
        num *= _fact(x) ** (2 * r - 1)
    den = _fact(n) ** (r - 1)
    for tab in tabs:
        for row in tab:
            for x in row:
                den *= _fact(x)
    return Fraction(num, den)


def expected_count_exact(W: Weight, n: int) -> Fraction:
    """E #{psi : W_{sigma,psi} = W} for uniform sigma, exactly.

    n!^(1-r) prod_a (nW(a))!^(2r-1) / prod_{i,a,b} (nW(a,b;i))!
    """
    c, X = _counts(W, n)
    return _formula(c, X, n)


def expected_count_log(W: Weight, n: int) -> float:
    c, X = _counts(W, n)
    r = W.rank
    val = (1 - r) * math.lgamma(n + 1)
    val += (2 * r - 1) * sum(math.lgamma(x + 1) for x in c)
    val -= sum(math.lgamma(x + 1) for tab in X for row in tab for x in row)
    return val


def log_fraction(x: Fraction) -> float:
    if x <= 0:
        return -math.inf
    return math.log(x.numerator) - math.log(x.denominator)


# ------------------------------------------------------------- brute force

def _check_budget(n: int, r: int, k: int, budget: int):
    size = math.factorial(n) ** r * k ** n
    if size > budget:
        raise BudgetError(f"brute force over Sym({n})^{r} x A^{n} has {size} pairs > budget {budget}")


@lru_cache(maxsize=32)
def brute_force_histogram(n: int, r: int, k: int) -> Counter:
    """Tally the integer pair tables of every (sigma, psi) in Sym(n)^r x [k]^n."""
    perms = list(itertools.permutations(range(n)))
    hist: Counter = Counter()
    for psi in itertools.product(range(k), repeat=n):
        tables = {}
        for p in perms:
            tab = [[0] * k for _ in range(k)]
            for j in range(n):
                tab[psi[j]][psi[p[j]]] += 1
            tables[p] = tuple(map(tuple, tab))
        for sigma in itertools.product(perms, repeat=r):
            hist[tuple(tables[p] for p in sigma)] += 1
    return hist


def brute_force_expected_count(W: Weight, n: int, budget: int = DEFAULT_BUDGET) -> Fraction:
    _require_exact(W, "brute force")
    r, k = W.rank, W.size
    _check_budget(n, r, k, budget)
    X = [[x * n for x in row] for tab in W.edges for row in tab]
    if any(x.denominator != 1 for row in X for x in row):
        return Fraction(0)
    key = tuple(tuple(tuple(int(x * n) for x in row) for row in tab) for tab in W.edges)
    return Fraction(brute_force_histogram(n, r, k).get(key, 0), math.factorial(n) ** r)


def brute_force_eps_count(W_target: Weight, n: int, eps, budget: int = DEFAULT_BUDGET) -> Fraction:
    """E #{psi : d_*(W_target, W_{sigma,psi}) <= eps} by full enumeration."""
    _require_exact(W_target, "brute force")
    eps = as_epsilon(eps)
    r, k = W_target.rank, W_target.size
    _check_budget(n, r, k, budget)
    T = [[[x * n for x in row] for row in tab] for tab in W_target.edges]
    limit = eps * n
    total = 0
    for key, m in brute_force_histogram(n, r, k).items():
        dist = sum(abs(key[i][a][b] - T[i][a][b])
                   for i in range(r) for a in range(k) for b in range(k))
        if dist <= limit:
            total += m
    return Fraction(total, math.factorial(n) ** r)


# ---------------------------------------------------------- lattice search

def as_epsilon(eps) -> Fraction:
    if isinstance(eps, float):
        raise TypeError("epsilon must be exact: pass a Fraction, an int or a 'p/q' string")
    eps = Fraction(eps)
    if eps < 0:
        raise ValueError("epsilon must be >= 0")
    return eps


class _Counter:
    def __init__(self, budget):
        self.budget = budget
        self.nodes = 0

    def tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetError(f"lattice enumeration exceeded budget of {self.budget} nodes")


def _compositions(n, tv, limit, r, ctr):
    """Vertex count vectors c (sum n) with r * sum|c - tv| <= limit."""
    k = len(tv)
    c = [0] * k

    def rec(j, left, cost):
        ctr.tick()
        if j == k - 1:
            c[j] = left
            if cost + r * abs(left - tv[j]) <= limit:
                yield list(c)
            return
        for v in range(left + 1):
            step = cost + r * abs(v - tv[j])
            if step > limit:
                if v > tv[j]:
                    break
                continue
            c[j] = v
            yield from rec(j + 1, left - v, step)

    yield from rec(0, n, Fraction(0))


def _tables(c, T, limit, ctr):
    """Nonnegative integer tables with row and column sums c, l1 cost to T at most limit."""
    k = len(c)
    X = [[0] * k for _ in range(k)]
    colrem = list(c)

    def rec(a, b, rowrem, cost):
        ctr.tick()
        if a == k - 1:
            extra = sum(abs(colrem[j] - T[a][j]) for j in range(k))
            if cost + extra <= limit:
                X[a] = list(colrem)
                yield tuple(map(tuple, X)), cost + extra
            return
        if b == k - 1:
            v = rowrem
            if v > colrem[b]:
                return
            step = cost + abs(v - T[a][b])
            if step > limit:
                return
            X[a][b] = v
            colrem[b] -= v
            yield from rec(a + 1, 0, c[a + 1], step)
            colrem[b] += v
            return
        room = sum(colrem[b + 1:])
        lo = max(0, rowrem - room)
        for v in range(lo, min(rowrem, colrem[b]) + 1):
            step = cost + abs(v - T[a][b])
            if step > limit:
                if v > T[a][b]:
                    break
                continue
            X[a][b] = v
            colrem[b] -= v
            yield from rec(a, b + 1, rowrem - v, step)
            colrem[b] += v

    yield from rec(0, 0, c[0], Fraction(0))


def _lattice_raw(nearby: Weight, n: int, eps: Fraction, budget: int):
    """Yield (vertex counts, color tables) for every lattice weight within eps."""
    _require_exact(nearby, "lattice enumeration")
    r = nearby.rank
    tv = [x * n for x in nearby.vertex]
    T = [[[x * n for x in row] for row in tab] for tab in nearby.edges]
    limit = eps * n
    ctr = _Counter(budget)
    for c in _compositions(n, tv, limit, r, ctr):
        floor = sum(abs(x - t) for x, t in zip(c, tv))
        per_color = []
        for i in range(r):
            # every other color costs at least the vertex discrepancy
            cap = limit - (r - 1) * floor
            per_color.append(sorted(_tables(c, T[i], cap, ctr), key=lambda t: t[1]))
        if any(not lst for lst in per_color):
            continue

        def combine(i, chosen, cost):
            if i == r:
                yield tuple(chosen)
                return
            rest = (r - i - 1) * floor
            for tab, tc in per_color[i]:
                if cost + tc + rest > limit:
                    break
                ctr.tick()
                yield from combine(i + 1, chosen + [tab], cost + tc)

        for tabs in combine(0, [], Fraction(0)):
            yield c, tabs


def lattice_weights(nearby: Weight, n: int, eps, budget: int = DEFAULT_BUDGET) -> Iterator[Weight]:
    """Every weight with masses in (1/n)Z and d_*(nearby, .) <= eps, each once."""
    eps = as_epsilon(eps)
    for _, tabs in _lattice_raw(nearby, n, eps, budget):
        yield Weight.from_edges(nearby.alphabet,
                                [[[Fraction(x, n) for x in row] for row in tab] for tab in tabs])


def all_lattice_weights(alphabet: Sequence, rank: int, n: int,
                        budget: int = DEFAULT_BUDGET) -> Iterator[Weight]:
    """Every valid weight on the level-n lattice (d_* never exceeds 2r)."""
    return lattice_weights(Weight.uniform(alphabet, rank), n, 2 * rank, budget)


def expected_eps_count_exact(W_target: Weight, n: int, eps, budget: int = DEFAULT_BUDGET) -> Fraction:
    """E #{psi : d_*(W_target, W_{sigma,psi}) <= eps}, summed over lattice weights."""
    eps = as_epsilon(eps)
    total = Fraction(0)
    for c, tabs in _lattice_raw(W_target, n, eps, budget):
        total += _formula(c, tabs, n)
    return total


@dataclass
class RatePoint:
    n: int
    count: Fraction
    log_count: float
    rate: float
    F_target: float


def rate_curve(sys: System, eps, n_list: Sequence[int], budget: int = DEFAULT_BUDGET) -> list[RatePoint]:
    """(1/n) log E #{psi : d*(phi, psi) <= eps} for each n, with F(T, phi) as reference."""
    eps = as_epsilon(eps)
    if not sys.exact:
        raise ValueError("rate_curve needs an exact system (fractions in the input)")
    W = weight_from_system(sys, exact=True)
    F = F_of_weight(W)
    out = []
    for n in n_list:
        cnt = expected_eps_count_exact(W, n, eps, budget)
        lc = log_fraction(cnt)
        out.append(RatePoint(n, cnt, lc, lc / n, F))
    return out


# --------------------------------------------------------------- Stirling

_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _stirling_gap(m: int) -> tuple[float, float]:
    """Bounds on log m! - (m log m - m)."""
    if m == 0:
        return 0.0, 0.0
    if m == 1:
        return 1.0, 1.0
    return _HALF_LOG_2PI + 0.5 * math.log(m), 1.0 + 0.5 * math.log(m)


def stirling_sandwich(W: Weight, n: int) -> tuple[float, float]:
    """Rigorous (lo, hi) around log expected_count_exact(W, n).

    log E = n F(W) + (1-r) g(n) + (2r-1) sum_a g(nW(a)) - sum g(nW(a,b;i)),
    with g(m) = log m! - m log m + m bracketed by
    sqrt(2 pi m)(m/e)^m <= m! <= e sqrt(m)(m/e)^m.
    """
    c, X = _counts(W, n)
    r = W.rank
    terms = [(1 - r, n)] + [(2 * r - 1, x) for x in c]
    terms += [(-1, x) for tab in X for row in tab for x in row]
    lo = hi = n * F_of_weight(W)
    for coef, m in terms:
        g_lo, g_hi = _stirling_gap(m)
        if coef >= 0:
            lo += coef * g_lo
            hi += coef * g_hi
        else:
            lo += coef * g_hi
            hi += coef * g_lo
    # floating-point guard only; the bracket itself is exact
    pad = 1e-12 * (1 + abs(lo) + abs(hi) + n)
    return lo - pad, hi + pad


__all__ = [
    "HomRep", "MicroObservable", "pair_counts", "weight_of_pair", "expected_count_exact",
    "expected_count_log", "brute_force_expected_count", "brute_force_eps_count",
    "brute_force_histogram", "lattice_weights", "all_lattice_weights",
    "expected_eps_count_exact", "rate_curve", "RatePoint", "stirling_sandwich",
    "weight_from_system", "as_epsilon", "log_fraction", "DEFAULT_BUDGET",
]
