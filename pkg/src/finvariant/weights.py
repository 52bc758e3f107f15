"""Weights on the colored graph with vertex set A and edges (a, b; i).

A weight assigns a mass to every symbol and to every colored directed edge so
that, for each color, the edge table has row sums and column sums equal to
the vertex masses.  Masses are either all exact (``Fraction``) or all floats;
``Weight.to_float`` and ``Weight.to_exact`` convert explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Any, Sequence

import numpy as np

from .errors import SchemaError


def _is_exact(x) -> bool:
    return isinstance(x, Rational)


def as_mass(x):
    """Coerce a JSON-ish mass (``[num, den]``, ``"p/q"``, int, float) to a number."""
    if isinstance(x, bool):
        raise SchemaError(f"bad mass {x!r}")
    if isinstance(x, (list, tuple)):
        if len(x) != 2 or not all(isinstance(t, int) and not isinstance(t, bool) for t in x):
            raise SchemaError(f"fraction must be [num, den] integers, got {x!r}")
        if x[1] == 0:
            raise SchemaError("zero denominator")
        return Fraction(x[0], x[1])
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"bad fraction string {x!r}") from exc
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        return x
    raise SchemaError(f"bad mass {x!r}")


def xlogx(x) -> float:
    if x == 0:
        return 0.0
    return float(x) * math.log(x)


@dataclass(frozen=True, eq=False)
class Weight:
    alphabet: tuple
    vertex: tuple
    edges: tuple  # edges[i][a][b], color i is 0-based here
    exact: bool = field(init=False)

    def __post_init__(self):
        k = len(self.alphabet)
        if k == 0:
            raise ValueError("empty alphabet")
        if len(set(self.alphabet)) != k:
            raise ValueError("alphabet symbols must be distinct")
        if len(self.vertex) != k or not self.edges:
            raise ValueError("shape mismatch")
        for tab in self.edges:
            if len(tab) != k or any(len(row) != k for row in tab):
                raise ValueError("edge tables must be |A| x |A|")
        flat = list(self.vertex) + [x for tab in self.edges for row in tab for x in row]
        ex = [_is_exact(x) for x in flat]
        if all(ex):
            object.__setattr__(self, "vertex", tuple(Fraction(x) for x in self.vertex))
            object.__setattr__(self, "edges", tuple(
                tuple(tuple(Fraction(x) for x in row) for row in tab) for tab in self.edges))
            object.__setattr__(self, "exact", True)
        else:
            object.__setattr__(self, "vertex", tuple(float(x) for x in self.vertex))
            object.__setattr__(self, "edges", tuple(
                tuple(tuple(float(x) for x in row) for row in tab) for tab in self.edges))
            object.__setattr__(self, "exact", False)

    @classmethod
    def from_edges(cls, alphabet: Sequence, edges: Sequence) -> "Weight":
        """Build a weight whose vertex masses are the row sums of the first color."""
        alphabet = tuple(alphabet)
        edges = tuple(tuple(tuple(row) for row in tab) for tab in edges)
        vertex = tuple(sum(row) for row in edges[0])
        return cls(alphabet, vertex, edges)

    @classmethod
    def uniform(cls, alphabet: Sequence, rank: int) -> "Weight":
        k = len(alphabet)
        e = Fraction(1, k * k)
        return cls.from_edges(alphabet, [[[e] * k for _ in range(k)] for _ in range(rank)])

    @property
    def rank(self) -> int:
        return len(self.edges)

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def mass(self, a, b, i: int):
        """Edge mass W(a, b; i) with a 1-based color ``i``."""
        ia, ib = self.alphabet.index(a), self.alphabet.index(b)
        return self.edges[i - 1][ia][ib]

    @cached_property
    def edge_array(self) -> np.ndarray:
        return np.array([[[float(x) for x in row] for row in tab] for tab in self.edges])

    @cached_property
    def vertex_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.vertex])

    def key(self) -> tuple:
        return (self.alphabet, self.vertex, self.edges)

    def same_as(self, other: "Weight") -> bool:
        return self.key() == other.key()

    def to_float(self) -> "Weight":
        return Weight(self.alphabet, tuple(map(float, self.vertex)),
                      tuple(tuple(tuple(map(float, row)) for row in tab) for tab in self.edges))

    def to_exact(self) -> "Weight":
        """Exact binary value of every float mass (no rounding to nice fractions)."""
        return Weight(self.alphabet, tuple(map(Fraction, self.vertex)),
                      tuple(tuple(tuple(map(Fraction, row)) for row in tab) for tab in self.edges))

    def __repr__(self):
        return f"Weight(alphabet={self.alphabet}, rank={self.rank}, exact={self.exact})"


@dataclass
class Violation:
    constraint: str
    residual: Any


@dataclass
class ValidationReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(W: Weight, tol: float = 0.0) -> ValidationReport:
    """Check the weight axioms.  Exact weights are checked with zero tolerance."""
    tol = 0 if W.exact else tol
    out = []

    def off(resid):
        return abs(resid) > tol

    for a, x in zip(W.alphabet, W.vertex):
        if x < -tol or x > 1 + tol:
            out.append(Violation(f"vertex {a!r} in [0,1]", x))
    total = sum(W.vertex)
    if off(total - 1):
        out.append(Violation("sum of vertex masses = 1", total - 1))
    for i, tab in enumerate(W.edges, start=1):
        for ia, a in enumerate(W.alphabet):
            for ib, b in enumerate(W.alphabet):
                x = tab[ia][ib]
                if x < -tol or x > 1 + tol:
                    out.append(Violation(f"edge ({a!r},{b!r};{i}) in [0,1]", x))
            row = sum(tab[ia]) - W.vertex[ia]
            if off(row):
                out.append(Violation(f"row sum (i={i}, a={a!r})", row))
            col = sum(tab[ib][ia] for ib in range(W.size)) - W.vertex[ia]
            if off(col):
                out.append(Violation(f"column sum (i={i}, a={a!r})", col))
    return ValidationReport(out)


def _check_shapes(W1: Weight, W2: Weight):
    if W1.size != W2.size or W1.rank != W2.rank:
        raise ValueError(f"shape mismatch: |A|={W1.size},r={W1.rank} vs |A|={W2.size},r={W2.rank}")


def d_i(W1: Weight, W2: Weight, i: int):
    """l1 distance between the color-``i`` edge tables (``i`` is 1-based)."""
    _check_shapes(W1, W2)
    t1, t2 = W1.edges[i - 1], W2.edges[i - 1]
    if W1.exact and W2.exact:
        return sum(abs(x - y) for r1, r2 in zip(t1, t2) for x, y in zip(r1, r2))
    return float(np.abs(W1.edge_array[i - 1] - W2.edge_array[i - 1]).sum())


def d_star(W1: Weight, W2: Weight):
    _check_shapes(W1, W2)
    return sum(d_i(W1, W2, i) for i in range(1, W1.rank + 1))


def F_of_weight(W: Weight) -> float:
    r = W.rank
    edge_term = sum(xlogx(x) for tab in W.edges for row in tab for x in row)
    vertex_term = sum(xlogx(x) for x in W.vertex)
    return -edge_term + (2 * r - 1) * vertex_term


def q_of_weight(W: Weight) -> int:
    """Least common denominator of the edge masses."""
    if not W.exact:
        raise ValueError("q_W needs exact rational masses; convert with to_exact() "
                         "or round_weight() first")
    q = 1
    for tab in W.edges:
        for row in tab:
            for x in row:
                q = math.lcm(q, x.denominator)
    return q


def _floor_n(x, n: int) -> int:
    return math.floor(Fraction(x) * n)


def round_weight(W: Weight, n: int) -> Weight:
    """A weight on the lattice (1/n)Z close to ``W`` in d_star.

    Two candidates are built.  The anchor construction (anchor = first
    symbol) floors every non-anchor entry and lets the anchor row/column
    absorb the remainders.  With three or more symbols it can go negative, or
    pile enough error on the anchor cells to leave r|A|^2/n.  The fill
    construction uses largest-remainder vertex counts and per-color
    floor-plus-fill tables.  The closer valid candidate wins, anchor on ties.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    fill = _fill_round(W, n)
    out = _anchor_round(W, n)
    if any(x < 0 for tab in out for row in tab for x in row):
        return fill
    anchor = Weight.from_edges(W.alphabet, [[[Fraction(x, n) for x in row] for row in tab]
                                            for tab in out])
    return fill if d_star(W, fill) < d_star(W, anchor) else anchor


def _anchor_round(W: Weight, n: int) -> list:
    k = W.size
    vt = [_floor_n(x, n) for x in W.vertex]
    vt[0] = n - sum(vt[1:])
    tabs = []
    for tab in W.edges:
        X = [[0] * k for _ in range(k)]
        for b in range(1, k):
            for c in range(1, k):
                X[b][c] = _floor_n(tab[b][c], n)
        for b in range(1, k):
            X[0][b] = vt[b] - sum(X[a][b] for a in range(1, k))
            X[b][0] = vt[b] - sum(X[b][a] for a in range(1, k))
        X[0][0] = vt[0] - sum(X[0][b] for b in range(1, k))
        tabs.append(X)
    return tabs


def _fill_round(W: Weight, n: int) -> Weight:
    k = W.size
    scaled = [Fraction(x) * n for x in W.vertex]
    c = [math.floor(x) for x in scaled]
    # vertex sums to 1 only approximately for float input
    for a in sorted(range(k), key=lambda a: (-(scaled[a] - c[a]), a))[: n - sum(c)]:
        c[a] += 1
    tabs = []
    for tab in W.edges:
        y = [[Fraction(x) * n for x in row] for row in tab]
        X = [[math.floor(v) for v in row] for row in y]
        frac = [[y[a][b] - X[a][b] for b in range(k)] for a in range(k)]
        need_row = [c[a] - sum(X[a]) for a in range(k)]
        need_col = [c[b] - sum(X[a][b] for a in range(k)) for b in range(k)]
        if min(need_row) < 0 or min(need_col) < 0:
            # floors overshoot only for float input that is not a valid weight
            raise ValueError("cannot round an invalid weight")
        used = [[0] * k for _ in range(k)]
        for a in sorted(range(k), key=lambda a: (-need_row[a], a)):
            while need_row[a]:
                b = max(range(k), key=lambda b: (need_col[b] > 0, used[a][b] == 0,
                                                 need_col[b], frac[a][b], -b))
                X[a][b] += 1
                used[a][b] += 1
                need_col[b] -= 1
                need_row[a] -= 1
        tabs.append(X)
    return Weight.from_edges(W.alphabet, [[[Fraction(x, n) for x in row] for row in tab]
                                          for tab in tabs])


def weight_to_json(W: Weight) -> dict:
    def enc(x):
        return [x.numerator, x.denominator] if W.exact else x
    return {
        "alphabet": list(W.alphabet),
        "rank": W.rank,
        "edges": {str(i + 1): [enc(x) for row in tab for x in row]
                  for i, tab in enumerate(W.edges)},
    }


def weight_from_json(doc: dict) -> Weight:
    try:
        alphabet = doc["alphabet"]
        rank = doc["rank"]
        edges = doc["edges"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"weight document missing field: {exc}") from exc
    if not isinstance(alphabet, list) or not alphabet:
        raise SchemaError("alphabet must be a nonempty list")
    if not isinstance(rank, int) or rank < 1:
        raise SchemaError("rank must be a positive integer")
    k = len(alphabet)
    if not isinstance(edges, dict) or sorted(edges) != sorted(str(i) for i in range(1, rank + 1)):
        raise SchemaError(f"edges must have keys '1'..'{rank}'")
    tabs = []
    for i in range(1, rank + 1):
        flat = edges[str(i)]
        if not isinstance(flat, list) or len(flat) != k * k:
            raise SchemaError(f"edges['{i}'] must list {k * k} masses row-major")
        vals = [as_mass(x) for x in flat]
        tabs.append([vals[a * k:(a + 1) * k] for a in range(k)])
    try:
        W = Weight.from_edges(alphabet, tabs)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    report = validate(W, tol=1e-12)
    if not report.ok:
        v = report.violations[0]
        raise SchemaError(f"invalid weight: {v.constraint} (residual {v.residual})")
    return W
