"""Finite-alphabet models of free group/semigroup actions and their F-levels.

Every system carries the canonical observable ``phi(x) = x(e)`` (or the label
of a point, for finite actions), and ``T_g`` shifts so that the pattern seen
at word ``h`` is ``phi(T_h x)``.  Joint laws over a finite word set ``S`` are
returned as :class:`PatternDistribution`.

Markov systems live on the tree whose edges join ``h`` and ``s_i h``; this is
the orientation under which right translation ``h -> hg`` preserves the law,
so the joints computed here are those of a genuine measure-preserving action.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

from . import freegrp
from .errors import BudgetError, SchemaError
from .freegrp import E, GroupSpec, Word
from .weights import Weight, as_mass, validate, weight_from_json, weight_to_json, xlogx

DEFAULT_MAX_LABELINGS = 2 ** 18
MARKOV_CHECK_TOL = 1e-9
HULL_SIDE = "suffix"


@dataclass(frozen=True)
class Bernoulli:
    alphabet: tuple
    kappa: tuple
    spec: GroupSpec

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        kappa = tuple(self.kappa)
        if len(kappa) != len(self.alphabet) or not kappa:
            raise ValueError("kappa must have one mass per symbol")
        if any(p < 0 for p in kappa):
            raise ValueError("kappa masses must be nonnegative")
        if all(isinstance(p, Fraction) for p in kappa):
            if sum(kappa) != 1:
                raise ValueError(f"kappa sums to {sum(kappa)}, not 1")
        else:
            kappa = tuple(float(p) for p in kappa)
            if abs(sum(kappa) - 1) > 1e-12:
                raise ValueError(f"kappa sums to {sum(kappa)}, not 1")
        object.__setattr__(self, "kappa", kappa)

    @property
    def exact(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.kappa)


@dataclass(frozen=True)
class Markov:
    weight: Weight
    spec: GroupSpec

    def __post_init__(self):
        if self.weight.rank != self.spec.rank:
            raise ValueError(f"weight rank {self.weight.rank} != group rank {self.spec.rank}")
        report = validate(self.weight, tol=1e-12)
        if not report.ok:
            raise ValueError(f"invalid weight: {report.violations[0].constraint}")
        if any(x <= 0 for x in self.weight.vertex):
            raise ValueError("Markov systems need strictly positive vertex masses")

    @property
    def alphabet(self) -> tuple:
        return self.weight.alphabet

    @property
    def exact(self) -> bool:
        return self.weight.exact


@dataclass(frozen=True)
class FiniteAction:
    """Uniform measure on ``N`` points, generators acting by permutations.

    ``perms`` are 0-based image lists; ``labels[x]`` is the observed symbol.
    """

    perms: tuple
    labels: tuple
    spec: GroupSpec
    alphabet: tuple = None
    inverse_perms: tuple = field(init=False, repr=False)

    def __post_init__(self):
        perms = tuple(tuple(int(v) for v in p) for p in self.perms)
        labels = tuple(self.labels)
        N = len(labels)
        if N < 1:
            raise ValueError("finite action needs at least one point")
        if len(perms) != self.spec.rank:
            raise ValueError(f"need {self.spec.rank} permutations, got {len(perms)}")
        for p in perms:
            if sorted(p) != list(range(N)):
                raise ValueError(f"not a permutation of {N} points: {p}")
        alphabet = self.alphabet
        if alphabet is None:
            alphabet = tuple(dict.fromkeys(labels))
        alphabet = tuple(alphabet)
        if not set(labels) <= set(alphabet):
            raise ValueError("labels outside the alphabet")
        inv = []
        for p in perms:
            q = [0] * N
            for x, y in enumerate(p):
                q[y] = x
            inv.append(tuple(q))
        object.__setattr__(self, "perms", perms)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "inverse_perms", tuple(inv))

    @property
    def N(self) -> int:
        return len(self.labels)

    @property
    def exact(self) -> bool:
        return True

    def act(self, w: Word, x: int) -> int:
        """``T_w x``; the rightmost letter acts first."""
        for i, s in reversed(w):
            x = (self.perms if s > 0 else self.inverse_perms)[i - 1][x]
        return x


@dataclass(frozen=True)
class Product:
    left: "System"
    right: "System"

    def __post_init__(self):
        if self.left.spec != self.right.spec:
            raise ValueError("product factors must act by the same group")

    @property
    def spec(self) -> GroupSpec:
        return self.left.spec

    @property
    def alphabet(self) -> tuple:
        return tuple((a, b) for a in self.left.alphabet for b in self.right.alphabet)

    @property
    def exact(self) -> bool:
        return self.left.exact and self.right.exact


@dataclass(frozen=True)
class Transformed:
    """The action ``T^w_g = T_{w(g)}`` for an automorphism ``w`` given by generator images."""

    base: "System"
    images: tuple
    inverse_images: tuple

    @property
    def spec(self) -> GroupSpec:
        return self.base.spec

    @property
    def alphabet(self) -> tuple:
        return self.base.alphabet

    @property
    def exact(self) -> bool:
        return self.base.exact

    def image(self, w: Word) -> Word:
        return freegrp.apply_endomorphism(w, self.images, self.spec)


System = Union[Bernoulli, Markov, FiniteAction, Product, Transformed]


@dataclass
class PatternDistribution:
    words: tuple
    masses: dict  # labeling tuple (aligned with words) -> mass

    def total(self):
        return sum(self.masses.values())

    def marginal(self, sub: Iterable[Word]) -> "PatternDistribution":
        sub = freegrp.sort_words(sub)
        idx = [self.words.index(w) for w in sub]
        out: dict = {}
        for lab, p in self.masses.items():
            key = tuple(lab[j] for j in idx)
            out[key] = out.get(key, 0) + p
        return PatternDistribution(tuple(sub), out)


def _check_words(S: Iterable[Word], spec: GroupSpec) -> list[Word]:
    words = freegrp.sort_words(S)
    if not words:
        raise ValueError("joint distribution over an empty word set")
    for w in words:
        if freegrp.reduce(w, spec) != w:
            raise ValueError(f"word {w} is not reduced")
    return words


def joint_distribution(sys: System, S: Iterable[Word], exact: bool | None = None,
                       max_labelings: int | None = None) -> PatternDistribution:
    """Law of ``(phi(T_h x))_{h in S}``.

    ``exact=None`` uses rationals whenever the system is exact.  ``max_labelings``
    bounds the number of configurations enumerated internally.
    """
    words = _check_words(S, sys.spec)
    if exact is None:
        exact = sys.exact
    elif exact and not sys.exact:
        raise ValueError("exact joint requested for a system with float masses")
    cap = DEFAULT_MAX_LABELINGS if max_labelings is None else max_labelings
    return PatternDistribution(tuple(words), _joint(sys, words, exact, cap))


def _num(x, exact):
    return Fraction(x) if exact else float(x)


def _joint(sys, words, exact, cap) -> dict:
    if isinstance(sys, Bernoulli):
        return _bernoulli_joint(sys, words, exact, cap)
    if isinstance(sys, Markov):
        return _markov_joint(sys, words, exact, cap)
    if isinstance(sys, FiniteAction):
        w = _num(Fraction(1, sys.N), exact)
        out: dict = {}
        for x in range(sys.N):
            lab = tuple(sys.labels[sys.act(h, x)] for h in words)
            out[lab] = out.get(lab, 0) + w
        return out
    if isinstance(sys, Product):
        J1 = _joint(sys.left, words, exact, cap)
        J2 = _joint(sys.right, words, exact, cap)
        if len(J1) * len(J2) > cap:
            raise BudgetError(f"product joint has {len(J1) * len(J2)} labelings > cap {cap}")
        return {tuple(zip(l1, l2)): p1 * p2 for l1, p1 in J1.items() for l2, p2 in J2.items()}
    if isinstance(sys, Transformed):
        imgs = [sys.image(h) for h in words]
        base_words = freegrp.sort_words(imgs)
        pos = [base_words.index(g) for g in imgs]
        out = {}
        for lab, p in _joint(sys.base, base_words, exact, cap).items():
            key = tuple(lab[j] for j in pos)
            out[key] = out.get(key, 0) + p
        return out
    raise TypeError(f"not a system: {sys!r}")


def _bernoulli_joint(sys, words, exact, cap):
    support = [(a, _num(p, exact)) for a, p in zip(sys.alphabet, sys.kappa) if p > 0]
    if len(support) ** len(words) > cap:
        raise BudgetError(f"{len(support)}^{len(words)} labelings > cap {cap}")
    out = {}
    for combo in itertools.product(support, repeat=len(words)):
        p = 1
        for _, q in combo:
            p *= q
        out[tuple(a for a, _ in combo)] = p
    return out


def steiner_tree(spec: GroupSpec, S: Sequence[Word], side: str = HULL_SIDE):
    """Minimal subtree spanning ``S``: vertices, and edges as (tail, color, head)."""
    tree = freegrp.hull(spec, S, side=side)
    edges = [(v, i, tree.head(v, i, spec)) for v, i in tree.edges]
    verts = set(tree.vertices)
    keep = set(S)
    while True:
        deg = {v: 0 for v in verts}
        for t, _, h in edges:
            deg[t] += 1
            deg[h] += 1
        drop = {v for v in verts if v not in keep and deg[v] <= 1}
        if not drop:
            break
        verts -= drop
        edges = [e for e in edges if e[0] in verts and e[2] in verts]
    return verts, edges


def _markov_joint(sys: Markov, words, exact, cap):
    W = sys.weight
    k = W.size
    verts, edges = steiner_tree(sys.spec, words)
    if k ** len(verts) > cap:
        raise BudgetError(f"{k}^{len(verts)} labelings over the spanning tree > cap {cap}")
    vertex = [_num(x, exact) for x in W.vertex]
    tabs = [[[_num(x, exact) for x in row] for row in tab] for tab in W.edges]
    adj: dict = {v: [] for v in verts}
    for t, i, h in edges:
        adj[t].append((h, i, True))
        adj[h].append((t, i, False))
    root = words[0]
    order = [root]
    parent: dict = {root: None}
    for v in order:
        for u, i, forward in sorted(adj[v], key=lambda e: freegrp.word_key(e[0])):
            if u not in parent:
                parent[u] = (v, i, forward)
                order.append(u)
    pos = {v: j for j, v in enumerate(order)}
    states = [((a,), vertex[a]) for a in range(k) if vertex[a] > 0]
    for v in order[1:]:
        pv, i, forward = parent[v]
        tab = tabs[i - 1]
        jp = pos[pv]
        nxt = []
        for lab, p in states:
            a = lab[jp]
            for b in range(k):
                pair = tab[a][b] if forward else tab[b][a]
                if pair:
                    nxt.append((lab + (b,), p * pair / vertex[a]))
        states = nxt
    idx = [pos[w] for w in words]
    out: dict = {}
    for lab, p in states:
        key = tuple(W.alphabet[lab[j]] for j in idx)
        out[key] = out.get(key, 0) + p
    return out


def entropy(dist: PatternDistribution) -> float:
    return -sum(xlogx(p) for p in dist.masses.values())


def entropy_base(sys: System) -> float:
    return entropy(joint_distribution(sys, [E], exact=False))


def _kappa_entropy(kappa) -> float:
    return -sum(xlogx(p) for p in kappa)


def markov_closed_form(W: Weight, color_counts: Sequence[int]) -> float:
    """Entropy of a tree-indexed chain on a subtree with the given per-color edge counts."""
    hv = -sum(xlogx(x) for x in W.vertex)
    he = [-sum(xlogx(x) for row in tab for x in row) for tab in W.edges]
    return hv + sum(c * (h - hv) for c, h in zip(color_counts, he))


def _markov_structured(sys: Markov, words) -> float | None:
    verts, edges = steiner_tree(sys.spec, words)
    if verts != set(words):
        return None
    counts = [0] * sys.spec.rank
    for _, i, _ in edges:
        counts[i - 1] += 1
    return markov_closed_form(sys.weight, counts)


def joint_entropy(sys: System, S: Iterable[Word], max_labelings: int | None = None) -> float:
    """Entropy of the joint over ``S``.

    Enumerates the joint when it fits under ``max_labelings``.  Above the cap
    it falls back on exact structural identities (independence for Bernoulli
    and products, the edge-count formula for Markov subtrees); if none
    applies a :class:`BudgetError` is raised.  When both routes are available
    for a Markov subtree they are required to agree to 1e-9.
    """
    words = _check_words(S, sys.spec)
    cap = DEFAULT_MAX_LABELINGS if max_labelings is None else max_labelings
    try:
        h = entropy(PatternDistribution(tuple(words), _joint(sys, words, False, cap)))
    except BudgetError:
        h = None
    if isinstance(sys, Markov):
        closed = _markov_structured(sys, words)
        if h is not None and closed is not None and abs(h - closed) > MARKOV_CHECK_TOL:
            raise RuntimeError(f"Markov enumeration {h} disagrees with closed form {closed}")
        if h is None:
            h = closed
    if h is not None:
        return h
    if isinstance(sys, Bernoulli):
        return len(words) * _kappa_entropy(sys.kappa)
    if isinstance(sys, Product):
        return joint_entropy(sys.left, words, cap) + joint_entropy(sys.right, words, cap)
    if isinstance(sys, Transformed):
        imgs = {sys.image(w) for w in words}
        if len(imgs) == len(words):
            return joint_entropy(sys.base, imgs, cap)
    raise BudgetError(f"joint over {len(words)} words exceeds cap {cap} and has no closed form")


def F_level(sys: System, m: int, max_labelings: int | None = None) -> float:
    """F of the ball-``m`` refinement: (1-2r) H(B) + sum_i H(B u B s_i)."""
    spec = sys.spec
    B = freegrp.ball(spec, m)
    r = spec.rank
    val = (1 - 2 * r) * joint_entropy(sys, B, max_labelings)
    for g in spec.generators():
        S = set(B) | freegrp.right_translate(B, g, spec)
        val += joint_entropy(sys, S, max_labelings)
    return val


@dataclass
class FEstimate:
    levels: list
    minimum: float
    argmin: int
    # min over finitely many levels only bounds the infimum from above
    kind: str = "upper bound on f(T, phi)"


def f_estimate(sys: System, M: int, max_labelings: int | None = None) -> FEstimate:
    levels = [F_level(sys, m, max_labelings) for m in range(M + 1)]
    j = min(range(len(levels)), key=levels.__getitem__)
    return FEstimate(levels, levels[j], j)


def transform_system(sys: System, images: Sequence[Word], inverse_images: Sequence[Word],
                     radius: int = 3) -> Transformed:
    spec = sys.spec
    images = tuple(freegrp.reduce(w, spec) for w in images)
    inverse_images = tuple(freegrp.reduce(w, spec) for w in inverse_images)
    if len(images) != spec.rank or len(inverse_images) != spec.rank:
        raise ValueError(f"need {spec.rank} images and inverse images")
    if not freegrp.check_inverse_images(images, inverse_images, spec, radius):
        raise ValueError("generator images do not invert each other on the radius-"
                         f"{radius} ball; not an automorphism")
    return Transformed(sys, images, inverse_images)


def weight_from_system(sys: System, exact: bool | None = None) -> Weight:
    """The weight W_mu: vertex = law of phi, edge (a,b;i) = law of (phi, phi o T_{s_i})."""
    spec = sys.spec
    if exact is None:
        exact = sys.exact
    alphabet = sys.alphabet
    index = {a: j for j, a in enumerate(alphabet)}
    k = len(alphabet)
    tabs = []
    for g in spec.generators():
        J = joint_distribution(sys, [E, g], exact=exact)
        zero = Fraction(0) if exact else 0.0
        tab = [[zero] * k for _ in range(k)]
        for (a, b), p in J.masses.items():
            tab[index[a]][index[b]] += p
        tabs.append(tab)
    return Weight.from_edges(alphabet, tabs)


# ---------------------------------------------------------------- JSON

def _spec_from_json(doc) -> GroupSpec:
    if not isinstance(doc, dict):
        raise SchemaError("'group' must be an object with rank and kind")
    try:
        return GroupSpec(int(doc["rank"]), doc.get("kind", "group"))
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"bad group spec: {exc}") from exc


def system_from_json(doc: dict) -> System:
    if not isinstance(doc, dict) or "variant" not in doc:
        raise SchemaError("system document needs a 'variant' field")
    variant = doc["variant"]
    try:
        if variant == "product":
            return Product(system_from_json(doc["left"]), system_from_json(doc["right"]))
        spec = _spec_from_json(doc.get("group"))
        if variant == "bernoulli":
            kappa = [as_mass(x) for x in doc["kappa"]]
            return Bernoulli(tuple(doc["alphabet"]), tuple(kappa), spec)
        if variant == "markov":
            return Markov(weight_from_json(doc["weight"]), spec)
        if variant == "finite":
            perms = doc["perms"]
            N = len(doc["labels"])
            if "N" in doc and doc["N"] != N:
                raise SchemaError(f"N={doc['N']} but {N} labels given")
            zero_based = [[int(v) - 1 for v in p] for p in perms]
            alphabet = tuple(doc["alphabet"]) if "alphabet" in doc else None
            return FiniteAction(tuple(map(tuple, zero_based)), tuple(doc["labels"]), spec, alphabet)
    except SchemaError:
        raise
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{variant} system missing or malformed field: {exc}") from exc
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    raise SchemaError(f"unknown variant {variant!r}")


def _mass_json(p):
    return [p.numerator, p.denominator] if isinstance(p, Fraction) else p


def system_to_json(sys: System) -> dict:
    if isinstance(sys, Product):
        return {"variant": "product", "left": system_to_json(sys.left),
                "right": system_to_json(sys.right)}
    group = {"rank": sys.spec.rank, "kind": sys.spec.kind}
    if isinstance(sys, Bernoulli):
        return {"variant": "bernoulli", "group": group, "alphabet": list(sys.alphabet),
                "kappa": [_mass_json(p) for p in sys.kappa]}
    if isinstance(sys, Markov):
        return {"variant": "markov", "group": group, "weight": weight_to_json(sys.weight)}
    if isinstance(sys, FiniteAction):
        return {"variant": "finite", "group": group, "N": sys.N,
                "perms": [[v + 1 for v in p] for p in sys.perms],
                "labels": list(sys.labels), "alphabet": list(sys.alphabet)}
    raise TypeError(f"cannot serialize {type(sys).__name__}")


__all__ = [
    "Bernoulli", "Markov", "FiniteAction", "Product", "Transformed", "System",
    "PatternDistribution", "FEstimate", "joint_distribution", "joint_entropy",
    "entropy", "entropy_base", "F_level", "f_estimate", "transform_system",
    "weight_from_system", "markov_closed_form", "steiner_tree",
    "system_from_json", "system_to_json", "DEFAULT_MAX_LABELINGS",
]
