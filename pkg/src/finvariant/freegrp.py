"""Words, balls and subtrees in the Cayley tree of a free group or free semigroup.

A word is a tuple of letters ``(i, sign)`` with ``i`` in ``1..rank`` and
``sign`` in ``{+1, -1}``.  The empty tuple is the identity ``e``.  Words are
plain tuples so they hash, compare and pickle for free.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

Letter = tuple[int, int]
Word = tuple[Letter, ...]

E: Word = ()


@dataclass(frozen=True)
class GroupSpec:
    rank: int
    kind: str = "group"

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.kind not in ("group", "semigroup"):
            raise ValueError(f"kind must be 'group' or 'semigroup', got {self.kind!r}")

    @property
    def is_group(self) -> bool:
        return self.kind == "group"

    def generators(self) -> list[Word]:
        return [((i, 1),) for i in range(1, self.rank + 1)]

    def letters(self) -> list[Letter]:
        """Letters in canonical order: s1, s1^-1, s2, s2^-1, ..."""
        out = []
        for i in range(1, self.rank + 1):
            out.append((i, 1))
            if self.is_group:
                out.append((i, -1))
        return out


@dataclass(frozen=True)
class Subtree:
    """A finite subtree of the Cayley tree.

    ``edges`` holds pairs ``(v, i)``.  With ``side == "prefix"`` the pair is
    the edge from ``v`` to ``v*s_i``; with ``side == "suffix"`` it is the edge
    from ``v`` to ``s_i*v``.
    """

    vertices: frozenset
    edges: frozenset
    side: str = "prefix"

    def head(self, v: Word, i: int, spec: GroupSpec) -> Word:
        g = ((i, 1),)
        return multiply(v, g, spec) if self.side == "prefix" else multiply(g, v, spec)

    def color_counts(self, rank: int) -> list[int]:
        counts = [0] * rank
        for _, i in self.edges:
            counts[i - 1] += 1
        return counts


def _letter_key(letter: Letter) -> tuple[int, int]:
    i, s = letter
    return (i, 0 if s > 0 else 1)


def word_key(w: Word) -> tuple:
    """Sort key: length first, then letters with s_i before s_i^-1."""
    return (len(w), tuple(_letter_key(x) for x in w))


def sort_words(words: Iterable[Word]) -> list[Word]:
    return sorted(set(words), key=word_key)


def reduce(letters: Iterable[Sequence[int]], spec: GroupSpec) -> Word:
    out: list[Letter] = []
    for i, s in letters:
        i, s = int(i), int(s)
        if not 1 <= i <= spec.rank:
            raise ValueError(f"generator index {i} outside 1..{spec.rank}")
        if s not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {s}")
        if s < 0 and not spec.is_group:
            raise ValueError("negative letter in a semigroup word")
        if out and out[-1] == (i, -s):
            out.pop()
        else:
            out.append((i, s))
    return tuple(out)


def inverse(w: Word, spec: GroupSpec) -> Word:
    if not spec.is_group and w:
        raise ValueError("semigroup words have no inverses")
    return tuple((i, -s) for i, s in reversed(w))


def multiply(u: Word, v: Word, spec: GroupSpec) -> Word:
    return reduce(u + v, spec)


def ball(spec: GroupSpec, m: int) -> list[Word]:
    """All words of length <= m, ordered by length then letters."""
    if m < 0:
        raise ValueError("radius must be >= 0")
    letters = spec.letters()
    layer = [E]
    out = [E]
    for _ in range(m):
        nxt = []
        for w in layer:
            for x in letters:
                if w and w[-1] == (x[0], -x[1]):
                    continue
                nxt.append(w + (x,))
        layer = nxt
        out.extend(nxt)
    return sorted(out, key=word_key)


def ball_size(spec: GroupSpec, m: int) -> int:
    r = spec.rank
    if spec.is_group:
        if r == 1:
            return 2 * m + 1
        return 1 + 2 * r * ((2 * r - 1) ** m - 1) // (2 * r - 2)
    if r == 1:
        return m + 1
    return (r ** (m + 1) - 1) // (r - 1)


def right_translate(S: Iterable[Word], w: Word, spec: GroupSpec) -> set[Word]:
    return {multiply(g, w, spec) for g in S}


def hull(spec: GroupSpec, S: Iterable[Word], side: str = "prefix") -> Subtree:
    """Smallest subtree containing ``S`` and ``e``.

    ``side="prefix"`` closes under prefixes (edges ``v -> v*s_i``);
    ``side="suffix"`` closes under suffixes (edges ``v -> s_i*v``).
    """
    S = list(S)
    if not S:
        raise ValueError("hull of an empty set")
    if side not in ("prefix", "suffix"):
        raise ValueError(f"unknown side {side!r}")
    verts = {E}
    for w in S:
        for k in range(len(w) + 1):
            verts.add(w[:k] if side == "prefix" else w[len(w) - k:])
    edges = set()
    for v in verts:
        if not v:
            continue
        if side == "prefix":
            (i, s), parent = v[-1], v[:-1]
        else:
            (i, s), parent = v[0], v[1:]
        # positive letter: parent -> v is an s_i step; negative: v -> parent is
        edges.add((parent, i) if s > 0 else (v, i))
    return Subtree(frozenset(verts), frozenset(edges), side)


def apply_endomorphism(w: Word, images: Sequence[Word], spec: GroupSpec) -> Word:
    if len(images) != spec.rank:
        raise ValueError(f"need {spec.rank} generator images, got {len(images)}")
    out: list[Letter] = []
    for i, s in w:
        img = images[i - 1]
        out.extend(img if s > 0 else inverse(img, spec))
    return reduce(out, spec)


def check_inverse_images(images: Sequence[Word], inverse_images: Sequence[Word],
                         spec: GroupSpec, radius: int = 3) -> bool:
    """True when the two endomorphisms invert each other on ``ball(spec, radius)``."""
    for w in ball(spec, radius):
        if apply_endomorphism(apply_endomorphism(w, inverse_images, spec), images, spec) != w:
            return False
        if apply_endomorphism(apply_endomorphism(w, images, spec), inverse_images, spec) != w:
            return False
    return True


_TOKEN = re.compile(r"^s(\d+)(?:\^(-?\d+))?$")


def parse_word(text: str, spec: GroupSpec) -> Word:
    """Parse ``"s1 s2^-1"``, ``"s1*s1"`` or ``"e"``.  Exponents may be any integer."""
    text = text.strip()
    if text in ("", "e", "1"):
        return E
    letters = []
    for tok in re.split(r"[\s*·]+", text):
        if not tok or tok == "e":
            continue
        m = _TOKEN.match(tok)
        if not m:
            raise ValueError(f"bad word token {tok!r}")
        i = int(m.group(1))
        p = int(m.group(2)) if m.group(2) is not None else 1
        letters.extend([(i, 1 if p > 0 else -1)] * abs(p))
    return reduce(letters, spec)


def format_word(w: Word) -> str:
    if not w:
        return "e"
    return " ".join(f"s{i}" if s > 0 else f"s{i}^-1" for i, s in w)
