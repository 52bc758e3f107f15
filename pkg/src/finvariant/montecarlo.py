"""Seeded sampling of uniform homomorphisms G -> Sym(n) and empirical counts.

Every draw gets its own Philox stream keyed by ``(seed, stream, n, index)``,
so results do not depend on how draws are scheduled or batched.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from . import freegrp
from .counting import HomRep, MicroObservable, as_epsilon, weight_of_pair
from .errors import BudgetError
from .freegrp import GroupSpec, Word
from .systems import F_level, System, joint_distribution, weight_from_system
from .weights import F_of_weight, d_star

STAR = "star"
DEFAULT_PSI_BUDGET = 2 ** 20 * 20
HOM_STREAM = 0

KSpec = Union[str, Sequence[Word]]


@dataclass(frozen=True)
class RunConfig:
    seed: int
    samples: int
    n: int = 0
    eps: Fraction = Fraction(0)
    K: KSpec = STAR

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "eps", as_epsilon(self.eps))
        if self.K != STAR:
            object.__setattr__(self, "K", tuple(freegrp.sort_words(self.K)))

    def echo(self) -> dict:
        K = self.K if self.K == STAR else [freegrp.format_word(w) for w in self.K]
        return {"seed": self.seed, "samples": self.samples, "n": self.n,
                "epsilon": f"{self.eps.numerator}/{self.eps.denominator}", "K": K}


def draw_rng(seed: int, index: int, n: int = 0, stream: int = HOM_STREAM) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(stream, n, index))
    return np.random.Generator(np.random.Philox(ss))


def uniform_homomorphism(n: int, r: int, rng: np.random.Generator) -> HomRep:
    """r independent uniform permutations (numpy's Fisher-Yates shuffle)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return HomRep(n, tuple(tuple(int(v) for v in rng.permutation(n)) for _ in range(r)))


def homomorphisms(seed: int, samples: int, n: int, r: int):
    for j in range(samples):
        yield uniform_homomorphism(n, r, draw_rng(seed, j, n))


def _pattern_words(K: Iterable[Word], spec: GroupSpec) -> list[Word]:
    words = freegrp.sort_words(K)
    if not words:
        raise ValueError("K must be nonempty")
    for w in words:
        if freegrp.reduce(w, spec) != w:
            raise ValueError(f"word {w} is not reduced")
    return words


def empirical_pattern(sigma: HomRep, psi: MicroObservable, words: Sequence[Word]) -> dict:
    """Law of ``j -> (psi(sigma(h) j))_{h in words}`` under uniform j, as exact fractions."""
    n = sigma.n
    maps = [sigma.word_perm(h) for h in words]
    out: dict = {}
    for j in range(n):
        key = tuple(psi.labels[m[j]] for m in maps)
        out[key] = out.get(key, 0) + 1
    return {key: Fraction(c, n) for key, c in out.items()}


def d_K(sys: System, sigma: HomRep, psi: MicroObservable, K: Iterable[Word], joint=None):
    """l1 distance between the K-pattern law of the system and that of psi under sigma."""
    if sigma.rank != sys.spec.rank:
        raise ValueError("sigma rank does not match the system")
    words = _pattern_words(K, sys.spec)
    if joint is None:
        joint = joint_distribution(sys, words)
    emp = empirical_pattern(sigma, psi, words)
    keys = set(joint.masses) | set(emp)
    if not all(isinstance(p, Fraction) for p in joint.masses.values()):
        emp = {k: float(v) for k, v in emp.items()}
    return sum(abs(joint.masses.get(k, 0) - emp.get(k, 0)) for k in keys)


def d_star_pair(sys: System, sigma: HomRep, psi: MicroObservable, W_mu=None):
    if W_mu is None:
        W_mu = weight_from_system(sys)
    return d_star(W_mu, weight_of_pair(sigma, psi))


@dataclass
class CountEstimate:
    mean: float
    stderr: float
    counts: list = field(repr=False)


def _all_psi(k: int, n: int, budget: int) -> np.ndarray:
    if k ** n * n > budget:
        raise BudgetError(f"enumerating {k}^{n} observables exceeds budget {budget}")
    return np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int64).reshape(-1, n)


class _ExactThreshold:
    """Compare sum |cnt/n - p| <= eps exactly by scaling everything to integers."""

    def __init__(self, probs: np.ndarray, n: int, eps: Fraction):
        flat = list(probs.ravel())
        self.exact = all(isinstance(p, Fraction) for p in flat)
        if self.exact:
            D = eps.denominator
            for p in flat:
                D = math.lcm(D, p.denominator)
            target = [int(p * n * D) for p in flat]
            self.limit = int(eps * n * D)
            big = (max(target + [0]) + D * n) * len(flat) >= 2 ** 62
            dtype = object if big else np.int64
            self.scale = D
            self.target = np.array(target, dtype=dtype).reshape(probs.shape)
        else:
            self.scale = 1.0 / n
            self.target = probs.astype(float)
            self.limit = float(eps) + 1e-12

    def within(self, counts: np.ndarray) -> np.ndarray:
        if self.exact:
            diff = np.abs(counts.astype(self.target.dtype) * self.scale - self.target)
        else:
            diff = np.abs(counts * self.scale - self.target)
        return diff.reshape(len(counts), -1).sum(axis=1) <= self.limit


def _count_star(W_mu, Psi, sigma: HomRep, thr: _ExactThreshold) -> int:
    k = W_mu.size
    M = len(Psi)
    counts = np.zeros((M, sigma.rank, k * k), dtype=np.int64)
    for i, p in enumerate(sigma.perms):
        codes = Psi * k + Psi[:, list(p)]
        for v in range(k * k):
            counts[:, i, v] = (codes == v).sum(axis=1)
    return int(thr.within(counts).sum())


def _count_K(words, Psi, k, sigma: HomRep, thr: _ExactThreshold) -> int:
    M, n = Psi.shape
    width = k ** len(words)
    codes = np.zeros((M, n), dtype=np.int64)
    for h in words:
        codes = codes * k + Psi[:, sigma.word_perm(h)]
    flat = (np.arange(M)[:, None] * width + codes).ravel()
    counts = np.bincount(flat, minlength=M * width).reshape(M, width)
    return int(thr.within(counts).sum())


def empirical_eps_count(sys: System, n: int, eps, K: KSpec, cfg: RunConfig,
                        budget: int = DEFAULT_PSI_BUDGET) -> CountEstimate:
    """Mean over sampled sigma of #{psi in A^n : distance(phi, psi) <= eps}.

    ``K == "star"`` uses d* (edge statistics); otherwise the l1 distance of the
    joint pattern law over the word set ``K``.
    """
    eps = as_epsilon(eps)
    spec = sys.spec
    alphabet = sys.alphabet
    k = len(alphabet)
    Psi = _all_psi(k, n, budget)
    if K == STAR:
        W_mu = weight_from_system(sys)
        probs = np.empty((spec.rank, k * k), dtype=object)
        for i, tab in enumerate(W_mu.edges):
            probs[i] = [x for row in tab for x in row]
        thr = _ExactThreshold(probs, n, eps)

        def count(sigma):
            return _count_star(W_mu, Psi, sigma, thr)
    else:
        words = _pattern_words(K, spec)
        width = k ** len(words)
        if len(Psi) * width > budget:
            raise BudgetError(f"pattern table {len(Psi)} x {width} exceeds budget {budget}")
        joint = joint_distribution(sys, words)
        index = {a: j for j, a in enumerate(alphabet)}
        zero = Fraction(0) if sys.exact else 0.0
        probs = np.array([zero] * width, dtype=object)
        for lab, p in joint.masses.items():
            code = 0
            for a in lab:
                code = code * k + index[a]
            probs[code] += p
        thr = _ExactThreshold(probs, n, eps)

        def count(sigma):
            return _count_K(words, Psi, k, sigma, thr)

    counts = [count(sigma) for sigma in homomorphisms(cfg.seed, cfg.samples, n, spec.rank)]
    return _summarize(counts)


def _summarize(values) -> CountEstimate:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return CountEstimate(mean, se, list(values))


@dataclass
class HRatePoint:
    n: int
    samples: int
    mean: float
    stderr: float
    rate: float
    seed: int
    F_target: float
    F_level: float | None = None


def ball_radius(K: KSpec, spec: GroupSpec) -> int | None:
    """m when K is exactly B(e, m), else None."""
    if K == STAR:
        return None
    words = set(K)
    m = max(len(w) for w in words)
    return m if words == set(freegrp.ball(spec, m)) else None


def estimate_h_rate(sys: System, K: KSpec, eps, n_list: Sequence[int], cfg: RunConfig,
                    budget: int = DEFAULT_PSI_BUDGET) -> list[HRatePoint]:
    """Finite-K slice of the sofic entropy rate at fixed eps: (1/n) log mean count."""
    F_target = F_of_weight(weight_from_system(sys, exact=False))
    m = ball_radius(K, sys.spec)
    F_m = F_level(sys, m) if m is not None else None
    out = []
    for n in n_list:
        est = empirical_eps_count(sys, n, eps, K, cfg, budget)
        rate = math.log(est.mean) / n if est.mean > 0 else -math.inf
        out.append(HRatePoint(n, cfg.samples, est.mean, est.stderr, rate, cfg.seed, F_target, F_m))
    return out


def freeness_fraction(n: int, spec: GroupSpec, g1: Word, g2: Word, cfg: RunConfig) -> CountEstimate:
    """Mean fraction of points j with sigma(g1) j == sigma(g2) j."""
    g1, g2 = freegrp.reduce(g1, spec), freegrp.reduce(g2, spec)
    if g1 == g2:
        raise ValueError("g1 and g2 must be distinct group elements")
    fracs = []
    for sigma in homomorphisms(cfg.seed, cfg.samples, n, spec.rank):
        p1, p2 = sigma.word_perm(g1), sigma.word_perm(g2)
        fracs.append(sum(a == b for a, b in zip(p1, p2)) / n)
    return _summarize(fracs)


__all__ = [
    "RunConfig", "STAR", "draw_rng", "uniform_homomorphism", "homomorphisms",
    "empirical_pattern", "d_K", "d_star_pair", "empirical_eps_count", "CountEstimate",
    "estimate_h_rate", "HRatePoint", "freeness_fraction", "ball_radius",
]
