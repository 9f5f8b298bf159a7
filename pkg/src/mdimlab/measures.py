"""Shift-invariant measures on symbol sequences and their block laws.

Measures live on sequences of symbol indices ``0..k-1``; an optional
:class:`Alphabet` gives the embedding in ``[0, 1]`` used by distortion costs.
Block laws are exact (Bernoulli products, Markov path products, convex
combinations) apart from empirical measures, whose blocks are counted
cyclically along a sampled word.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx
import numpy as np

from .errors import DomainError, ResourceError
from .shift_systems import Alphabet

BLOCK_BUDGET = 1 << 21


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator; distinct ``stream`` ids give independent streams."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


@dataclass
class BlockDistribution:
    """Law of the first ``n`` symbols: distinct words (rows) and their masses."""

    n: int
    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=np.int64).reshape(-1, self.n)
        self.probs = np.asarray(self.probs, dtype=float)
        if abs(self.probs.sum() - 1.0) > 1e-10:
            raise DomainError(f"block masses sum to {self.probs.sum()!r}")

    @classmethod
    def from_pairs(cls, n: int, words: np.ndarray, probs: np.ndarray, keep_zero: bool = False):
        """Merge duplicate words, drop null ones and sort lexicographically."""
        words = np.asarray(words, dtype=np.int64).reshape(-1, n)
        uniq, inv = np.unique(words, axis=0, return_inverse=True)
        mass = np.bincount(inv.ravel(), weights=probs, minlength=len(uniq))
        keep = np.ones(len(uniq), bool) if keep_zero else mass > 0
        return cls(n, uniq[keep], mass[keep])

    def marginal(self, drop: str = "last") -> "BlockDistribution":
        if self.n < 2:
            raise DomainError("cannot marginalize a 1-block law")
        words = self.support[:, :-1] if drop == "last" else self.support[:, 1:]
        return BlockDistribution.from_pairs(self.n - 1, words, self.probs)

    def coarse(self, labels: Sequence[int]) -> "BlockDistribution":
        """Push forward through a symbol-to-cell relabelling applied letterwise."""
        labels = np.asarray(labels, dtype=np.int64)
        return BlockDistribution.from_pairs(self.n, labels[self.support], self.probs)

    def entropy(self) -> float:
        p = self.probs[self.probs > 0]
        return float(-(p * np.log(p)).sum())

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(v) for v in w): float(p) for w, p in zip(self.support, self.probs)}


class MeasureSpec:
    """Base class for shift-invariant measures on ``k`` symbols."""

    kind = "abstract"
    k: int
    alphabet: Alphabet | None
    invariant = True

    @property
    def symbols(self) -> Alphabet:
        return self.alphabet if self.alphabet is not None else Alphabet.uniform(self.k)

    @property
    def ergodic(self) -> bool:
        raise NotImplementedError

    def block_distribution(self, n: int, budget: int = BLOCK_BUDGET) -> BlockDistribution:
        raise NotImplementedError

    def sample(self, length: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def closed_form_entropy(self) -> float | None:
        return None


def _prob_vector(v, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0 or np.any(v < 0):
        raise DomainError(f"{what} must be a nonnegative vector")
    if abs(v.sum() - 1.0) > 1e-12:
        raise DomainError(f"{what} sums to {v.sum()!r}, not 1")
    return v


@dataclass(frozen=True, eq=False)
class Bernoulli(MeasureSpec):
    probs: tuple[float, ...]
    alphabet: Alphabet | None = None
    kind = "bernoulli"

    def __post_init__(self):
        p = _prob_vector(self.probs, "Bernoulli probabilities")
        object.__setattr__(self, "probs", tuple(float(x) for x in p))
        _check_alphabet(self.alphabet, p.size)

    @property
    def k(self) -> int:
        return len(self.probs)

    @property
    def ergodic(self) -> bool:
        return True

    def block_distribution(self, n: int, budget: int = BLOCK_BUDGET) -> BlockDistribution:
        _check_n(n)
        p = np.asarray(self.probs)
        live = np.flatnonzero(p > 0)
        _check_budget(live.size ** n, budget)
        words = np.stack(np.unravel_index(np.arange(live.size ** n), (live.size,) * n), axis=1)
        words = live[words]
        probs = np.prod(p[words], axis=1)
        return BlockDistribution(n, words, probs / probs.sum())

    def sample(self, length: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.k, size=length, p=np.asarray(self.probs))

    def closed_form_entropy(self) -> float:
        p = np.asarray(self.probs)
        p = p[p > 0]
        return float(-(p * np.log(p)).sum())


@dataclass(frozen=True, eq=False)
class Markov(MeasureSpec):
    """Stationary Markov chain with transition matrix ``P`` and stationary vector ``pi``.

    ``pi`` may be omitted when the chain has a single closed class.
    """

    transition: tuple[tuple[float, ...], ...]
    stationary: tuple[float, ...] | None = None
    alphabet: Alphabet | None = None
    kind = "markov"

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or np.any(P < 0):
            raise DomainError("transition matrix must be square and nonnegative")
        if np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
            raise DomainError("transition rows must sum to 1")
        if self.stationary is None:
            classes = _closed_classes(P)
            if len(classes) != 1:
                raise DomainError("stationary vector is not unique; pass it explicitly")
            pi = _stationary_on(P, classes[0])
        else:
            pi = _prob_vector(self.stationary, "stationary vector")
        if pi.size != P.shape[0]:
            raise DomainError("stationary vector size mismatch")
        if np.max(np.abs(pi @ P - pi)) > 1e-10:
            raise DomainError("pi P != pi")
        object.__setattr__(self, "transition", tuple(tuple(float(x) for x in r) for r in P))
        object.__setattr__(self, "stationary", tuple(float(x) for x in pi))
        _check_alphabet(self.alphabet, P.shape[0])

    @property
    def k(self) -> int:
        return len(self.transition)

    @property
    def P(self) -> np.ndarray:
        return np.asarray(self.transition)

    @property
    def pi(self) -> np.ndarray:
        return np.asarray(self.stationary)

    @property
    def ergodic(self) -> bool:
        return len([c for c in _closed_classes(self.P) if self.pi[c].sum() > 0]) == 1

    def block_distribution(self, n: int, budget: int = BLOCK_BUDGET) -> BlockDistribution:
        _check_n(n)
        P, pi = self.P, self.pi
        words = np.flatnonzero(pi > 0)[:, None]
        probs = pi[words[:, 0]]
        for _ in range(n - 1):
            rows, nxt = np.nonzero(P[words[:, -1]] > 0)
            _check_budget(rows.size, budget)
            probs = probs[rows] * P[words[rows, -1], nxt]
            words = np.concatenate([words[rows], nxt[:, None]], axis=1)
        order = np.lexsort(words.T[::-1])
        return BlockDistribution(n, words[order], probs[order])

    def sample(self, length: int, rng: np.random.Generator, start: int | None = None) -> np.ndarray:
        P = self.P
        cum = np.cumsum(P, axis=1)
        cum[:, -1] = 1.0
        u = rng.random(length)
        out = np.empty(length, dtype=np.int64)
        state = int(np.searchsorted(np.cumsum(self.pi), u[0], side="right")) if start is None else int(start)
        state = min(state, self.k - 1)
        out[0] = state
        for t in range(1, length):
            state = int(np.searchsorted(cum[state], u[t], side="right"))
            out[t] = state
        return out

    def closed_form_entropy(self) -> float:
        P, pi = self.P, self.pi
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(P > 0, P * np.log(np.where(P > 0, P, 1.0)), 0.0)
        return float(-(pi @ terms.sum(axis=1)))


@dataclass(frozen=True, eq=False)
class Mixture(MeasureSpec):
    """Finite convex combination of invariant measures on the same symbols."""

    components: tuple[tuple[float, MeasureSpec], ...]
    alphabet: Alphabet | None = None
    kind = "mixture"

    def __post_init__(self):
        comps = tuple((float(w), m) for w, m in self.components)
        if not comps:
            raise DomainError("mixture needs at least one component")
        w = np.array([c[0] for c in comps])
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("mixture weights must be positive and sum to 1")
        if len({m.k for _, m in comps}) != 1:
            raise DomainError("mixture components use different alphabets")
        object.__setattr__(self, "components", comps)
        if self.alphabet is None:
            object.__setattr__(self, "alphabet", comps[0][1].alphabet)

    @property
    def k(self) -> int:
        return self.components[0][1].k

    @property
    def invariant(self) -> bool:
        return all(m.invariant for _, m in self.components)

    @property
    def ergodic(self) -> bool:
        return len(self.components) == 1 and self.components[0][1].ergodic

    def block_distribution(self, n: int, budget: int = BLOCK_BUDGET) -> BlockDistribution:
        parts = [(w, m.block_distribution(n, budget)) for w, m in self.components]
        words = np.concatenate([b.support for _, b in parts])
        probs = np.concatenate([w * b.probs for w, b in parts])
        return BlockDistribution.from_pairs(n, words, probs)

    def sample(self, length: int, rng: np.random.Generator) -> np.ndarray:
        # one orbit lives in one ergodic component
        w = np.array([c[0] for c in self.components])
        j = int(rng.choice(len(w), p=w / w.sum()))
        return self.components[j][1].sample(length, rng)


@dataclass(frozen=True, eq=False)
class Empirical(MeasureSpec):
    """Block frequencies of a finite sample, read cyclically.

    Not treated as invariant unless ``approximate`` is set.
    """

    word: tuple[int, ...]
    k_symbols: int | None = None
    alphabet: Alphabet | None = None
    approximate: bool = False
    kind = "empirical"

    def __post_init__(self):
        w = np.asarray(self.word, dtype=np.int64)
        if w.ndim != 1 or w.size == 0 or w.min() < 0:
            raise DomainError("empirical word must be a nonempty index sequence")
        k = int(self.k_symbols or w.max() + 1)
        if w.max() >= k:
            raise DomainError("symbol index outside the alphabet")
        object.__setattr__(self, "word", tuple(int(v) for v in w))
        object.__setattr__(self, "k_symbols", k)
        _check_alphabet(self.alphabet, k)

    @property
    def k(self) -> int:
        return self.k_symbols

    @property
    def invariant(self) -> bool:
        return self.approximate

    @property
    def ergodic(self) -> bool:
        return False

    def block_distribution(self, n: int, budget: int = BLOCK_BUDGET) -> BlockDistribution:
        _check_n(n)
        w = np.asarray(self.word)
        N = w.size
        idx = (np.arange(N)[:, None] + np.arange(n)[None, :]) % N
        return BlockDistribution.from_pairs(n, w[idx], np.full(N, 1.0 / N))

    def sample(self, length: int, rng: np.random.Generator) -> np.ndarray:
        w = np.asarray(self.word)
        start = int(rng.integers(w.size))
        return w[(start + np.arange(length)) % w.size]


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"block length must be a positive integer, got {n}")


def _check_budget(count: int, budget: int) -> None:
    if count > budget:
        raise ResourceError(f"block support of {count} words exceeds budget {budget}", count)


def _check_alphabet(alphabet: Alphabet | None, k: int) -> None:
    if alphabet is not None and alphabet.size != k:
        raise DomainError(f"alphabet has {alphabet.size} symbols, measure has {k}")


def _closed_classes(P: np.ndarray) -> list[np.ndarray]:
    g = nx.DiGraph()
    g.add_nodes_from(range(P.shape[0]))
    g.add_edges_from(zip(*np.nonzero(P > 0)))
    cond = nx.condensation(g)
    out = [np.array(sorted(cond.nodes[c]["members"])) for c in cond.nodes if cond.out_degree(c) == 0]
    return sorted(out, key=lambda c: c[0])


def _stationary_on(P: np.ndarray, states: np.ndarray) -> np.ndarray:
    sub = P[np.ix_(states, states)]
    k = len(states)
    a = np.vstack([sub.T - np.eye(k), np.ones(k)])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    v, *_ = np.linalg.lstsq(a, b, rcond=None)
    v = np.clip(v, 0.0, None)
    pi = np.zeros(P.shape[0])
    pi[states] = v / v.sum()
    return pi


def parry_measure(adjacency, alphabet: Alphabet | None = None) -> Markov:
    """Measure of maximal entropy on an irreducible subshift of finite type."""
    A = np.asarray(adjacency, dtype=float)
    vals, right = np.linalg.eig(A)
    i = int(np.argmax(vals.real))
    lam = float(vals[i].real)
    v = np.abs(right[:, i].real)
    vals_l, left = np.linalg.eig(A.T)
    u = np.abs(left[:, int(np.argmax(vals_l.real))].real)
    P = A * v[None, :] / (lam * v[:, None])
    P = P / P.sum(axis=1, keepdims=True)
    pi = u * v / (u @ v)
    return Markov(tuple(map(tuple, P)), tuple(pi / pi.sum()), alphabet)


def block_distribution(mu: MeasureSpec, n: int, budget: int = BLOCK_BUDGET) -> BlockDistribution:
    """Exact law of the first ``n`` coordinates under ``mu``."""
    return mu.block_distribution(n, budget)


def ergodic_components(mu: MeasureSpec) -> list[tuple[float, MeasureSpec]]:
    """Finite ergodic decomposition of Bernoulli, Markov and mixture measures.

    Markov chains split into their closed communicating classes weighted by
    stationary mass; mixtures are flattened into their components'
    decompositions.
    """
    if isinstance(mu, Bernoulli):
        return [(1.0, mu)]
    if isinstance(mu, Markov):
        P, pi = mu.P, mu.pi
        out = []
        for cls in _closed_classes(P):
            w = float(pi[cls].sum())
            if w <= 1e-15:
                continue
            Q = P.copy()
            outside = np.setdiff1d(np.arange(mu.k), cls)
            Q[outside] = np.eye(mu.k)[outside]
            sub_pi = np.zeros(mu.k)
            sub_pi[cls] = pi[cls] / w
            out.append((w, Markov(tuple(map(tuple, Q)), tuple(sub_pi), mu.alphabet)))
        total = sum(w for w, _ in out)
        return [(w / total, m) for w, m in out]
    if isinstance(mu, Mixture):
        out = []
        for w, comp in mu.components:
            out += [(w * v, m) for v, m in ergodic_components(comp)]
        return out
    raise DomainError(f"no finite ergodic decomposition for {mu.kind} measures")


def sample_orbit(mu: MeasureSpec, length: int, seed: int, stream: int = 0) -> np.ndarray:
    """Deterministic sample of ``length`` consecutive symbols of a typical orbit."""
    if length < 1:
        raise DomainError("length must be positive")
    return np.asarray(mu.sample(int(length), make_rng(seed, stream)), dtype=np.int64)


def point_mass(k: int, symbol: int = 0, alphabet: Alphabet | None = None) -> Bernoulli:
    """Dirac measure on the constant sequence ``symbol``."""
    p = np.zeros(k)
    p[symbol] = 1.0
    return Bernoulli(tuple(p), alphabet)
