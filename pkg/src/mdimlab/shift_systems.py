"""Full shifts, subshifts of finite type and rational rotations as finite systems.

A shift system is windowed to the coordinates ``[-W, H + W)`` and carries the
weighted product metric ``sum_i d(x_i, y_i) / 2^|i|`` restricted to that
range.  The left shift wraps the vacated coordinate around, so the dynamics is
a permutation of the admissible periodic words.  Under the wrap, the ``k``-th
iterate weights word position ``q`` by ``2^-|((q - k) mod L) - W|`` with
``L = H + 2W``; Bowen distances are maxima over these weight rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ResourceError
from .metric_core import TOL, Cover, CoverCount, FiniteMetricSystem, _check_order

DEFAULT_WORD_BUDGET = 1 << 20


@dataclass(frozen=True)
class Alphabet:
    """Finite alphabet embedded in ``[0, 1]`` with the absolute-difference metric."""

    symbols: tuple[float, ...]

    def __post_init__(self):
        s = np.asarray(self.symbols, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise DomainError("alphabet needs at least one symbol")
        if s.min() < 0 or s.max() > 1:
            raise DomainError("symbols must lie in [0, 1]")
        if np.any(np.diff(s) <= 0):
            raise DomainError("symbols must be strictly increasing")
        object.__setattr__(self, "symbols", tuple(float(v) for v in s))

    @classmethod
    def uniform(cls, m: int) -> "Alphabet":
        """``m`` evenly spaced symbols ``0, 1/(m-1), ..., 1`` (just ``0`` for ``m = 1``)."""
        if m < 1:
            raise DomainError("alphabet size must be positive")
        return cls((0.0,) if m == 1 else tuple(np.linspace(0.0, 1.0, m)))

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.symbols)

    @property
    def gap(self) -> float:
        """Smallest distance between distinct symbols (infinite for one symbol)."""
        return float(np.diff(self.values).min()) if self.size > 1 else math.inf

    @property
    def diam(self) -> float:
        return self.symbols[-1] - self.symbols[0]

    def span_classes(self, span: float) -> np.ndarray:
        """Group symbols left to right into runs of diameter at most ``span``.

        The run count is the least number of diameter-``span`` sets covering
        the alphabet (exact on a line).
        """
        labels = np.empty(self.size, dtype=np.int64)
        start, cls = self.symbols[0], 0
        for i, v in enumerate(self.symbols):
            if v - start > span + TOL * max(1.0, span):
                cls += 1
                start = v
            labels[i] = cls
        return labels

    def cover_count(self, span: float) -> int:
        return int(self.span_classes(span)[-1]) + 1

    def packing_count(self, sep: float) -> int:
        """Largest number of symbols pairwise farther than ``sep`` apart."""
        count, last = 1, self.symbols[0]
        for v in self.symbols[1:]:
            if v - last > sep + TOL * max(1.0, sep):
                count += 1
                last = v
        return count

    def spans(self) -> np.ndarray:
        """Distinct pairwise differences, the only spans at which ``cover_count`` changes."""
        v = self.values
        return np.unique(np.abs(v[:, None] - v[None, :]))


def product_distance(x, y, W: int) -> float:
    """Truncated product distance between words on the coordinates ``[-W, len - W)``.

    ``x`` and ``y`` hold symbol values; position ``q`` has weight ``2^-|q - W|``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("words must be 1-D and share a coordinate range")
    if not 0 <= W < max(1, x.size):
        raise DomainError(f"window W={W} does not fit a word of length {x.size}")
    weights = 2.0 ** -np.abs(np.arange(x.size) - W)
    return float(weights @ np.abs(x - y))


def count_admissible_words(adjacency, length: int, periodic: bool = False) -> int:
    """Number of admissible words of a given length, by matrix powers.

    Non-periodic words are paths (sum of entries of ``A^(length-1)``); periodic
    words also need the closing edge (trace of ``A^length``).
    """
    a = _adjacency(adjacency)
    mat = [[int(v) for v in row] for row in a]
    if length < 1:
        raise DomainError("word length must be positive")
    if periodic:
        return int(np.trace(_int_matpow(mat, length)))
    return int(np.sum(_int_matpow(mat, length - 1)))


def _int_matpow(mat, power):
    k = len(mat)
    out = np.eye(k, dtype=object)
    base = np.array(mat, dtype=object)
    while power:
        if power & 1:
            out = out.dot(base)
        base = base.dot(base)
        power >>= 1
    return out


def _adjacency(adjacency) -> np.ndarray:
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DomainError("adjacency must be a nonempty square matrix")
    if not np.isin(a, (0, 1)).all():
        raise DomainError("adjacency entries must be 0 or 1")
    return a.astype(np.int64)


def enumerate_words(adjacency, length: int, periodic: bool = True) -> np.ndarray:
    """All admissible words of ``length`` as rows of symbol indices, lexicographic."""
    a = _adjacency(adjacency).astype(bool)
    k = a.shape[0]
    words = np.arange(k, dtype=np.int64)[:, None]
    for _ in range(length - 1):
        last = words[:, -1]
        rows, nxt = np.nonzero(a[last])
        words = np.concatenate([words[rows], nxt[:, None]], axis=1)
    if periodic:
        words = words[a[words[:, -1], words[:, 0]]]
    order = np.lexsort(words.T[::-1])
    return words[order]


class ShiftWindowSystem(FiniteMetricSystem):
    """Windowed shift space over an alphabet, with the wrapped left shift.

    Parameters
    ----------
    alphabet : Alphabet
    window : int
        Tail length ``W`` on each side of the horizon.
    horizon : int
        Number of central coordinates ``H``; Bowen orders up to ``H`` are meant.
    adjacency : array_like, optional
        0/1 transition matrix; ``None`` means the full shift.
    lazy : bool
        Skip enumeration.  For full shifts the product-structure covering
        bracket is still available; lazy subshifts only serve as containers
        for Bowen-ball computations.
    budget : int
        Largest number of words to enumerate.
    """

    def __init__(self, alphabet: Alphabet, window: int, horizon: int, adjacency=None, *,
                 lazy: bool = False, budget: int = DEFAULT_WORD_BUDGET, label: str = ""):
        if window < 0 or horizon < 1:
            raise DomainError("need window >= 0 and horizon >= 1")
        self.alphabet = alphabet
        self.window = int(window)
        self.horizon = int(horizon)
        self.length = self.horizon + 2 * self.window
        m = alphabet.size
        if adjacency is not None:
            adjacency = _adjacency(adjacency)
            if adjacency.shape[0] != m:
                raise DomainError("adjacency size does not match the alphabet")
            if adjacency.all():
                adjacency = None
        self.adjacency = adjacency
        self.label = label or (
            f"{'full_shift' if adjacency is None else 'sft'}(m={m},W={window},H={horizon})")
        self._bowen = {}
        self._weights = self._weight_rows()
        if adjacency is None:
            self._count = m ** self.length
        else:
            self._count = count_admissible_words(adjacency, self.length, periodic=True)
            if self._count == 0:
                raise DomainError("subshift has no periodic word of the window length")
        self.lazy = bool(lazy)
        self.words = None
        self.dynamics = None
        if not lazy:
            if self._count > budget:
                raise ResourceError(f"{self._count} words exceed the budget {budget}", self._count)
            self._enumerate()

    # -- construction ------------------------------------------------------
    def _weight_rows(self) -> np.ndarray:
        L, W = self.length, self.window
        q = np.arange(L)
        k = np.arange(L)[:, None]
        return 2.0 ** -np.abs(((q - k) % L) - W)

    def _enumerate(self) -> None:
        m, L = self.alphabet.size, self.length
        if self.adjacency is None:
            words = np.stack(np.unravel_index(np.arange(m ** L), (m,) * L), axis=1).astype(np.int64)
        else:
            words = enumerate_words(self.adjacency, L, periodic=True)
        self.words = words
        self._values = self.alphabet.values[words]
        index = {w.tobytes(): i for i, w in enumerate(words)}
        shifted = np.roll(words, -1, axis=1)
        self.dynamics = np.fromiter((index[w.tobytes()] for w in shifted), dtype=np.int64,
                                    count=len(words))
        if not np.array_equal(np.sort(self.dynamics), np.arange(len(words))):
            raise AssertionError("wrapped shift is not a permutation")
        self._index = index

    # -- FiniteMetricSystem interface --------------------------------------
    @property
    def n_points(self) -> int:
        return self._count

    @property
    def can_enumerate(self) -> bool:
        return not self.lazy

    @property
    def tail_bound(self) -> float:
        return self.alphabet.diam * 2.0 ** (1 - self.window)

    @property
    def is_full_shift(self) -> bool:
        return self.adjacency is None

    def _require_words(self):
        if self.lazy:
            raise ResourceError("operation needs enumerated words; system is lazy", self._count)

    def index_of(self, word: Sequence[int]) -> int:
        self._require_words()
        return self._index[np.asarray(word, dtype=np.int64).tobytes()]

    def weights(self, n: int) -> np.ndarray:
        """Weight rows ``w^(k)`` for ``k < n``, shape ``(n, L)``."""
        _check_order(n)
        if n > self.length:
            raise DomainError(f"Bowen order {n} exceeds the word length {self.length}")
        return self._weights[:n]

    def coordinate_weights(self, n: int) -> np.ndarray:
        """``omega_q = max_k w^(k)_q``: how strongly ``rho_n`` sees position ``q``."""
        return self.weights(n).max(axis=0)

    def matrix(self, n: int = 1) -> np.ndarray:
        if 1 not in self._bowen:
            self._require_words()
            if self.n_points > self.dense_limit:
                raise ResourceError(f"dense table needs {self.n_points}^2 entries", self.n_points ** 2)
            vals = self._values
            w = self._weights[0]
            d = np.zeros((self.n_points, self.n_points))
            for q in range(self.length):
                d += w[q] * np.abs(vals[:, q, None] - vals[None, :, q])
            self._bowen[1] = d
        return super().matrix(n)

    def dist_rows(self, rows, n: int = 1, cols=None) -> np.ndarray:
        self._require_words()
        rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
        if self.n_points <= self.dense_limit:
            return super().dist_rows(rows, n, cols)
        cols = np.arange(self.n_points) if cols is None else np.asarray(cols, dtype=np.int64)
        w = self.weights(n).T
        out = np.empty((rows.size, cols.size))
        cv = self._values[cols]
        step = max(1, 4_000_000 // max(1, cols.size * self.length))
        for s in range(0, rows.size, step):
            diff = np.abs(self._values[rows[s:s + step], None, :] - cv[None, :, :])
            out[s:s + step] = (diff @ w).max(axis=-1)
        return out

    def diameter(self, n: int = 1) -> float:
        if self.is_full_shift:
            _check_order(n)
            return float(self._weights[0].sum() * self.alphabet.diam)
        return super().diameter(n)

    # -- product-structure shortcuts ---------------------------------------
    def span_allocation(self, eps: float, n: int) -> np.ndarray:
        """Per-position symbol spans whose product cells have ``rho_n``-diameter <= eps.

        Positions are visited from the least to the most visible; each takes
        the smallest span that reaches its least feasible symbol-run count.
        """
        w = self.weights(n)
        omega = w.max(axis=0)
        spans = self.alphabet.spans()
        counts = np.array([self.alphabet.cover_count(s) for s in spans])
        load = np.zeros(w.shape[0])
        out = np.zeros(self.length)
        limit = eps + TOL * max(1.0, eps)
        for q in np.argsort(omega, kind="stable"):
            feasible = [i for i, s in enumerate(spans) if np.all(load + w[:, q] * s <= limit)]
            best = min(feasible, key=lambda i: (counts[i], spans[i]))
            out[q] = spans[best]
            load += w[:, q] * spans[best]
        return out

    def structured_cover_bracket(self, eps: float, n: int) -> CoverCount | None:
        """Covering bracket from the product structure of the window.

        Lower: for a full shift, products of one-dimensional packings at
        separation ``eps / omega_q``; for any enumerated system, the number of
        distinct restrictions to positions with ``omega_q * gap > eps``.
        Upper: number of nonempty product cells from ``span_allocation``.
        """
        if n > self.length or (self.lazy and not self.is_full_shift):
            return None
        omega = self.coordinate_weights(n)
        spans = self.span_allocation(eps, n)
        a = self.alphabet
        lower = 1
        if self.is_full_shift:
            for o in omega:
                lower *= a.packing_count(eps / o)
        if self.lazy:
            upper = 1
            for s in spans:
                upper *= a.cover_count(s)
        else:
            seen = omega * a.gap > eps + TOL * max(1.0, eps)
            if seen.any():
                lower = max(lower, _distinct_rows(self.words[:, seen]))
            groups = np.stack([a.span_classes(s)[self.words[:, q]] for q, s in enumerate(spans)], axis=1)
            upper = _distinct_rows(groups)
        return CoverCount(lower, upper, "exact" if lower == upper else "bracket:structured")

    def structured_lebesgue(self, cover: Cover, n: int) -> float | None:
        if cover.cylinder_coords is None or not self.is_full_shift or n > self.length:
            return None
        omega = self.coordinate_weights(n)
        return float(min(min(omega[list(cover.cylinder_coords)]) * self.alphabet.gap,
                         self.diameter(n)))

    def structured_cover_diameter(self, cover: Cover, n: int) -> float | None:
        if cover.cylinder_coords is None or not self.is_full_shift or n > self.length:
            return None
        free = np.ones(self.length, dtype=bool)
        free[list(cover.cylinder_coords)] = False
        return float((self.weights(n)[:, free].sum(axis=1)).max() * self.alphabet.diam)


def _distinct_rows(a: np.ndarray) -> int:
    return int(np.unique(np.ascontiguousarray(a), axis=0).shape[0])


def cylinder_cover(sys: ShiftWindowSystem, coords: Sequence[int] = (0,)) -> Cover:
    """Partition into cylinders fixing the symbols at the given coordinates.

    Coordinates are relative to the centre, so ``0`` is the time-zero symbol.
    """
    sys._require_words()
    pos = [sys.window + c for c in coords]
    if any(p < 0 or p >= sys.length for p in pos):
        raise DomainError("cylinder coordinate outside the window")
    keys = sys.words[:, pos]
    _, labels = np.unique(keys, axis=0, return_inverse=True)
    return Cover.from_labels(labels.ravel(), cylinder_coords=tuple(pos))


def build_full_shift(m: int, W: int, n_max: int, *, alphabet: Alphabet | None = None,
                     lazy: bool = False, budget: int = DEFAULT_WORD_BUDGET) -> ShiftWindowSystem:
    """Full shift on ``m`` evenly spaced symbols, windowed to ``[-W, n_max + W)``."""
    if m < 2 and alphabet is None:
        raise DomainError("full shift needs m >= 2")
    alphabet = alphabet or Alphabet.uniform(m)
    return ShiftWindowSystem(alphabet, W, n_max, lazy=lazy, budget=budget)


def build_sft(adjacency, embedding: Alphabet | None = None, W: int = 0, n_max: int = 1, *,
              lazy: bool = False, budget: int = DEFAULT_WORD_BUDGET) -> ShiftWindowSystem:
    """Subshift of finite type on periodic admissible words of length ``n_max + 2W``."""
    a = _adjacency(adjacency)
    # a cycle exists iff some closed path of length <= k exists
    if not any(count_admissible_words(a, j, periodic=True) for j in range(1, a.shape[0] + 1)):
        raise DomainError("adjacency has no cycle: the subshift is empty")
    embedding = embedding or Alphabet.uniform(a.shape[0])
    return ShiftWindowSystem(embedding, W, n_max, adjacency=a, lazy=lazy, budget=budget)


def build_rotation(p: int, q: int) -> FiniteMetricSystem:
    """Rotation by ``p/q`` on ``q`` equally spaced circle points with the arc metric."""
    if q < 1:
        raise DomainError("q must be positive")
    if math.gcd(p, q) != 1:
        raise DomainError(f"gcd({p}, {q}) != 1")
    j = np.arange(q)
    gap = np.abs(j[:, None] - j[None, :])
    dist = np.minimum(gap, q - gap) / q
    dyn = (j + p) % q
    sys = FiniteMetricSystem(dist, dyn, label=f"rotation(p={p},q={q})")
    if not np.array_equal(dist[np.ix_(dyn, dyn)], dist):
        raise AssertionError("rotation is not an isometry")
    return sys


GOLDEN_MEAN = np.array([[1, 1], [1, 0]])
