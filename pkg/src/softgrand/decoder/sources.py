"""Error-pattern generators for GRAND, in pure Python.

Every source emits ``(mask, score)`` pairs where bit ``j`` of ``mask`` flips
position ``j``. Scores never decrease and no pattern repeats. A source can be
bound to one integer per position (typically the columns of H packed as
ints); it then keeps ``payload``, the XOR of the bound values over the flipped
positions of the last emitted pattern, so syndromes are updated
incrementally instead of recomputed.

Sources that work on an ordering of the positions (all but the hard-decision
one) take ``positions``: entry ``i`` is the original index of the ``i``-th
position in the working order.

These classes are also the reference implementation for the compiled
kernels; both count operations identically.
"""
from __future__ import annotations

import itertools
from typing import Iterator, Sequence

import numpy as np

from ..errors import ConfigurationError

MAX_DP_CELLS = 1 << 30


class PatternSource:
    """Base class. Subclasses implement :meth:`next`."""

    def __init__(self, n: int):
        self.n = n
        self.payload = 0
        self._vec: list[int] = [0] * n
        self.ops = {"comparisons": 0, "copies": 0, "max_stack": 0, "dp_cells": 0}

    def bind(self, values: Sequence[int]) -> "PatternSource":
        if len(values) != self.n:
            raise ValueError(f"need {self.n} bound values, got {len(values)}")
        self._vec = [int(v) for v in values]
        return self

    def next(self) -> tuple[int, float] | None:
        raise NotImplementedError

    def __iter__(self) -> Iterator[tuple[int, float]]:
        while True:
            item = self.next()
            if item is None:
                return
            yield item


def _positions(n: int, positions) -> list[int]:
    if positions is None:
        return list(range(n))
    pos = [int(p) for p in positions]
    if sorted(pos) != list(range(n)):
        raise ValueError("positions must be a permutation of range(n)")
    return pos


def reliability_order(rel) -> np.ndarray:
    """Positions sorted by ascending reliability; ties keep index order."""
    return np.argsort(np.asarray(rel, dtype=np.float64), kind="stable")


# ---------------------------------------------------------------------------
# Hamming-weight order
# ---------------------------------------------------------------------------

class CombinationSource(PatternSource):
    """Flip sets of the listed positions by increasing size.

    Within one size, sets come in lexicographic order of their indices in
    ``candidates``. Score is the number of flips.
    """

    def __init__(self, n: int, candidates: Sequence[int], max_weight: int | None = None):
        super().__init__(n)
        self.candidates = [int(c) for c in candidates]
        m = len(self.candidates)
        self.max_weight = m if max_weight is None else min(int(max_weight), m)
        if self.max_weight < 0:
            raise ValueError("max_weight must be >= 0")
        self._weight = 0
        self._it: Iterator[tuple[int, ...]] = iter(())

    def next(self):
        while True:
            combo = next(self._it, None)
            if combo is not None:
                mask = payload = 0
                for t in combo:
                    p = self.candidates[t]
                    mask |= 1 << p
                    payload ^= self._vec[p]
                self.payload = payload
                return mask, self._weight
            if self._weight >= self.max_weight:
                return None
            self._weight += 1
            self._it = itertools.combinations(range(len(self.candidates)), self._weight)


def hard_pattern_source(n: int, max_weight: int | None = None) -> CombinationSource:
    if max_weight is not None and max_weight > n:
        raise ValueError("max_weight cannot exceed n")
    return CombinationSource(n, range(n), max_weight)


def srgrand_pattern_source(rel, delta: float, max_weight: int | None = None) -> CombinationSource:
    """Hard-GRAND order over positions with reliability below ``delta``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    rel = np.asarray(rel, dtype=np.float64)
    return CombinationSource(len(rel), np.flatnonzero(rel < delta), max_weight)


# ---------------------------------------------------------------------------
# Real-valued scores: priority queue
# ---------------------------------------------------------------------------

class SGrandSource(PatternSource):
    """All nonempty patterns by exact real score, smallest first.

    Works on positions sorted by reliability. Each queue node is a pattern
    whose largest sorted index is ``j``; popping it yields the extension
    (add ``j+1``) and the shift (move ``j`` to ``j+1``). Ties in score are
    broken by insertion order.
    """

    def __init__(self, rel, positions=None):
        rel = np.asarray(rel, dtype=np.float64)
        n = len(rel)
        super().__init__(n)
        if positions is None:
            positions = reliability_order(rel)
        self.pos = _positions(n, positions)
        self.rel = [float(rel[p]) for p in self.pos]
        self._heap: list[list] = []
        self._seq = 0
        self._pending = None
        self._started = False

    def _less(self, a, b) -> bool:
        self.ops["comparisons"] += 1
        return a[0] < b[0] or (a[0] == b[0] and a[1] < b[1])

    def _push(self, node) -> None:
        heap = self._heap
        heap.append(node)
        k = len(heap) - 1
        while k > 0:
            parent = (k - 1) >> 1
            if self._less(node, heap[parent]):
                heap[k] = heap[parent]
                k = parent
            else:
                break
        heap[k] = node
        if len(heap) > self.ops["max_stack"]:
            self.ops["max_stack"] = len(heap)

    def _pop(self):
        heap = self._heap
        top = heap[0]
        last = heap.pop()
        size = len(heap)
        if size:
            k = 0
            while True:
                child = 2 * k + 1
                if child >= size:
                    break
                if child + 1 < size and self._less(heap[child + 1], heap[child]):
                    child += 1
                if self._less(heap[child], last):
                    heap[k] = heap[child]
                    k = child
                else:
                    break
            heap[k] = last
        return top

    def _node(self, score, j, mask, payload):
        node = [score, self._seq, j, mask, payload]
        self._seq += 1
        return node

    def next(self):
        n = self.n
        if not self._started:
            self._started = True
            if n == 0:
                return None
            p = self.pos[0]
            self._push(self._node(self.rel[0], 0, 1 << p, self._vec[p]))
        elif self._pending is not None:
            score, _, j, mask, payload = self._pending
            self._pending = None
            if j < n - 1:
                a, b = self.pos[j], self.pos[j + 1]
                self.ops["copies"] += 1
                self._push(self._node(score + self.rel[j + 1], j + 1, mask | (1 << b),
                                      payload ^ self._vec[b]))
                self._push(self._node((score - self.rel[j]) + self.rel[j + 1], j + 1,
                                      mask ^ (1 << a) ^ (1 << b),
                                      payload ^ self._vec[a] ^ self._vec[b]))
        if not self._heap:
            return None
        node = self._pop()
        self._pending = node
        self.payload = node[4]
        return node[3], node[0]


def sgrand_pattern_source(rel) -> SGrandSource:
    return SGrandSource(rel)


# ---------------------------------------------------------------------------
# Integer scores: subset-sum table and stack
# ---------------------------------------------------------------------------

class DPTable:
    """Lazily filled subset-sum table over integer weights.

    ``column(s)`` is an int whose bit ``i`` says whether some nonempty subset
    of ``weights[0..i]`` sums to ``s``. Columns are filled in order on demand
    and can be shared by every source with the same weights.
    """

    def __init__(self, weights: Sequence[int], capacity: int):
        w = [int(x) for x in weights]
        if any(x < 1 for x in w):
            raise ConfigurationError("weights must be positive integers")
        if len(w) * (capacity + 1) > MAX_DP_CELLS:
            raise ConfigurationError(f"s_max={capacity} exceeds the DP table capacity for n={len(w)}")
        self.weights = w
        self.capacity = capacity
        self.columns: list[int] = [0]
        self.cells = 0

    def column(self, s: int) -> int:
        cols = self.columns
        if s > self.capacity:
            raise ConfigurationError(f"score {s} beyond DP capacity {self.capacity}")
        w = self.weights
        while len(cols) <= s:
            t = len(cols)
            col = 0
            prev = 0
            for i, wi in enumerate(w):
                bit = prev or wi == t
                if not bit and t - wi >= 0:
                    bit = i > 0 and (cols[t - wi] >> (i - 1)) & 1
                if bit:
                    col |= 1 << i
                prev = 1 if bit else 0
            cols.append(col)
            self.cells += len(w)
        return cols[s]

    def lookup(self, i: int, s: int) -> bool:
        return bool((self.columns[s] >> i) & 1)


class DSGrandSource(PatternSource):
    """Patterns with score exactly s = 1, 2, ..., s_max, via the subset-sum table.

    Frames are ``[i, j, d, mask, payload]``: the pattern's lowest set index
    (in working order) is ``i``, ``j`` is the score still to be collected from
    indices ``<= i`` and ``d = j - w_i`` is what remains below ``i``. A frame
    with ``d == 0`` is a complete pattern. Children of a popped frame are
    pushed on the following call, after the caller has tested the pattern.
    """

    def __init__(self, weights, s_max: int | None = None, positions=None, table: DPTable | None = None):
        w = [int(x) for x in weights]
        n = len(w)
        super().__init__(n)
        self.pos = _positions(n, positions)
        self.w = w
        self.s_max = sum(w) if s_max is None else int(s_max)
        if self.s_max < 0:
            raise ValueError("s_max must be >= 0")
        if table is None:
            table = DPTable(w, self.s_max)
        elif table.weights != w or table.capacity < self.s_max:
            raise ValueError("shared DP table does not match these weights")
        self.table = table
        self._cells0 = table.cells
        self._s = 0
        self._stack: list[list] = []
        self._pending = None

    def _expand(self, frame) -> None:
        i, j, d, mask, payload = frame
        ops = self.ops
        if i == 0:
            return
        w, pos, vec, col = self.w, self.pos, self._vec, self.table.columns
        ops["comparisons"] += 1
        ex = (col[j] >> (i - 1)) & 1
        inc = 0
        if j - w[i] >= 0:
            ops["comparisons"] += 1
            inc = (col[j - w[i]] >> (i - 1)) & 1
        a, b = pos[i], pos[i - 1]
        if ex:
            if inc:
                ops["copies"] += 1
            self._stack.append([i - 1, j, d + w[i] - w[i - 1], mask ^ (1 << a) ^ (1 << b),
                                payload ^ vec[a] ^ vec[b]])
        if inc:
            self._stack.append([i - 1, j - w[i], d - w[i - 1], mask | (1 << b), payload ^ vec[b]])
        if len(self._stack) > ops["max_stack"]:
            ops["max_stack"] = len(self._stack)

    def next(self):
        n = self.n
        if self._pending is not None:
            frame, self._pending = self._pending, None
            self._expand(frame)
        stack = self._stack
        while True:
            while stack:
                frame = stack.pop()
                self.ops["comparisons"] += 1
                if frame[2] == 0:
                    self._pending = frame
                    self.payload = frame[4]
                    return frame[3], self._s
                self._expand(frame)
            if n == 0:
                return None
            # advance to the next reachable score
            while True:
                self._s += 1
                if self._s > self.s_max:
                    self.ops["dp_cells"] = self.table.cells - self._cells0
                    return None
                col = self.table.column(self._s)
                self.ops["dp_cells"] = self.table.cells - self._cells0
                if (col >> (n - 1)) & 1:
                    break
            p = self.pos[n - 1]
            stack.append([n - 1, self._s, self._s - self.w[n - 1], 1 << p, self._vec[p]])
            if len(stack) > self.ops["max_stack"]:
                self.ops["max_stack"] = len(stack)

    @property
    def score(self) -> int:
        return self._s


def dsgrand_pattern_source(weights, s_max: int | None = None) -> DSGrandSource:
    return DSGrandSource(weights, s_max)


def orbgrand_weights(n: int) -> list[int]:
    return list(range(1, n + 1))


def orbgrand_pattern_source(rel, table: DPTable | None = None) -> DSGrandSource:
    """Rank weights 1..n on the reliability order, run through the subset-sum engine."""
    rel = np.asarray(rel, dtype=np.float64)
    n = len(rel)
    return DSGrandSource(orbgrand_weights(n), n * (n + 1) // 2, reliability_order(rel), table)


def pattern_score(mask: int, weights) -> float:
    total = 0
    j = 0
    while mask:
        if mask & 1:
            total += weights[j]
        mask >>= 1
        j += 1
    return total

