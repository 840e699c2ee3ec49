"""Pure-Python decoding kernels (fallback for the compiled extension).

Each kernel decodes one block in *working order*: ``cols[i]`` is the H
column of the i-th working position packed into uint64 words and ``s0`` is
the hard-decision syndrome. All return

    (found, n_p, score, pattern, bitops, comparisons, copies, max_stack, dp_cells)

with ``pattern`` a uint8 vector over working positions.
"""
from __future__ import annotations

import math

import numpy as np

from .sources import CombinationSource, DPTable, DSGrandSource, SGrandSource

NAME = "python"


def _to_int(words) -> int:
    out = 0
    for t, word in enumerate(np.asarray(words, dtype=np.uint64).tolist()):
        out |= int(word) << (64 * t)
    return out


def _column_ints(cols) -> list[int]:
    return [_to_int(row) for row in np.asarray(cols, dtype=np.uint64)]


def charge(syn: int, rwc) -> int:
    """Bit operations spent checking rows in order up to the first failing one."""
    if syn:
        return int(rwc[(syn & -syn).bit_length() - 1])
    return int(rwc[-1]) if len(rwc) else 0


def drive(source, s0: int, budget: int, smax, rwc):
    """The GRAND loop over a bound source: (found, n_p, score, mask, bitops)."""
    n_p = 1
    bitops = charge(s0, rwc)
    if s0 == 0:
        return True, n_p, 0, 0, bitops
    while True:
        item = source.next()
        if item is None:
            return False, n_p, None, 0, bitops
        mask, score = item
        if smax is not None and score > smax:
            return False, n_p, None, 0, bitops
        if n_p >= budget:
            return False, n_p, None, 0, bitops
        n_p += 1
        syn = s0 ^ source.payload
        bitops += charge(syn, rwc)
        if syn == 0:
            return True, n_p, score, mask, bitops


def _finish(m, source, found, n_p, score, mask, bitops):
    pattern = np.zeros(m, dtype=np.uint8)
    for i in range(m):
        if (mask >> i) & 1:
            pattern[i] = 1
    ops = source.ops
    return (found, n_p, score, pattern, bitops, ops["comparisons"], ops["copies"],
            ops["max_stack"], ops["dp_cells"])


def new_table(weights, capacity: int) -> DPTable:
    return DPTable([int(x) for x in weights], int(capacity))


def dsgrand(cols, s0, weights, smax: int, budget: int, rwc, table: DPTable | None = None):
    m = len(weights)
    if table is None:
        table = new_table(weights, smax)
    src = DSGrandSource(weights, smax, None, table).bind(_column_ints(cols))
    found, n_p, score, mask, bitops = drive(src, _to_int(s0), budget, None, rwc)
    return _finish(m, src, found, n_p, score, mask, bitops)


def sgrand(cols, s0, rel, smax: float, budget: int, rwc):
    m = len(rel)
    src = SGrandSource(rel, range(m)).bind(_column_ints(cols))
    limit = None if math.isinf(smax) else smax
    found, n_p, score, mask, bitops = drive(src, _to_int(s0), budget, limit, rwc)
    return _finish(m, src, found, n_p, score, mask, bitops)


def combos(cols, s0, max_weight: int, budget: int, rwc):
    m = len(cols)
    src = CombinationSource(m, range(m), max_weight).bind(_column_ints(cols))
    found, n_p, score, mask, bitops = drive(src, _to_int(s0), budget, None, rwc)
    return _finish(m, src, found, n_p, score, mask, bitops)
