"""Binary linear block codes: construction, membership and file I/O.

Bit ordering convention used throughout: position ``j`` of a length-``n``
word holds the coefficient of ``x**(n-1-j)`` when the word is read as a
polynomial (most significant coefficient first). Systematic constructions
therefore place the message first and the parity last, and their
parity-check matrices take the form ``[P^T | I]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import CodeFormatError, ConfigurationError

# Primitive polynomials over GF(2), bit i = coefficient of x^i.
PRIMITIVE_POLYNOMIALS = {
    2: 0b111,            # x^2 + x + 1
    3: 0b1011,           # x^3 + x + 1
    4: 0b10011,          # x^4 + x + 1
    5: 0b100101,         # x^5 + x^2 + 1
    6: 0b1000011,        # x^6 + x + 1
    7: 0b10001001,       # x^7 + x^3 + 1
    8: 0b100011101,      # x^8 + x^4 + x^3 + x^2 + 1
    9: 0b1000010001,     # x^9 + x^4 + 1
    10: 0b10000001001,   # x^10 + x^3 + 1
}


# ---------------------------------------------------------------------------
# GF(2) polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BinaryPolynomial:
    """Polynomial over GF(2) packed into an int (bit i is the x^i coefficient)."""

    bits: int

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("polynomial bits must be non-negative")

    @classmethod
    def from_coefficients(cls, coefficients) -> "BinaryPolynomial":
        """Build from a bit sequence, lowest degree first."""
        bits = 0
        for i, c in enumerate(coefficients):
            if c not in (0, 1):
                raise ValueError(f"coefficient {c!r} is not a bit")
            bits |= int(c) << i
        return cls(bits)

    @classmethod
    def from_exponents(cls, *exponents: int) -> "BinaryPolynomial":
        bits = 0
        for e in exponents:
            bits ^= 1 << e
        return cls(bits)

    @classmethod
    def from_crc_hex(cls, value: int, width: int, notation: str = "koopman") -> "BinaryPolynomial":
        """Interpret a CRC polynomial literal of the given width.

        ``koopman``: the literal holds x^width .. x^1, the +1 term is implicit
        (0x710 with width 11 is x^11 + x^10 + x^9 + x^5 + 1).
        ``normal``: the literal holds x^(width-1) .. x^0, the x^width term is
        implicit.
        """
        if value <= 0 or value >= 1 << width:
            raise ConfigurationError(f"CRC literal {value:#x} does not fit in {width} bits")
        if notation == "koopman":
            return cls((value << 1) | 1)
        if notation == "normal":
            return cls(value | (1 << width))
        raise ConfigurationError(f"unknown CRC notation {notation!r}")

    @property
    def degree(self) -> int:
        return self.bits.bit_length() - 1

    @property
    def coefficients(self) -> tuple[int, ...]:
        if self.bits == 0:
            return (0,)
        return tuple((self.bits >> i) & 1 for i in range(self.degree + 1))

    def __mul__(self, other: "BinaryPolynomial") -> "BinaryPolynomial":
        return BinaryPolynomial(_clmul(self.bits, other.bits))

    def __mod__(self, other: "BinaryPolynomial") -> "BinaryPolynomial":
        return BinaryPolynomial(_polymod(self.bits, other.bits))

    def divides(self, other: "BinaryPolynomial") -> bool:
        return _polymod(other.bits, self.bits) == 0

    def __str__(self) -> str:
        if self.bits == 0:
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            if (self.bits >> i) & 1:
                terms.append("1" if i == 0 else ("x" if i == 1 else f"x^{i}"))
        return " + ".join(terms)


def _clmul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def _polymod(a: int, m: int) -> int:
    if m == 0:
        raise ZeroDivisionError("polynomial modulus is zero")
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


# ---------------------------------------------------------------------------
# GF(2) linear algebra
# ---------------------------------------------------------------------------

def _pack_rows(matrix: np.ndarray) -> list[int]:
    weights = 1 << np.arange(matrix.shape[1], dtype=object)
    return [int((row.astype(object) * weights).sum()) for row in matrix]


def gf2_rank(matrix) -> int:
    """Rank over GF(2) by Gaussian elimination on bit-packed rows."""
    rows = _pack_rows(np.asarray(matrix, dtype=np.uint8))
    rank = 0
    pivots: dict[int, int] = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top not in pivots:
                pivots[top] = r
                rank += 1
                break
            r ^= pivots[top]
    return rank


def _as_bit_matrix(data, name: str) -> np.ndarray:
    m = np.array(data, dtype=np.uint8, copy=True)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise CodeFormatError(f"{name} must be a non-empty 2-D bit matrix")
    if np.any(m > 1):
        raise CodeFormatError(f"{name} has entries outside {{0,1}}")
    m.setflags(write=False)
    return m


# ---------------------------------------------------------------------------
# LinearCode
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinearCode:
    """An (n, k) binary linear code given by its parity-check matrix.

    ``G`` is optional; without it the code can decode but not encode.
    Instances are immutable and safe to share between workers.
    """

    H: np.ndarray
    G: np.ndarray | None = None
    name: str = field(default="code")

    def __post_init__(self):
        H = _as_bit_matrix(self.H, "H")
        object.__setattr__(self, "H", H)
        r, n = H.shape
        if r >= n:
            raise CodeFormatError(f"H has {r} rows for length {n}; need n-k < n")
        if gf2_rank(H) != r:
            raise CodeFormatError("H is rank deficient over GF(2)")
        if self.G is not None:
            G = _as_bit_matrix(self.G, "G")
            object.__setattr__(self, "G", G)
            if G.shape != (n - r, n):
                raise CodeFormatError(f"G has shape {G.shape}, expected {(n - r, n)}")
            if np.any((G.astype(np.int64) @ H.T.astype(np.int64)) % 2):
                raise CodeFormatError("G H^T != 0 over GF(2)")
            if gf2_rank(G) != n - r:
                raise CodeFormatError("G is rank deficient over GF(2)")

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def k(self) -> int:
        return self.H.shape[1] - self.H.shape[0]

    @property
    def redundancy(self) -> int:
        return self.H.shape[0]

    @cached_property
    def row_masks(self) -> tuple[int, ...]:
        """Rows of H packed as ints, bit j = column j."""
        return tuple(_pack_rows(self.H))

    @cached_property
    def column_masks(self) -> tuple[int, ...]:
        """Columns of H packed as ints, bit t = row t."""
        return tuple(_pack_rows(self.H.T))

    @cached_property
    def column_words(self) -> np.ndarray:
        """Columns of H packed into uint64 words, shape (n, ceil((n-k)/64))."""
        r = self.redundancy
        W = (r + 63) // 64
        out = np.zeros((self.n, W), dtype=np.uint64)
        for j, mask in enumerate(self.column_masks):
            for w in range(W):
                out[j, w] = (mask >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
        out.setflags(write=False)
        return out

    @cached_property
    def row_weight_cumsum(self) -> np.ndarray:
        """Cumulative row weights of H; entry t is the XOR count of checking rows 0..t."""
        out = np.cumsum(self.H.sum(axis=1, dtype=np.int64))
        out.setflags(write=False)
        return out

    def encode(self, messages) -> np.ndarray:
        """Map message rows (..., k) to codewords (..., n) via G."""
        if self.G is None:
            raise ConfigurationError(f"code {self.name!r} has no generator matrix; cannot encode")
        u = np.asarray(messages, dtype=np.uint8)
        if u.shape[-1] != self.k:
            raise ValueError(f"message length {u.shape[-1]} != k={self.k}")
        return ((u.astype(np.int64) @ self.G.astype(np.int64)) % 2).astype(np.uint8)

    def __repr__(self) -> str:
        return f"LinearCode({self.name!r}, n={self.n}, k={self.k})"


def _check_word(code: LinearCode, word) -> np.ndarray:
    w = np.asarray(word, dtype=np.uint8)
    if w.ndim != 1 or w.shape[0] != code.n:
        raise ValueError(f"word length {w.shape} does not match n={code.n}")
    return w


def word_to_mask(word) -> int:
    """Pack a bit sequence into an int, bit j = position j."""
    mask = 0
    for j in np.flatnonzero(np.asarray(word, dtype=np.uint8)):
        mask |= 1 << int(j)
    return mask


def mask_to_word(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> j) & 1 for j in range(n)], dtype=np.uint8)


def syndrome(code: LinearCode, word) -> np.ndarray:
    """H word^T over GF(2)."""
    w = _check_word(code, word)
    return ((code.H.astype(np.int64) @ w.astype(np.int64)) % 2).astype(np.uint8)


def is_codeword(code: LinearCode, word, counter: dict | None = None) -> bool:
    """Membership test that stops at the first unsatisfied parity equation.

    If ``counter`` is given, ``counter["parity_checks"]`` and
    ``counter["syndrome_bitops"]`` are incremented by the number of equations
    evaluated and the XORs they cost.
    """
    w = _check_word(code, word)
    mask = word_to_mask(w)
    checks = bitops = 0
    ok = True
    for row in code.row_masks:
        checks += 1
        bitops += row.bit_count()
        if (row & mask).bit_count() & 1:
            ok = False
            break
    if counter is not None:
        counter["parity_checks"] = counter.get("parity_checks", 0) + checks
        counter["syndrome_bitops"] = counter.get("syndrome_bitops", 0) + bitops
    return ok


# ---------------------------------------------------------------------------
# Constructions
# ---------------------------------------------------------------------------

def _remainder_columns(n: int, g: BinaryPolynomial) -> np.ndarray:
    """H whose column j is x^(n-1-j) mod g, row t holding the x^(r-1-t) coefficient."""
    r = g.degree
    H = np.zeros((r, n), dtype=np.uint8)
    for j in range(n):
        rem = _polymod(1 << (n - 1 - j), g.bits)
        for t in range(r):
            H[t, j] = (rem >> (r - 1 - t)) & 1
    return H


def crc_code(n: int, poly: BinaryPolynomial, name: str | None = None) -> LinearCode:
    """Systematic CRC code: codeword = (message, remainder of message * x^r mod poly)."""
    r = poly.degree
    if poly.bits == 0 or r < 1 or r >= n:
        raise ConfigurationError(f"degenerate CRC polynomial {poly} for n={n}")
    if not poly.bits & 1:
        raise ConfigurationError(f"CRC polynomial {poly} has no constant term")
    k = n - r
    H = _remainder_columns(n, poly)
    G = np.zeros((k, n), dtype=np.uint8)
    G[:, :k] = np.eye(k, dtype=np.uint8)
    G[:, k:] = H[:, :k].T
    return LinearCode(H, G, name or f"crc-{n}-{k}")


def cyclic_code_from_generator(n: int, g: BinaryPolynomial, name: str | None = None) -> LinearCode:
    """Cyclic code of length n generated by g, with G rows x^i g(x)."""
    xn1 = (1 << n) | 1
    if g.bits == 0 or g.degree >= n or _polymod(xn1, g.bits) != 0:
        raise ConfigurationError(f"{g} does not divide x^{n} + 1")
    r = g.degree
    k = n - r
    G = np.zeros((k, n), dtype=np.uint8)
    for i in range(k):
        row = g.bits << i
        for j in range(n):
            G[i, j] = (row >> (n - 1 - j)) & 1
    H = _remainder_columns(n, g)
    return LinearCode(H, G, name or f"cyclic-{n}-{k}")


def _gf_tables(m: int) -> tuple[list[int], list[int]]:
    prim = PRIMITIVE_POLYNOMIALS[m]
    size = (1 << m) - 1
    exp = [0] * (2 * size)
    log = [0] * (size + 1)
    x = 1
    for i in range(size):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x >> m:
            x ^= prim
    for i in range(size, 2 * size):
        exp[i] = exp[i - size]
    return exp, log


def _minimal_polynomial(coset: list[int], exp: list[int], log: list[int], size: int) -> int:
    # product of (x + alpha^j), coefficients in GF(2^m), lowest degree first
    coeffs = [1]
    for j in coset:
        root = exp[j % size]
        nxt = [0] * (len(coeffs) + 1)
        for d, c in enumerate(coeffs):
            nxt[d + 1] ^= c
            if c:
                nxt[d] ^= exp[(log[c] + log[root]) % size]
        coeffs = nxt
    if any(c not in (0, 1) for c in coeffs):
        raise ArithmeticError("minimal polynomial has coefficients outside GF(2)")
    return sum(c << d for d, c in enumerate(coeffs))


def bch_generator(m: int, t: int) -> tuple[int, int, BinaryPolynomial]:
    """Narrow-sense primitive BCH generator polynomial.

    Returns ``(n, k, g)`` with ``g`` the lcm of the minimal polynomials of
    alpha, ..., alpha^(2t) over the field defined by the tabulated primitive
    polynomial for ``m``.
    """
    if m not in PRIMITIVE_POLYNOMIALS:
        raise ConfigurationError(f"field exponent m={m} outside supported range 2..10")
    if t < 1:
        raise ConfigurationError("designed error capacity t must be >= 1")
    n = (1 << m) - 1
    exp, log = _gf_tables(m)
    seen: set[int] = set()
    g = 1
    for i in range(1, 2 * t + 1):
        if i % n in seen:
            continue
        coset = []
        j = i % n
        while j not in coset:
            coset.append(j)
            j = (2 * j) % n
        seen.update(coset)
        g = _clmul(g, _minimal_polynomial(coset, exp, log, n))
    poly = BinaryPolynomial(g)
    k = n - poly.degree
    if k <= 0:
        raise ConfigurationError(f"t={t} too large for m={m} (k={k})")
    return n, k, poly


def bch_code(m: int, t: int) -> LinearCode:
    n, k, g = bch_generator(m, t)
    return cyclic_code_from_generator(n, g, name=f"bch-{n}-{k}")


def hamming_code(m: int) -> LinearCode:
    """Cyclic Hamming code of length 2^m - 1 (the t=1 BCH code)."""
    n, k, g = bch_generator(m, 1)
    return cyclic_code_from_generator(n, g, name=f"hamming-{n}-{k}")


_BCH_PARAMS = {
    "bch-31-16": (5, 3),
    "bch-63-45": (6, 3),
    "bch-127-113": (7, 2),
    "bch-127-106": (7, 3),
    "bch-255-239": (8, 2),
    "bch-511-493": (9, 2),
}


def builtin_names() -> list[str]:
    return sorted([*_BCH_PARAMS, "hamming-7-4", "hamming-15-11", "crc-128-117"])


def builtin_code(name: str) -> LinearCode:
    """Look up one of the named codes used in the experiments."""
    if name in _BCH_PARAMS:
        code = bch_code(*_BCH_PARAMS[name])
        assert code.name == name
        return code
    if name == "hamming-7-4":
        return hamming_code(3)
    if name == "hamming-15-11":
        return hamming_code(4)
    if name == "crc-128-117":
        return crc_code(128, BinaryPolynomial.from_crc_hex(0x710, 11), name=name)
    raise ConfigurationError(f"unknown code {name!r}; choose from {', '.join(builtin_names())}")


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

def _matrix_lines(m: np.ndarray) -> list[str]:
    return ["".join("1" if b else "0" for b in row) for row in m]


def save_code(code: LinearCode, path) -> None:
    """Write ``n k``, the n-k rows of H, then (if present) a blank line and G."""
    lines = [f"{code.n} {code.k}", *_matrix_lines(code.H)]
    if code.G is not None:
        lines += ["", *_matrix_lines(code.G)]
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_rows(lines: list[str], count: int, n: int, what: str) -> np.ndarray:
    if len(lines) != count:
        raise CodeFormatError(f"expected {count} rows of {what}, found {len(lines)}")
    out = np.zeros((count, n), dtype=np.uint8)
    for i, line in enumerate(lines):
        if len(line) != n or set(line) - {"0", "1"}:
            raise CodeFormatError(f"row {i} of {what} is not {n} characters from {{0,1}}")
        out[i] = [c == "1" for c in line]
    return out


def load_code(path, name: str | None = None) -> LinearCode:
    text = Path(path).read_text()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CodeFormatError("empty code file")
    header = lines[0].split(" ")
    if len(header) != 2 or not all(h.isdigit() for h in header):
        raise CodeFormatError(f"bad header line {lines[0]!r}; expected 'n k'")
    n, k = int(header[0]), int(header[1])
    if not 0 < k < n:
        raise CodeFormatError(f"need 0 < k < n, got n={n} k={k}")
    r = n - k
    H = _parse_rows(lines[1:1 + r], r, n, "H") if len(lines) >= 1 + r else None
    if H is None:
        raise CodeFormatError(f"expected {r} rows of H")
    rest = lines[1 + r:]
    G = None
    if rest:
        if rest[0] != "":
            raise CodeFormatError("G must be separated from H by one blank line")
        G = _parse_rows(rest[1:], k, n, "G")
    return LinearCode(H, G, name or Path(path).stem)
