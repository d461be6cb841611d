"""
GF(2) linear algebra on bit-packed rows, and binary polynomials.

Rows of a ``BitMatrix`` are numpy ``uint64`` words, column ``c`` living at bit
``c % 64`` of word ``c // 64``. Padding bits past ``cols`` are always zero.
Polynomials over GF(2) are plain Python ints, bit ``i`` holding the
coefficient of ``x^i``.
"""
import itertools
import logging
import math
import re

import numpy as np

from .exceptions import ParseError, TrivialCodeError

logger = logging.getLogger(__name__)

WORD = 64
_POPCOUNT8 = np.array([bin(i).count('1') for i in range(256)], dtype=np.int64)


def n_words(cols):
    return (cols + WORD - 1) // WORD


def pack_rows(dense):
    """Pack a 2-D 0/1 array into rows of uint64 words."""
    dense = np.asarray(dense)
    rows, cols = dense.shape
    words = n_words(cols)
    if words == 0 or rows == 0:
        return np.zeros((rows, words), dtype=np.uint64)
    padded = np.zeros((rows, words * WORD), dtype=np.uint8)
    padded[:, :cols] = dense.astype(np.uint8) & 1
    packed = np.ascontiguousarray(np.packbits(padded, axis=1, bitorder='little'))
    return packed.view('<u8').astype(np.uint64)


def unpack_rows(words, cols):
    words = np.asarray(words, dtype=np.uint64)
    rows = words.shape[0]
    if cols == 0 or rows == 0:
        return np.zeros((rows, cols), dtype=np.uint8)
    raw = np.ascontiguousarray(words.astype('<u8')).view(np.uint8)
    return np.unpackbits(raw, axis=1, count=cols, bitorder='little')


def popcount(words):
    """Number of set bits along the last axis of a uint64 array."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    if words.shape[-1] == 0:
        return np.zeros(words.shape[:-1], dtype=np.int64)
    as_bytes = words.view(np.uint8).reshape(words.shape[:-1] + (-1,))
    return _POPCOUNT8[as_bytes].sum(axis=-1)


def _first_set(acc, start):
    """Index of the lowest set bit at or after ``start`` in a packed word row, or None."""
    first = start // WORD
    if first >= acc.shape[0]:
        return None
    tail = acc[first:].copy()
    tail[0] &= ~np.uint64((1 << (start % WORD)) - 1)
    nonzero = np.flatnonzero(tail)
    if not nonzero.size:
        return None
    word = int(tail[nonzero[0]])
    return (first + int(nonzero[0])) * WORD + (word & -word).bit_length() - 1


def _reduce(words, cols, rhs=None):
    """
    Bring packed rows to reduced row echelon form in place.

    ``rhs`` (1-D or 2-D, one entry per row) receives the same row operations.
    Pivot columns are taken first-nonzero in column order. Returns the pivots.
    """
    rows = words.shape[0]
    pivots = []
    r, col = 0, 0
    while r < rows and col < cols:
        c = _first_set(np.bitwise_or.reduce(words[r:], axis=0), col)
        if c is None:
            break
        w, bit = c // WORD, np.uint64(1) << np.uint64(c % WORD)
        p = r + int(np.flatnonzero(words[r:, w] & bit)[0])
        if p != r:
            words[[r, p]] = words[[p, r]]
            if rhs is not None:
                rhs[[r, p]] = rhs[[p, r]]
        hits = np.flatnonzero(words[:, w] & bit)
        hits = hits[hits != r]
        if hits.size:
            words[hits] ^= words[r]
            if rhs is not None:
                rhs[hits] ^= rhs[r]
        pivots.append(c)
        r += 1
        col = c + 1
    return pivots


class BitMatrix:
    """Immutable dense GF(2) matrix. Empty shapes (0 x n, n x 0) are allowed."""

    __slots__ = ('rows', 'cols', 'words')

    def __init__(self, words, cols):
        words = np.array(words, dtype=np.uint64)
        if words.ndim != 2 or words.shape[1] != n_words(cols):
            raise ValueError(f"packed words of shape {words.shape} do not fit {cols} columns")
        words.flags.writeable = False
        self.rows = words.shape[0]
        self.cols = cols
        self.words = words

    @classmethod
    def zeros(cls, rows, cols):
        return cls(np.zeros((rows, n_words(cols)), dtype=np.uint64), cols)

    @classmethod
    def identity(cls, n):
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_dense(cls, dense):
        dense = np.asarray(dense)
        if dense.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {dense.shape}")
        return cls(pack_rows(dense), dense.shape[1])

    @classmethod
    def from_supports(cls, supports, cols):
        dense = np.zeros((len(supports), cols), dtype=np.uint8)
        for i, support in enumerate(supports):
            for c in support:
                if not 0 <= c < cols:
                    raise ValueError(f"column {c} out of range for {cols} columns")
                dense[i, c] ^= 1
        return cls.from_dense(dense)

    @classmethod
    def hstack(cls, *blocks):
        rows = {b.rows for b in blocks}
        if len(rows) != 1:
            raise ValueError(f"cannot hstack matrices with row counts {sorted(rows)}")
        return cls.from_dense(np.hstack([b.to_dense() for b in blocks]))

    @classmethod
    def vstack(cls, *blocks):
        cols = {b.cols for b in blocks}
        if len(cols) != 1:
            raise ValueError(f"cannot vstack matrices with column counts {sorted(cols)}")
        return cls(np.vstack([b.words for b in blocks]), cols.pop())

    @classmethod
    def kron(cls, a, b):
        return cls.from_dense(np.kron(a.to_dense(), b.to_dense()))

    @classmethod
    def block(cls, grid, row_sizes=None, col_sizes=None):
        """
        Assemble a block matrix from a grid of BitMatrix entries, ``None``
        standing for a zero block. Sizes are inferred unless given.
        """
        n_block_rows = len(grid)
        n_block_cols = len(grid[0]) if grid else len(col_sizes or ())
        row_sizes = list(row_sizes) if row_sizes is not None else [None] * n_block_rows
        col_sizes = list(col_sizes) if col_sizes is not None else [None] * n_block_cols
        for i, line in enumerate(grid):
            if len(line) != n_block_cols:
                raise ValueError("ragged block grid")
            for j, entry in enumerate(line):
                if entry is None:
                    continue
                if row_sizes[i] not in (None, entry.rows) or col_sizes[j] not in (None, entry.cols):
                    raise ValueError(f"block ({i}, {j}) of shape {entry.shape} does not fit its neighbours")
                row_sizes[i], col_sizes[j] = entry.rows, entry.cols
        if None in row_sizes or None in col_sizes:
            raise ValueError("block sizes cannot be inferred from an all-zero block row or column")
        dense = np.zeros((sum(row_sizes), sum(col_sizes)), dtype=np.uint8)
        row_offsets = np.concatenate([[0], np.cumsum(row_sizes)]).astype(int)
        col_offsets = np.concatenate([[0], np.cumsum(col_sizes)]).astype(int)
        for i, line in enumerate(grid):
            for j, entry in enumerate(line):
                if entry is not None:
                    dense[row_offsets[i]:row_offsets[i + 1], col_offsets[j]:col_offsets[j + 1]] = entry.to_dense()
        return cls.from_dense(dense)

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def T(self):
        return BitMatrix.from_dense(self.to_dense().T)

    def to_dense(self):
        return unpack_rows(self.words, self.cols)

    def supports(self):
        dense = self.to_dense()
        return [tuple(int(c) for c in np.flatnonzero(row)) for row in dense]

    def take_rows(self, index):
        return BitMatrix(self.words[np.asarray(index, dtype=np.intp)], self.cols)

    def take_cols(self, index):
        index = np.asarray(index, dtype=np.intp)
        return BitMatrix.from_dense(self.to_dense()[:, index])

    def row_weights(self):
        return popcount(self.words)

    def col_weights(self):
        return self.to_dense().sum(axis=0, dtype=np.int64)

    def is_zero(self):
        return not self.words.any()

    def __getitem__(self, key):
        r, c = key
        return int((int(self.words[r, c // WORD]) >> (c % WORD)) & 1)

    def __matmul__(self, other):
        if isinstance(other, BitMatrix):
            if self.cols != other.rows:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            product = self.to_dense().astype(np.float64) @ other.to_dense().astype(np.float64)
            return BitMatrix.from_dense(np.remainder(product, 2).astype(np.uint8))
        vector = np.asarray(other)
        if vector.shape[0] != self.cols:
            raise ValueError(f"shape mismatch {self.shape} @ {vector.shape}")
        product = self.to_dense().astype(np.float64) @ vector.astype(np.float64)
        return np.remainder(product, 2).astype(np.uint8)

    def __add__(self, other):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} + {other.shape}")
        return BitMatrix(self.words ^ other.words, self.cols)

    __sub__ = __add__

    def __eq__(self, other):
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.words, other.words)

    __hash__ = None

    def __repr__(self):
        return f"BitMatrix({self.rows}x{self.cols}, nnz={int(self.row_weights().sum())})"


def rank(matrix):
    words = matrix.words.copy()
    return len(_reduce(words, matrix.cols))


def row_reduce(matrix):
    """Reduced row echelon form without zero rows, and the pivot columns."""
    words = matrix.words.copy()
    pivots = _reduce(words, matrix.cols)
    return BitMatrix(words[:len(pivots)], matrix.cols), pivots


def kernel_basis(matrix):
    """Rows spanning {x : M x^T = 0}; there are ``cols - rank`` of them."""
    reduced, pivots = row_reduce(matrix)
    free = np.setdiff1d(np.arange(matrix.cols), pivots)
    basis = np.zeros((free.size, matrix.cols), dtype=np.uint8)
    basis[np.arange(free.size), free] = 1
    if pivots:
        basis[:, pivots] = reduced.to_dense()[:, free].T
    return BitMatrix.from_dense(basis)


def independent_rows(matrix):
    """Indices of the rows kept by a greedy left-to-right independence scan."""
    return _reduce(matrix.T.words.copy(), matrix.rows)


def in_row_space(matrix, vector):
    stacked = BitMatrix.vstack(matrix, BitMatrix.from_dense(np.asarray(vector, dtype=np.uint8)[None]))
    return rank(stacked) == rank(matrix)


def solve(matrix, b):
    """One solution x of M x = b, or None when b is outside the column space."""
    words = matrix.words.copy()
    rhs = np.array(b, dtype=np.uint8)
    pivots = _reduce(words, matrix.cols, rhs)
    if rhs[len(pivots):].any():
        return None
    x = np.zeros(matrix.cols, dtype=np.uint8)
    x[pivots] = rhs[:len(pivots)]
    return x


def inverse(matrix):
    if matrix.rows != matrix.cols:
        raise ValueError(f"cannot invert a non-square {matrix.shape} matrix")
    words = matrix.words.copy()
    rhs = np.eye(matrix.rows, dtype=np.uint8)
    if len(_reduce(words, matrix.cols, rhs)) != matrix.rows:
        raise ValueError("matrix is singular over GF(2)")
    return BitMatrix.from_dense(rhs)


def combination_chunks(k, t, size):
    combos = itertools.combinations(range(k), t)
    while True:
        chunk = list(itertools.islice(combos, size))
        if not chunk:
            return
        yield np.array(chunk, dtype=np.intp)


def min_weight_codeword(generator, weight_cap=None, chunk_size=1 << 15):
    """
    Minimum weight of a nonzero vector in the row span of ``generator``.

    Codewords are enumerated from several disjoint information sets
    (Brouwer-Zimmermann), so the search stops as soon as the lower bound
    reaches the best weight found. Returns ``(weight, vector)``, or None when
    the minimum weight exceeds ``weight_cap``.
    """
    if generator.is_zero():
        raise TrivialCodeError("trivial code: generator matrix is zero")
    basis, _ = row_reduce(generator)
    k, n = basis.rows, basis.cols
    cap = n if weight_cap is None else weight_cap
    dense = basis.to_dense()

    systems = []
    unused = np.ones(n, dtype=bool)
    while unused.any():
        fresh = np.flatnonzero(unused)
        order = np.concatenate([fresh, np.flatnonzero(~unused)])
        words = pack_rows(dense[:, order])
        pivots = _reduce(words, n)
        inside = [p for p in pivots if p < fresh.size]
        if not inside:
            break
        reduced = np.zeros((k, n), dtype=np.uint8)
        reduced[:, order] = unpack_rows(words, n)
        systems.append((pack_rows(reduced), len(inside)))
        unused[order[inside]] = False
    logger.debug(f"min_weight_codeword: k={k} n={n}, information set ranks {[r for _, r in systems]}")

    best_weight, best_vector = math.inf, None
    for t in range(1, k + 1):
        for packed, _ in systems:
            for combos in combination_chunks(k, t, chunk_size):
                vectors = np.bitwise_xor.reduce(packed[combos], axis=1)
                weights = popcount(vectors)
                i = int(np.argmin(weights))
                if weights[i] < best_weight:
                    best_weight, best_vector = int(weights[i]), vectors[i]
        lower = sum(max(0, t + 1 - (k - r)) for _, r in systems)
        if best_weight <= lower:
            break
        if lower > cap:
            return None
    if best_weight > cap:
        return None
    return best_weight, unpack_rows(best_vector[None], n)[0]


class GF2Poly:
    """Polynomial over GF(2) stored as an int bit mask."""

    __slots__ = ('value',)

    _TERM = re.compile(r'^(?:(?P<one>1)|x(?:\^(?P<exp>\d+))?)$')

    def __init__(self, value=0):
        value = value.value if isinstance(value, GF2Poly) else int(value)
        if value < 0:
            raise ValueError(f"negative bit mask {value}")
        self.value = value

    @classmethod
    def from_exponents(cls, exponents):
        value = 0
        for e in exponents:
            value ^= 1 << int(e)
        return cls(value)

    @classmethod
    def parse(cls, text):
        value = 0
        for term in text.replace(' ', '').split('+'):
            if term == '0':
                continue
            match = cls._TERM.match(term)
            if match is None:
                raise ParseError(f"cannot parse polynomial term {term!r} in {text!r}")
            if match.group('one'):
                value ^= 1
            else:
                value ^= 1 << int(match.group('exp') or 1)
        return cls(value)

    @property
    def degree(self):
        return self.value.bit_length() - 1 if self.value else -math.inf

    @property
    def weight(self):
        return bin(self.value).count('1')

    def exponents(self):
        return [i for i in range(self.value.bit_length()) if self.value >> i & 1]

    def __bool__(self):
        return bool(self.value)

    def __eq__(self, other):
        if isinstance(other, int):
            return self.value == other
        if not isinstance(other, GF2Poly):
            return NotImplemented
        return self.value == other.value

    def __hash__(self):
        return hash(('GF2Poly', self.value))

    def __add__(self, other):
        return GF2Poly(self.value ^ GF2Poly(other).value)

    __sub__ = __add__
    __radd__ = __add__

    def __mul__(self, other):
        a, b = self.value, GF2Poly(other).value
        product = 0
        while b:
            if b & 1:
                product ^= a
            a <<= 1
            b >>= 1
        return GF2Poly(product)

    __rmul__ = __mul__

    def __divmod__(self, other):
        divisor = GF2Poly(other).value
        if not divisor:
            raise ZeroDivisionError("polynomial division by zero")
        a, q = self.value, 0
        db = divisor.bit_length()
        while a.bit_length() >= db:
            shift = a.bit_length() - db
            q ^= 1 << shift
            a ^= divisor << shift
        return GF2Poly(q), GF2Poly(a)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __str__(self):
        if not self.value:
            return '0'
        terms = []
        for e in self.exponents():
            terms.append('1' if e == 0 else ('x' if e == 1 else f'x^{e}'))
        return '+'.join(terms)

    def __repr__(self):
        return f"GF2Poly('{self}')"


def x_pow_minus_one(ell):
    """x^ell - 1, which over GF(2) is x^ell + 1."""
    return GF2Poly((1 << ell) | 1)


def poly_gcd(a, b, *more):
    a, b = GF2Poly(a), GF2Poly(b)
    if not a and not b and not any(more):
        raise ValueError("gcd undefined: all inputs are zero")
    while b:
        a, b = b, a % b
    for c in more:
        a = poly_gcd(a, c) if (a or c) else a
    return a


def bezout(a, b):
    """(u, v, h) with u*a + v*b = h = gcd(a, b), of minimal degree."""
    a, b = GF2Poly(a), GF2Poly(b)
    if not a and not b:
        raise ValueError("gcd undefined: both inputs are zero")
    r0, r1 = a, b
    s0, s1 = GF2Poly(1), GF2Poly(0)
    t0, t1 = GF2Poly(0), GF2Poly(1)
    while r1:
        q, r = divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 + q * s1
        t0, t1 = t1, t0 + q * t1
    return s0, t0, r0
