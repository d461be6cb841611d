"""
Finite abelian groups as products of cyclic groups, and their GF(2) group algebras.

Group elements are exponent vectors enumerated in mixed-radix order, last
factor fastest, so that for a single cyclic factor every regular
representation is a circulant.
"""
import logging
import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import GroupMismatchError, ParseError
from .gf2 import BitMatrix, GF2Poly

logger = logging.getLogger(__name__)

_GROUP_FACTOR = re.compile(r'^C(?P<order>\d+)(?:\^(?P<power>\d+))?$')
_FACTOR = re.compile(r'^(?P<name>[a-z]\d*)(?:\^(?P<exp>-?\d+))?$')


def _smith_left(relators):
    """
    Diagonalize an integer matrix by unimodular row and column operations.

    Returns the diagonal and the accumulated row transform U, so that U
    maps exponent vectors of the presentation onto the diagonal coordinates.
    """
    a = [list(map(int, row)) for row in relators]
    m = len(a)
    r = len(a[0]) if m else 0
    u = [[int(i == j) for j in range(m)] for i in range(m)]

    def add_row(dst, src, q):
        a[dst] = [x - q * y for x, y in zip(a[dst], a[src])]
        u[dst] = [x - q * y for x, y in zip(u[dst], u[src])]

    for t in range(min(m, r)):
        while True:
            entries = [(abs(a[i][j]), i, j) for i in range(t, m) for j in range(t, r) if a[i][j]]
            if not entries:
                break
            _, i, j = min(entries)
            a[t], a[i] = a[i], a[t]
            u[t], u[i] = u[i], u[t]
            for row in a:
                row[t], row[j] = row[j], row[t]
            clean = True
            for i in range(t + 1, m):
                add_row(i, t, a[i][t] // a[t][t])
                clean = clean and a[i][t] == 0
            for j in range(t + 1, r):
                q = a[t][j] // a[t][t]
                for row in a:
                    row[j] -= q * row[t]
                clean = clean and a[t][j] == 0
            if not clean:
                continue
            stray = [i for i in range(t + 1, m) for j in range(t + 1, r) if a[i][j] % a[t][t]]
            if not stray:
                break
            add_row(t, stray[0], -1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
    diagonal = [a[t][t] if t < r else 0 for t in range(m)]
    return diagonal, np.array(u, dtype=np.int64)


@dataclass(frozen=True)
class AbelianGroup:
    orders: tuple

    def __post_init__(self):
        orders = tuple(int(d) for d in self.orders)
        if any(d < 1 for d in orders):
            raise ValueError(f"cyclic factor orders must be positive, got {orders}")
        object.__setattr__(self, 'orders', orders)

    @classmethod
    def cyclic(cls, ell):
        return cls((ell,))

    @classmethod
    def parse(cls, text):
        """Parse ``C7``, ``C3xC5`` or ``C2^4``."""
        orders = []
        for factor in text.replace(' ', '').split('x'):
            match = _GROUP_FACTOR.match(factor)
            if match is None:
                raise ParseError(f"cannot parse group factor {factor!r} in {text!r}")
            orders.extend([int(match.group('order'))] * int(match.group('power') or 1))
        return cls(tuple(orders))

    @classmethod
    def from_relators(cls, relators):
        """
        Reduce a presentation Z^m / (relators Z^r) to cyclic-factor form.

        ``relators`` holds one relator per column. Returns the group and an
        integer matrix mapping presentation exponent vectors to exponent
        vectors of the returned group (reduce modulo its orders).
        """
        diagonal, transform = _smith_left(np.asarray(relators, dtype=np.int64).tolist())
        if 0 in diagonal:
            raise ValueError(f"relators {relators} define an infinite group")
        kept = [i for i, d in enumerate(diagonal) if d > 1]
        return cls(tuple(diagonal[i] for i in kept)), transform[kept]

    @property
    def order(self):
        return math.prod(self.orders)

    @property
    def rank(self):
        return len(self.orders)

    @cached_property
    def generator_names(self):
        if self.rank <= 4:
            return tuple('xyzw'[:self.rank])
        return tuple(f'x{i + 1}' for i in range(self.rank))

    @cached_property
    def strides(self):
        strides = [1] * self.rank
        for i in range(self.rank - 2, -1, -1):
            strides[i] = strides[i + 1] * self.orders[i + 1]
        return tuple(strides)

    @cached_property
    def element_table(self):
        """Exponent vectors of all elements, in canonical order."""
        index = np.arange(self.order)
        return np.stack([(index // s) % d for s, d in zip(self.strides, self.orders)], axis=-1).reshape(
            self.order, self.rank)

    def reduce(self, exponents):
        if len(exponents) != self.rank:
            raise ValueError(f"expected {self.rank} exponents, got {exponents}")
        return tuple(int(e) % d for e, d in zip(exponents, self.orders))

    def index(self, exponents):
        return sum(e * s for e, s in zip(self.reduce(exponents), self.strides))

    def exponents(self, index):
        return tuple(int(e) for e in self.element_table[index])

    def power(self, copies):
        return AbelianGroup(self.orders * copies)

    def shift_matrix(self, exponents):
        """Regular representation of one group element: a permutation matrix."""
        matrix = np.ones((1, 1), dtype=np.uint8)
        for e, d in zip(self.reduce(exponents), self.orders):
            matrix = np.kron(matrix, np.roll(np.eye(d, dtype=np.uint8), shift=e, axis=0))
        return matrix

    def __str__(self):
        return 'x'.join(f'C{d}' for d in self.orders) or 'C1'


@dataclass(frozen=True)
class GroupAlgebraElement:
    """A GF(2) formal sum of group elements; ``support`` holds exponent vectors."""

    group: AbelianGroup
    support: frozenset

    def __post_init__(self):
        support = frozenset(tuple(int(e) for e in g) for g in self.support)
        for g in support:
            if len(g) != self.group.rank or any(not 0 <= e < d for e, d in zip(g, self.group.orders)):
                raise ValueError(f"exponent vector {g} out of range for {self.group}")
        object.__setattr__(self, 'support', support)

    @classmethod
    def from_terms(cls, group, terms):
        """Sum of terms; repeated terms cancel in pairs."""
        support = set()
        for g in terms:
            support ^= {group.reduce(g)}
        return cls(group, frozenset(support))

    @classmethod
    def zero(cls, group):
        return cls(group, frozenset())

    @classmethod
    def one(cls, group):
        return cls(group, frozenset({(0,) * group.rank}))

    @classmethod
    def monomial(cls, group, exponents):
        return cls(group, frozenset({group.reduce(exponents)}))

    @classmethod
    def parse(cls, group, text):
        """Parse e.g. ``1+x^3+x*y^2`` in the group's generator names."""
        names = {name: i for i, name in enumerate(group.generator_names)}
        terms = []
        for term in text.replace(' ', '').split('+'):
            if term == '0':
                continue
            if not term:
                raise ParseError(f"empty term in {text!r}")
            exponents = [0] * group.rank
            if term != '1':
                for factor in term.split('*'):
                    match = _FACTOR.match(factor)
                    if match is None:
                        raise ParseError(f"cannot parse factor {factor!r} in {text!r}")
                    if match.group('name') not in names:
                        raise ParseError(f"unknown generator {match.group('name')!r} for group {group}")
                    exponents[names[match.group('name')]] += int(match.group('exp') or 1)
            terms.append(exponents)
        return cls.from_terms(group, terms)

    @classmethod
    def from_poly(cls, group, poly):
        if group.rank != 1:
            raise ValueError(f"polynomials describe elements of cyclic groups, not {group}")
        return cls.from_terms(group, [(e,) for e in GF2Poly(poly).exponents()])

    @classmethod
    def from_vector(cls, group, vector):
        return cls(group, frozenset(group.exponents(i) for i in np.flatnonzero(vector)))

    @property
    def weight(self):
        return len(self.support)

    def sorted_support(self):
        return sorted(self.support, key=self.group.index)

    def _check(self, other):
        if not isinstance(other, GroupAlgebraElement):
            raise TypeError(f"expected a group algebra element, got {type(other).__name__}")
        if other.group != self.group:
            raise GroupMismatchError(f"elements over different groups: {self.group} and {other.group}")

    def __add__(self, other):
        self._check(other)
        return GroupAlgebraElement(self.group, self.support ^ other.support)

    def __mul__(self, other):
        self._check(other)
        terms = [tuple(a + b for a, b in zip(g, h)) for g in self.support for h in other.support]
        return GroupAlgebraElement.from_terms(self.group, terms)

    def hat(self):
        return GroupAlgebraElement.from_terms(self.group, [tuple(-e for e in g) for g in self.support])

    def trace(self):
        return int((0,) * self.group.rank in self.support)

    def translate(self, exponents):
        shift = self.group.reduce(exponents)
        terms = [tuple(a + b for a, b in zip(g, shift)) for g in self.support]
        return GroupAlgebraElement.from_terms(self.group, terms)

    def automorphism(self, m):
        """Image under the power map g -> g^m, an automorphism when m is coprime to every factor order."""
        bad = [d for d in self.group.orders if math.gcd(m, d) != 1]
        if bad:
            raise ValueError(f"x -> x^{m} is not an automorphism of {self.group}")
        return GroupAlgebraElement.from_terms(self.group, [tuple(m * e for e in g) for g in self.support])

    def lift(self, target, factor):
        """Embed into ``target`` = this group to some power, acting on copy number ``factor``."""
        rank = self.group.rank
        if target.orders[factor * rank:(factor + 1) * rank] != self.group.orders:
            raise GroupMismatchError(f"{self.group} is not factor {factor} of {target}")
        padding = (0,) * target.rank
        terms = [padding[:factor * rank] + g + padding[(factor + 1) * rank:] for g in self.support]
        return GroupAlgebraElement.from_terms(target, terms)

    def regular_rep(self):
        """[M(a)]_{alpha,beta} = sum_g a_g delta(alpha, g beta)."""
        n = self.group.order
        dense = np.zeros((n, n), dtype=np.uint8)
        for g in self.support:
            dense ^= self.group.shift_matrix(g)
        return BitMatrix.from_dense(dense)

    def to_vector(self):
        vector = np.zeros(self.group.order, dtype=np.uint8)
        for g in self.support:
            vector[self.group.index(g)] = 1
        return vector

    def as_poly(self):
        if self.group.rank != 1:
            raise ValueError(f"only elements of cyclic groups are polynomials, not over {self.group}")
        return GF2Poly.from_exponents(g[0] for g in self.support)

    def __str__(self):
        if not self.support:
            return '0'
        terms = []
        for g in self.sorted_support():
            factors = [name if e == 1 else f'{name}^{e}' for name, e in zip(self.group.generator_names, g) if e]
            terms.append('*'.join(factors) or '1')
        return '+'.join(terms)


def multiply(a, b):
    return a * b


def hat(a):
    return a.hat()


def group_trace(a):
    return a.trace()


def regular_rep(a):
    return a.regular_rep()


def automorphism_apply(a, m):
    return a.automorphism(m)


def parse_elements(group, text):
    """Comma separated list of elements, e.g. ``"1+x,1+x^2"``."""
    return [GroupAlgebraElement.parse(group, part) for part in text.split(',') if part.strip()]
