"""
Chain complexes over GF(2), the multi-block (MBC) and abelian multi-cycle
(AMC) constructions, tensor products and CSS code extraction.

All signs of the construction vanish over GF(2) and are dropped. An odd
characteristic port has to reinstate them in the tensor product boundary
(the (-1)^i on the second term) and in the interior and last blocks of the
MBC recursion.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .exceptions import GroupMismatchError, InvariantError, TrivialCodeError
from .gf2 import BitMatrix, independent_rows, inverse, kernel_basis, rank

logger = logging.getLogger(__name__)

ZERO_BLOCK = -1


@dataclass(frozen=True)
class AMCSource:
    """Group and elements an AMC complex was built from."""

    group: object
    elements: tuple


class ChainComplex:
    """
    Boundaries Q_1..Q_D, Q_j of shape n_{j-1} x n_j, with Q_j Q_{j+1} = 0.

    ``layout`` holds, for MBC complexes, one integer grid per boundary giving
    the index of the block placed at each block position (``ZERO_BLOCK`` for
    zero), and ``block_size`` the size of those blocks.
    """

    def __init__(self, boundaries, dims=None, layout=None, block_size=None, source=None):
        boundaries = tuple(boundaries)
        if dims is None:
            if not boundaries:
                raise ValueError("dims are required for a complex without boundaries")
            dims = (boundaries[0].rows,) + tuple(q.cols for q in boundaries)
        dims = tuple(int(n) for n in dims)
        if len(dims) != len(boundaries) + 1:
            raise ValueError(f"{len(boundaries)} boundaries need {len(boundaries) + 1} dims, got {dims}")
        for j, q in enumerate(boundaries, start=1):
            if q.shape != (dims[j - 1], dims[j]):
                raise ValueError(f"Q_{j} has shape {q.shape}, expected {(dims[j - 1], dims[j])}")
        for j in range(1, len(boundaries)):
            if not (boundaries[j - 1] @ boundaries[j]).is_zero():
                raise InvariantError(f"boundary composition Q_{j} Q_{j + 1} is nonzero")
        self.boundaries = boundaries
        self.dims = dims
        self.layout = tuple(layout) if layout is not None else None
        self.block_size = block_size
        self.source = source

    @classmethod
    def trivial(cls, n=1):
        """A single space of dimension ``n`` and no boundaries."""
        return cls((), dims=(n,))

    @property
    def D(self):
        return len(self.dims) - 1

    def boundary(self, j):
        """Q_j; Q_0 and Q_{D+1} are the empty 0 x n_0 and n_D x 0 matrices."""
        if j == 0:
            return BitMatrix.zeros(0, self.dims[0])
        if j == self.D + 1:
            return BitMatrix.zeros(self.dims[-1], 0)
        if not 1 <= j <= self.D:
            raise ValueError(f"boundary index {j} out of range 0..{self.D + 1}")
        return self.boundaries[j - 1]

    @cached_property
    def ranks(self):
        """rank Q_j for j = 0..D+1."""
        return (0,) + tuple(rank(q) for q in self.boundaries) + (0,)

    def homology_rank(self, j):
        if not 0 <= j <= self.D:
            raise ValueError(f"level {j} out of range 0..{self.D}")
        return self.dims[j] - self.ranks[j] - self.ranks[j + 1]

    def homology_ranks(self):
        return [self.homology_rank(j) for j in range(self.D + 1)]

    def dual(self):
        """Co-chain complex: boundaries transposed and reversed."""
        boundaries = [q.T for q in reversed(self.boundaries)]
        layout = [grid.T for grid in reversed(self.layout)] if self.layout is not None else None
        return ChainComplex(boundaries, dims=tuple(reversed(self.dims)), layout=layout,
                            block_size=self.block_size, source=self.source)

    def __repr__(self):
        return f"ChainComplex(D={self.D}, dims={self.dims})"


def mbc_layout(D):
    """
    Block label grids of the D-block complex.

    Starting from Q_1 = [A_1], each new block N = A_t extends the complex as
    R_1 = [N, Q_1], R_i = [[Q_{i-1}, 0], [I (x) N, Q_i]], R_{t} = [[Q_{t-1}], [N]].
    """
    if D < 1:
        raise ValueError(f"need at least one block, got D={D}")
    layout = [np.array([[0]])]
    for new in range(1, D):
        grown = [np.hstack([np.array([[new]]), layout[0]])]
        for i in range(2, new + 1):
            previous, current = layout[i - 2], layout[i - 1]
            top = np.hstack([previous, np.full((previous.shape[0], current.shape[1]), ZERO_BLOCK)])
            diagonal = np.full((current.shape[0], current.shape[0]), ZERO_BLOCK)
            np.fill_diagonal(diagonal, new)
            grown.append(np.vstack([top, np.hstack([diagonal, current])]))
        grown.append(np.vstack([layout[-1], np.array([[new]])]))
        layout = grown
    return layout


def _materialize(grid, blocks, size):
    rows, cols = grid.shape
    entries = [[blocks[label] if label != ZERO_BLOCK else None for label in line] for line in grid]
    return BitMatrix.block(entries, row_sizes=[size] * rows, col_sizes=[size] * cols)


def mbc_build(blocks, source=None):
    """MBC complex over pairwise commuting square blocks; block dims are C(D, j)."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("mbc_build needs at least one block")
    size = blocks[0].rows
    for i, block in enumerate(blocks):
        if block.shape != (size, size):
            raise ValueError(f"block {i} has shape {block.shape}, expected {(size, size)}")
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            if blocks[i] @ blocks[j] != blocks[j] @ blocks[i]:
                raise ValueError(f"blocks {i} and {j} do not commute")
    layout = mbc_layout(len(blocks))
    boundaries = [_materialize(grid, blocks, size) for grid in layout]
    complex_ = ChainComplex(boundaries, layout=layout, block_size=size, source=source)
    logger.debug(f"mbc_build: D={len(blocks)}, dims={complex_.dims}")
    return complex_


def amc_build(group, elements):
    """AMC(a_1, ..., a_D): the MBC complex of the regular representations."""
    elements = tuple(elements)
    if len(elements) < 2:
        raise ValueError(f"an AMC complex needs D >= 2 elements, got {len(elements)}")
    for a in elements:
        if a.group != group:
            raise GroupMismatchError(f"element {a} is over {a.group}, not {group}")
    try:
        return mbc_build([a.regular_rep() for a in elements], source=AMCSource(group, elements))
    except ValueError as exc:
        raise InvariantError(f"regular representations of an abelian group failed to commute: {exc}") from exc


def amc_power(group, element, D):
    """AMC(a(x_1), ..., a(x_D)) over the D-fold product of ``group``."""
    target = group.power(D)
    return amc_build(target, [element.lift(target, i) for i in range(D)])


def tensor_product(a, b):
    """
    Product complex with C_j the direct sum of A_i (x) B_{j-i}, summands
    stacked in ascending i. The boundary sends A_i (x) B_k to
    A_{i-1} (x) B_k by Q^A_i (x) I and to A_i (x) B_{k-1} by I (x) Q^B_k.
    """
    top = a.D + b.D

    def summands(j):
        return [(i, j - i) for i in range(a.D + 1) if 0 <= j - i <= b.D]

    dims = [sum(a.dims[i] * b.dims[k] for i, k in summands(j)) for j in range(top + 1)]
    boundaries = []
    for j in range(1, top + 1):
        rows, cols = summands(j - 1), summands(j)
        position = {key: r for r, key in enumerate(rows)}
        grid = [[None] * len(cols) for _ in rows]
        for c, (i, k) in enumerate(cols):
            if i >= 1:
                grid[position[(i - 1, k)]][c] = BitMatrix.kron(a.boundary(i), BitMatrix.identity(b.dims[k]))
            if k >= 1:
                grid[position[(i, k - 1)]][c] = BitMatrix.kron(BitMatrix.identity(a.dims[i]), b.boundary(k))
        boundaries.append(BitMatrix.block(grid, row_sizes=[a.dims[i] * b.dims[k] for i, k in rows],
                                          col_sizes=[a.dims[i] * b.dims[k] for i, k in cols]))
    return ChainComplex(boundaries, dims=dims)


def homology_rank(complex_, j):
    return complex_.homology_rank(j)


def kunneth_rank(a_ranks, b_ranks, j):
    """Sum over i of k_i(A) k_{j-i}(B)."""
    return sum(a_ranks[i] * b_ranks[j - i] for i in range(len(a_ranks)) if 0 <= j - i < len(b_ranks))


class CSSCode:
    """Check matrices hx, hz with hx hz^T = 0, optional metachecks mx, mz."""

    def __init__(self, hx, hz, mx=None, mz=None, complex_=None, level=None):
        if hx.cols != hz.cols:
            raise ValueError(f"hx has {hx.cols} columns but hz has {hz.cols}")
        if not (hx @ hz.T).is_zero():
            raise InvariantError("hx hz^T is nonzero")
        if mx is not None and not (mx @ hx).is_zero():
            raise InvariantError("mx hx is nonzero")
        if mz is not None and not (mz @ hz).is_zero():
            raise InvariantError("mz hz is nonzero")
        self.hx, self.hz, self.mx, self.mz = hx, hz, mx, mz
        self.complex = complex_
        self.level = level

    @property
    def n(self):
        return self.hx.cols

    @cached_property
    def k(self):
        return self.n - rank(self.hx) - rank(self.hz)

    @property
    def block_size(self):
        return self.complex.block_size if self.complex is not None else None

    @property
    def source(self):
        return self.complex.source if self.complex is not None else None

    def describe(self):
        """JSON-ready descriptor."""
        descriptor = {'n': self.n, 'k': self.k, 'level': self.level}
        if self.source is not None:
            descriptor['group'] = str(self.source.group)
            descriptor['elements'] = [str(a) for a in self.source.elements]
            descriptor['D'] = len(self.source.elements)
        return descriptor

    def __repr__(self):
        return f"CSSCode(n={self.n}, k={self.k})"


def css_extract(complex_, j, with_metachecks=True):
    """hx = Q_j, hz = Q_{j+1}^T; metachecks Q_{j-1} and Q_{j+2}^T, empty at the ends."""
    if not 1 <= j <= complex_.D - 1:
        raise ValueError(f"level {j} out of range 1..{complex_.D - 1}")
    hx = complex_.boundary(j)
    hz = complex_.boundary(j + 1).T
    mx = mz = None
    if with_metachecks:
        mx = complex_.boundary(j - 1) if j - 1 >= 1 else BitMatrix.zeros(0, hx.rows)
        mz = complex_.boundary(j + 2).T if j + 2 <= complex_.D else BitMatrix.zeros(0, hz.rows)
    code = CSSCode(hx, hz, mx, mz, complex_=complex_, level=j)
    if code.k != complex_.homology_rank(j):
        raise InvariantError(f"code dimension {code.k} differs from homology rank {complex_.homology_rank(j)}")
    return code


def _independent_logicals(stabilizers, dual_checks):
    kernel = kernel_basis(dual_checks)
    chosen = [i - stabilizers.rows for i in independent_rows(BitMatrix.vstack(stabilizers, kernel))
              if i >= stabilizers.rows]
    return kernel.take_rows(chosen)


def logical_basis(code):
    """
    (Lx, Lz): Lx rows lie in ker hz and are independent modulo the row span
    of hx, Lz symmetrically; normalized so that Lx Lz^T = I.
    """
    if code.k == 0:
        raise TrivialCodeError("trivial code: k = 0")
    lx = _independent_logicals(code.hx, code.hz)
    lz = _independent_logicals(code.hz, code.hx)
    if lx.rows != code.k or lz.rows != code.k:
        raise InvariantError(f"found {lx.rows}/{lz.rows} logicals for k = {code.k}")
    lz = inverse(lx @ lz.T).T @ lz
    return lx, lz


def stabilizer_weights(code):
    """Sorted distinct row weights of hx and hz."""
    return sorted(set(code.hx.row_weights().tolist())), sorted(set(code.hz.row_weights().tolist()))


def block_dims(D):
    return [comb(D, j) for j in range(D + 1)]
