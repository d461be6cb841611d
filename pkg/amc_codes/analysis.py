"""
Code parameters: closed-form ranks and bounds, distances and confinement.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from functools import partial
from math import comb

import numpy as np

from . import parallel
from .clusters import column_supports, connected_subsets, min_logical_weight, neighbours
from .complexes import logical_basis
from .exceptions import InvariantError, TrivialCodeError
from .gf2 import (BitMatrix, GF2Poly, _reduce, combination_chunks, min_weight_codeword, pack_rows, poly_gcd,
                  popcount, unpack_rows, x_pow_minus_one)

logger = logging.getLogger(__name__)

INFINITE = math.inf

PARAMS_COLUMNS = ['ell', 'n', 'k', 'd', 'd_S', 'a_1', 'a_2', 'a_3', 'a_4', 'confinement']


@dataclass(frozen=True)
class Distance:
    """
    A distance result. ``value`` is the weight found, ``INFINITE`` for k = 0,
    or None when an exact search ran out of its cap. RIS values are upper bounds.
    """

    value: object
    method: str
    exact: bool
    witness: tuple = ()
    cap: int = None
    trials: int = None
    seed: int = None

    def __str__(self):
        if self.value is None:
            return f'>{self.cap}'
        if self.value == INFINITE:
            return 'inf'
        return str(self.value) if self.exact else f'<={self.value}'


@dataclass
class CodeParams:
    n: int
    k: int
    d: Distance = None
    d_upper: object = None
    d_syndrome: object = None
    kappa: int = None
    h: GF2Poly = None
    confinement: list = field(default_factory=list)
    ell: int = None
    elements: tuple = ()

    @property
    def single_shot_bound(self):
        """d_SS <= d_h-perp; only the bound is reported."""
        return self.d_upper

    def as_row(self):
        elements = list(self.elements) + [''] * (4 - len(self.elements))
        confinement = ','.join('-' if v is None else str(v) for _, v in self.confinement)
        d = '' if self.d is None else str(self.d)
        d_s = '' if self.d_syndrome is None else str(self.d_syndrome)
        return [self.ell, self.n, self.k, d, d_s] + elements[:4] + [confinement]


def characteristic_poly(elements, ell):
    """h = gcd(a_1, ..., a_D, x^ell - 1) and kappa = deg h."""
    polys = [a.as_poly() if hasattr(a, 'as_poly') else GF2Poly(a) for a in elements]
    if not any(polys):
        raise ValueError("all elements are zero")
    h = poly_gcd(x_pow_minus_one(ell), *polys)
    return h, int(h.degree)


def predicted_rank(D, j, ell, kappa):
    if not 1 <= j <= D:
        raise ValueError(f"level {j} out of range 1..{D}")
    return comb(D - 1, j - 1) * (ell - kappa)


def semisimple_kappa(complex_, D=None):
    """
    kappa = ell - rank Q_D for odd group order, after checking that every
    rank Q_j equals C(D-1, j-1) rank Q_D.
    """
    D = complex_.D if D is None else D
    ell = complex_.block_size
    if ell % 2 == 0:
        raise ValueError(f"group order {ell} is even: not semisimple; use characteristic_poly or direct ranks")
    top = complex_.ranks[D]
    for j in range(1, D + 1):
        if complex_.ranks[j] != comb(D - 1, j - 1) * top:
            raise InvariantError(f"rank Q_{j} = {complex_.ranks[j]} is not C({D - 1},{j - 1}) * {top}")
    return ell - top


def qhp_params(D, j, n, k, d):
    """[[N, K, Dist]] of the j-th level of the D-fold tensor power of a 1-complex [n, k, d]."""
    N = comb(D, j) * n ** D
    K = comb(D, j) * k ** D
    if K == 0:
        return N, 0, INFINITE
    return N, K, min(d ** j, d ** (D - j))


def distance_upper_bound(h, ell):
    """Minimum distance of the cyclic code of length ell with check polynomial h."""
    h = GF2Poly(h)
    modulus = x_pow_minus_one(ell)
    g, remainder = divmod(modulus, h)
    if remainder:
        raise ValueError(f"{h} does not divide x^{ell}-1")
    dimension = int(h.degree)
    if dimension <= 0:
        return INFINITE
    rows = np.zeros((dimension, ell), dtype=np.uint8)
    for i in range(dimension):
        rows[i, [e + i for e in g.exponents()]] = 1
    weight, _ = min_weight_codeword(BitMatrix.from_dense(rows))
    return weight


def parse_method(text):
    """``"exact:6,ris:100000"`` -> [('exact', 6), ('ris', 100000)]."""
    stages = []
    for part in text.split(','):
        name, _, value = part.strip().partition(':')
        if name not in ('exact', 'ris'):
            raise ValueError(f"unknown distance method {name!r}")
        stages.append((name, int(value) if value else None))
    return stages


def symmetry_starts(code):
    """One start column per block when the code is translation invariant, else None."""
    if code.block_size and code.source is not None:
        return list(range(0, code.n, code.block_size))
    return None


def exact_logical_weight(checks, logicals, cap, starts=None, threads=None):
    col_checks = column_supports(checks)
    col_logicals = column_supports(logicals)
    if starts is None:
        return min_logical_weight(col_checks, col_logicals, cap, threads=threads)
    return min_logical_weight(col_checks, col_logicals, cap, starts=starts, ordered=False, threads=threads)


def _ris_chunk(checks, logicals, seed, chunk):
    index, trials = chunk
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))
    n = checks.shape[1]
    best = (INFINITE, ())
    codes_ok = logicals.shape[0] <= 63
    shifts = np.arange(logicals.shape[0], dtype=np.uint64)
    for _ in range(trials):
        perm = rng.permutation(n)
        words = pack_rows(checks[:, perm])
        pivots = _reduce(words, n)
        reduced = unpack_rows(words[:len(pivots)], n).astype(np.int64)
        free = np.setdiff1d(np.arange(n), pivots)
        if not free.size:
            continue
        part = reduced[:, free]
        permuted_logicals = logicals[:, perm].astype(np.int64)
        effect = (permuted_logicals[:, free] + permuted_logicals[:, pivots] @ part) % 2
        nontrivial = effect.any(axis=0)
        weights = 1 + part.sum(axis=0)
        if nontrivial.any():
            i = int(np.argmin(np.where(nontrivial, weights, n + 1)))
            if weights[i] < best[0]:
                support = [free[i]] + [pivots[r] for r in np.flatnonzero(part[:, i])]
                best = (int(weights[i]), tuple(sorted(int(perm[c]) for c in support)))
        if codes_ok and free.size <= 512:
            codes = (effect.astype(np.uint64) << shifts[:, None]).sum(axis=0, dtype=np.uint64)
            gram = part.T @ part
            pair_weights = weights[:, None] + weights[None, :] - 2 * gram
            valid = (codes[:, None] != codes[None, :]) & np.triu(np.ones_like(gram, dtype=bool), 1)
            if valid.any():
                flat = int(np.argmin(np.where(valid, pair_weights, n + 1)))
                a, b = divmod(flat, free.size)
                if pair_weights[a, b] < best[0]:
                    column = (part[:, a] + part[:, b]) % 2
                    support = [free[a], free[b]] + [pivots[r] for r in np.flatnonzero(column)]
                    best = (int(pair_weights[a, b]), tuple(sorted(int(perm[c]) for c in support)))
    return best


def ris_logical_weight(checks, logicals, trials, seed=None, threads=None, chunk_trials=1000):
    """
    Random information set estimate of the smallest column set with zero
    syndrome and nonzero logical effect: an upper bound.

    Each trial eliminates ``checks`` over a random column order; every
    non-pivot column, and every pair of them for small codes, gives a
    kernel vector. Trials run in fixed chunks with their own substreams,
    so the result depends on ``seed`` only.
    """
    checks = _dense(checks)
    logicals = _dense(logicals)
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (1 << 63))
    chunks = [(i, min(chunk_trials, trials - start)) for i, start in enumerate(range(0, trials, chunk_trials))]
    results = parallel.run_parallel(partial(_ris_chunk, checks, logicals, seed), chunks, threads)
    weight, witness = min(results, key=lambda item: (item[0], item[1]))
    logger.info(f"ris_logical_weight: {weight} after {trials} trials (seed {seed})")
    return Distance(weight, 'ris', False, witness=witness, trials=trials, seed=seed)


def _dense(matrix):
    if hasattr(matrix, 'to_dense'):
        return matrix.to_dense()
    if hasattr(matrix, 'toarray'):
        return (matrix.toarray() % 2).astype(np.uint8)
    return np.asarray(matrix, dtype=np.uint8)


def logical_distance(checks, logicals, method='exact:6,ris:100000', seed=None, starts=None, threads=None):
    """Run the staged distance method on a (checks, logicals) pair."""
    stages = parse_method(method) if isinstance(method, str) else list(method)
    result = None
    for name, budget in stages:
        if name == 'exact':
            cap = 6 if budget is None else budget
            found = exact_logical_weight(checks, logicals, cap, starts=starts, threads=threads)
            if found is not None:
                return Distance(found[0], 'exact', True, witness=found[1], cap=cap)
            result = Distance(None, 'exact', False, cap=cap)
        else:
            return ris_logical_weight(checks, logicals, 100000 if budget is None else budget, seed=seed,
                                      threads=threads)
    return result


def min_distance(code, method='exact:6,ris:100000', seed=None, threads=None):
    """
    (dz, dx). dz is the smallest Z-type logical: hx e = 0 and e outside the
    row span of hz, detected as a nonzero pairing with the X logicals. dx
    is symmetric.
    """
    if code.k == 0:
        raise TrivialCodeError("trivial code: k = 0, all distances are infinite")
    lx, lz = logical_basis(code)
    starts = symmetry_starts(code)
    dz = logical_distance(code.hx, lx, method, seed=seed, starts=starts, threads=threads)
    dx = logical_distance(code.hz, lz, method, seed=seed, starts=starts, threads=threads)
    logger.info(f"min_distance: n={code.n} k={code.k} dz={dz} dx={dx}")
    return dz, dx


def syndrome_distance(hx, hz, cap=None):
    """Minimum weight of a nonzero syndrome, over both check types."""
    values = []
    for checks in (hx, hz):
        if checks.is_zero():
            continue
        found = min_weight_codeword(checks.T, cap)
        values.append(None if found is None else found[0])
    if not values:
        return INFINITE
    known = [v for v in values if v is not None]
    return min(known) if known else None


def _syndrome_rows(col_words, combos):
    return np.bitwise_xor.reduce(col_words[combos], axis=1)


def _small_syndromes(key_words, weight, chunk_size=1 << 17):
    """Unique extended syndromes of all errors of exactly ``weight`` columns."""
    parts = [np.unique(_syndrome_rows(key_words, combos), axis=0)
             for combos in combination_chunks(key_words.shape[0], weight, chunk_size)]
    if not parts:
        return np.zeros((0, key_words.shape[1]), dtype=np.uint64)
    return np.unique(np.vstack(parts), axis=0)


def _splittable(col_words, clusters):
    """Clusters splitting into two parts whose syndromes have disjoint supports."""
    weight = clusters.shape[1]
    split = np.zeros(clusters.shape[0], dtype=bool)
    for mask in range(1, 1 << (weight - 1)):
        left = [i for i in range(weight) if mask >> i & 1]
        right = [i for i in range(weight) if not mask >> i & 1]
        a = _syndrome_rows(col_words, clusters[:, left])
        b = _syndrome_rows(col_words, clusters[:, right])
        split |= ~(a & b).any(axis=1)
    return split


def _irreducible_minimum(col_words, key_words, smaller, clusters):
    syndromes = _syndrome_rows(col_words, clusters)
    weights = popcount(syndromes)
    keep = weights > 0
    if smaller.shape[0]:
        # a lighter error with the same syndrome and logical pairing differs by a stabilizer
        keys = _syndrome_rows(key_words, clusters)
        _, inverse = np.unique(np.vstack([smaller, keys]), axis=0, return_inverse=True)
        inverse = inverse.ravel()
        keep &= ~np.isin(inverse[smaller.shape[0]:], inverse[:smaller.shape[0]])
    if clusters.shape[1] > 1:
        keep &= ~_splittable(col_words, clusters)
    return int(weights[keep].min()) if keep.any() else None


def _confinement_chunk(col_words, key_words, adjacency, smaller, weight, ordered, roots, chunk_size=1 << 16):
    best = None
    batch = []

    def flush():
        nonlocal best
        if batch:
            value = _irreducible_minimum(col_words, key_words, smaller, np.array(batch, dtype=np.intp))
            if value is not None and (best is None or value < best):
                best = value
            batch.clear()

    for cluster in connected_subsets(adjacency, weight, roots=roots, ordered=ordered):
        batch.append(cluster)
        if len(batch) >= chunk_size:
            flush()
    flush()
    return best


def enumeration_size(n, max_w):
    """Number of errors the confinement scan tabulates below weight ``max_w``."""
    return sum(comb(n, w) for w in range(1, max_w))


def _side_profile(checks, logicals, max_w, starts, threads):
    col_words = pack_rows(checks.T.to_dense())
    key_words = pack_rows(BitMatrix.vstack(checks, logicals).T.to_dense())
    adjacency = neighbours(column_supports(checks), checks.rows)
    ordered = starts is None
    roots = list(range(checks.cols)) if ordered else starts
    n_workers = parallel.resolve_threads(threads)
    profile = []
    smaller = np.zeros((0, key_words.shape[1]), dtype=np.uint64)
    for w in range(1, max_w + 1):
        if w > 1:
            smaller = np.unique(np.vstack([smaller, _small_syndromes(key_words, w - 1)]), axis=0)
        task = partial(_confinement_chunk, col_words, key_words, adjacency, smaller, w, ordered)
        values = [v for v in parallel.run_parallel(task, parallel.chunked(roots, 4 * n_workers), n_workers)
                  if v is not None]
        profile.append(min(values) if values else None)
        logger.debug(f"confinement: weight {w} -> {profile[-1]}")
    return profile


def confinement_profile(code, max_w, threads=None, max_enumeration=None):
    """
    [(w, minimum syndrome weight of an irreducible weight-w error)] for
    w = 1..max_w, None where no irreducible error of that weight exists.

    An error is irreducible when its syndrome is nonzero, adding a
    stabilizer does not make it lighter, and it does not split into two
    parts with disjoint syndromes. A lighter error differing from it by a
    logical operator does not reduce it. Candidates are connected clusters;
    both check types are scanned and the smaller value kept.
    """
    size = enumeration_size(code.n, max_w)
    if max_enumeration is not None and size > max_enumeration:
        raise ValueError(f"confinement up to weight {max_w} tabulates {size} errors of n={code.n}, "
                         f"above max_enumeration={max_enumeration:g}")
    starts = symmetry_starts(code)
    if code.k:
        lx, lz = logical_basis(code)
    else:
        lx = lz = BitMatrix.zeros(0, code.n)
    sides = [_side_profile(checks, logicals, max_w, starts, threads)
             for checks, logicals in ((code.hx, lx), (code.hz, lz)) if checks.rows]
    profile = []
    for w in range(max_w):
        values = [side[w] for side in sides if side[w] is not None]
        profile.append((w + 1, min(values) if values else None))
    return profile


def code_params(code, method='exact:6,ris:100000', seed=None, confinement_w=0, threads=None, max_enumeration=None):
    """Collect n, k, d, the upper bound, d_S, kappa, h and optionally the confinement profile."""
    params = CodeParams(n=code.n, k=code.k)
    source = code.source
    if source is not None:
        params.elements = tuple(str(a) for a in source.elements)
        params.ell = source.group.order
        if source.group.rank == 1:
            params.h, params.kappa = characteristic_poly(source.elements, source.group.order)
            params.d_upper = distance_upper_bound(params.h, source.group.order)
        elif source.group.order % 2:
            params.kappa = semisimple_kappa(code.complex)
    if code.k:
        dz, dx = min_distance(code, method, seed=seed, threads=threads)
        params.d = min((dz, dx), key=lambda d: INFINITE if d.value is None else d.value)
    params.d_syndrome = syndrome_distance(code.hx, code.hz)
    if confinement_w:
        params.confinement = confinement_profile(code, confinement_w, threads=threads,
                                                 max_enumeration=max_enumeration)
    return params


def write_params_csv(rows, handle, header_lines=()):
    for line in header_lines:
        handle.write(f'# {line}\n')
    writer = csv.writer(handle)
    writer.writerow(PARAMS_COLUMNS)
    for params in rows:
        writer.writerow(params.as_row())
