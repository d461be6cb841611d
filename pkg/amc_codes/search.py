"""
Search for the best D = 4 AMC codes over cyclic groups with weight-2 elements.
"""
import csv
import logging
import math
from dataclasses import dataclass
from functools import partial
from importlib import resources
from itertools import combinations

from . import parallel
from .analysis import (INFINITE, CodeParams, Distance, characteristic_poly, distance_upper_bound,
                       exact_logical_weight, logical_distance, parse_method, symmetry_starts, syndrome_distance)
from .complexes import amc_build, amc_power, css_extract, logical_basis
from .group_algebra import AbelianGroup, GroupAlgebraElement

logger = logging.getLogger(__name__)

MIN_ELL = 7


@dataclass(frozen=True)
class TableRow:
    label: str
    ell: int
    exponents: tuple
    n: int
    k: int
    d: int
    d_s: int
    confinement: tuple = None


REFERENCE_TABLE = (
    TableRow('7', 7, (1, 2, 3, 4), 42, 6, 4, 4, (4, 4, 4, 6)),
    TableRow('10', 10, (1, 2, 3, 4), 60, 6, 5, 4, (4, 6, 6, 6, 4)),
    TableRow('11', 11, (1, 2, 3, 4), 66, 6, 6, 4, (4, 6, 6, 6, 4)),
    TableRow('14', 14, (1, 2, 5, 6), 84, 6, 7, 4, (4, 6, 6, 6, 4)),
    TableRow('16', 16, (1, 3, 5, 7), 96, 6, 8, 4, (4, 6, 8, 8, 4)),
    TableRow('18', 18, (1, 3, 5, 7), 108, 6, 9, 4, (4, 6, 8, 8, 4)),
    TableRow('25', 25, (1, 4, 6, 9), 150, 6, 10, 4, (4, 6, 8, 8, 4)),
    TableRow('28', 28, (1, 3, 7, 12), 168, 6, 11, 4, (4, 6, 8, 8, 4)),
    TableRow('30', 30, (2, 5, 8, 9), 180, 6, 12, 4, (4, 6, 8, 8, 4)),
    TableRow('2^4', 2, None, 96, 6, 4, 4, (4, 4, 4)),
    TableRow('3^4', 3, None, 486, 6, 9, 4, (4, 6, 6, 8, 4)),
)


def load_table1():
    """The bundled reference table rows as dicts of strings."""
    with resources.files('amc_codes').joinpath('data/table1.csv').open() as handle:
        return list(csv.DictReader(line for line in handle if not line.startswith('#')))


def candidate_elements(ell, exponents):
    group = AbelianGroup.cyclic(ell)
    return [GroupAlgebraElement.from_terms(group, [(0,), (e,)]) for e in exponents]


def build_candidate(ell, exponents, level=2):
    elements = candidate_elements(ell, exponents)
    return css_extract(amc_build(AbelianGroup.cyclic(ell), elements), level)


def build_table_row(row):
    """The level-2 code of a reference table row; rows without exponents are 4D toric codes over C_L^4."""
    if row.exponents is not None:
        return build_candidate(row.ell, row.exponents)
    group = AbelianGroup.cyclic(row.ell)
    return css_extract(amc_power(group, GroupAlgebraElement.from_terms(group, [(0,), (1,)]), 4), 2)


def canonical_exponents(ell, exponents):
    """Lexicographically smallest sorted image under x -> x^m, gcd(m, ell) = 1."""
    units = [m for m in range(1, ell) if math.gcd(m, ell) == 1]
    return min(tuple(sorted(e * m % ell for e in exponents)) for m in units)


def enumerate_candidates(ell, element_weight=2, D=4, require_h=True):
    """
    Exponent tuples 1 <= e_1 < ... < e_D <= ell-1, one per orbit of the power
    automorphisms, standing for the elements (1+x^e_1, ..., 1+x^e_D). With
    ``require_h`` only tuples with characteristic polynomial 1+x are kept.
    """
    if ell < MIN_ELL:
        raise ValueError(f"no valid tuple exists for ell = {ell} < {MIN_ELL}")
    if element_weight != 2:
        raise ValueError(f"only weight-2 elements are searched, got {element_weight}")
    for exponents in combinations(range(1, ell), D):
        if canonical_exponents(ell, exponents) != exponents:
            continue
        if require_h:
            h, _ = characteristic_poly(candidate_elements(ell, exponents), ell)
            if h != 0b11:
                continue
        yield exponents


def _evaluate(ell, method, seed, exponents, floor=None):
    """
    (distance, k) of a candidate. With a finite ``floor`` inside the exact
    cap, a logical of weight <= floor found by a capped enumeration ends the
    evaluation early: the candidate cannot beat the current best.
    """
    code = build_candidate(ell, exponents)
    if code.k == 0:
        return None
    lx, lz = logical_basis(code)
    starts = symmetry_starts(code)
    pairs = ((code.hx, lx), (code.hz, lz))
    if floor is not None and floor <= _exact_cap(method):
        for checks, logicals in pairs:
            found = exact_logical_weight(checks, logicals, floor, starts=starts, threads=1)
            if found is not None:
                return Distance(found[0], 'exact', True, witness=found[1], cap=floor), code.k
    best = None
    for checks, logicals in pairs:
        distance = logical_distance(checks, logicals, method, seed=seed, starts=starts, threads=1)
        if best is None or _value(distance) < _value(best):
            best = distance
    return best, code.k


def _exact_cap(method):
    caps = [6 if budget is None else budget for name, budget in parse_method(method) if name == 'exact']
    return max(caps, default=0)


def _value(distance):
    return INFINITE if distance.value is None else distance.value


def candidate_bound(ell, exponents):
    """Distance bound of the cyclic code with check polynomial h(x) of the candidate."""
    h, _ = characteristic_poly(candidate_elements(ell, exponents), ell)
    return distance_upper_bound(h, ell)


def search_best(ells, method='exact:6,ris:100000', seed=None, threads=None, require_h=True, element_weight=2):
    """
    Best candidate per ell: maximal distance, ties to the lexicographically
    smallest exponent tuple. Returns one CodeParams per ell with candidates.

    Candidates whose distance bound cannot exceed the best distance so far
    are skipped, and the others are first screened by an exact enumeration
    capped at that distance.
    """
    parse_method(method)
    n_workers = parallel.resolve_threads(threads)
    table = []
    for ell in ells:
        candidates = [(exponents, candidate_bound(ell, exponents))
                      for exponents in enumerate_candidates(ell, element_weight, require_h=require_h)]
        logger.info(f"search_best: ell={ell}, {len(candidates)} candidates")
        best = None
        skipped = 0
        start = 0
        while start < len(candidates):
            floor = None if best is None else _value(best[1])
            batch = []
            while start < len(candidates) and len(batch) < 4 * n_workers:
                exponents, bound = candidates[start]
                start += 1
                if floor is not None and bound <= floor:
                    skipped += 1
                else:
                    batch.append(exponents)
            if not batch:
                continue
            task = partial(_evaluate, ell, method, seed, floor=None if floor == INFINITE else floor)
            results = parallel.run_parallel(task, batch, n_workers)
            for exponents, result in zip(batch, results):
                if result is not None and (best is None or _value(result[0]) > _value(best[1])):
                    best = (exponents, result[0], result[1])
        if skipped:
            logger.info(f"search_best: ell={ell}, {skipped} candidates skipped by their distance bound")
        if best is None:
            continue
        exponents, d, k = best
        code = build_candidate(ell, exponents)
        elements = candidate_elements(ell, exponents)
        h, kappa = characteristic_poly(elements, ell)
        params = CodeParams(n=code.n, k=k, d=d, d_upper=distance_upper_bound(h, ell),
                            d_syndrome=syndrome_distance(code.hx, code.hz), kappa=kappa, h=h, ell=ell,
                            elements=tuple(str(a) for a in elements))
        logger.info(f"search_best: ell={ell} -> {exponents} [[{params.n},{params.k},{d}]]")
        table.append(params)
    return table


def compare_table1(rows):
    """[(ell, expected row, params, ok)] matching (n, k, d, d_S) against the reference table."""
    expected = {row.ell: row for row in REFERENCE_TABLE if row.exponents is not None}
    report = []
    for params in rows:
        row = expected.get(params.ell)
        got = (params.n, params.k, _value(params.d), params.d_syndrome)
        ok = row is not None and got == (row.n, row.k, row.d, row.d_s)
        report.append((params.ell, row, params, ok))
    return report
