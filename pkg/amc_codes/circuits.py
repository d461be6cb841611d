"""
Syndrome-measurement circuits for level-2, D = 4 AMC codes.

Every measurement round drops one block-row from each check matrix (the
block-row without the round's "D" element, see ``drop_order``), measures the remaining 3 + 3
block-rows in six moments and closes with measure-reset of the ancillas.
Circuits are ``stim.Circuit`` objects:

* ``QUBIT_COORDS(kind, index)`` tags data qubits (kind 0, index = column of
  the check matrices), X-check ancillas (kind 1, index = hx row) and Z-check
  ancillas (kind 2, index = hz row);
* ``SHIFT_COORDS(1)`` opens each round, so detector coordinates
  ``(round, type, row)`` count rounds from 1;
* detector type 0 is a Z-check, 1 an X-check.
"""
import logging
from enum import Enum
from itertools import permutations

import numpy as np
import stim

from . import gf2
from .complexes import ZERO_BLOCK, logical_basis
from .exceptions import InvariantError, ParseError

logger = logging.getLogger(__name__)

DATA, X_ANCILLA, Z_ANCILLA = 0, 1, 2
Z_TYPE, X_TYPE = 0, 1
CHECK_TYPES = {'Z': Z_TYPE, 'X': X_TYPE}

MOMENTS = 6
X_COUPLINGS = ('cx', 'xcx')


class Cycle(Enum):
    """Drop sequences of a four-round measurement cycle."""

    C1111 = '1111', (1, 1, 1, 1)
    C1212 = '1212', (1, 2, 1, 2)
    C1234 = '1234', (1, 2, 3, 4)

    def __init__(self, label, drops):
        self.label = label
        self.drops = drops

    @classmethod
    def parse(cls, value):
        if isinstance(value, Cycle):
            return value
        for cycle in cls:
            if cycle.label == str(value):
                return cycle
        raise ValueError(f"unsupported cycle {value!r}, expected one of {', '.join(c.label for c in cls)}")

    def drop_for(self, round_index):
        """Drop of measurement round ``round_index`` (0-based)."""
        return self.drops[round_index % len(self.drops)]


class RoundLayout:
    """
    Block structure of one measurement round.

    ``x_rows`` / ``z_rows`` are the kept block-rows of hx / hz, ``x_d_cols``
    the block-column of the D element in each kept hx row and ``z_d_cols`` the
    block-column of D-hat in each kept hz row. ``x_pairs`` / ``z_pairs`` are
    the two perfect matchings between kept rows and their remaining blocks.
    """

    def __init__(self, code, drop):
        hx_grid, hz_grid = _label_grids(code)
        D = len(code.source.elements)
        if not 1 <= drop <= D:
            raise ValueError(f"drop must be in 1..{D}, got {drop}")
        self.drop = drop
        self.label = drop_order(code)[drop - 1]
        self.x_rows, self.x_d_cols = _kept_rows(hx_grid, self.label, 'hx')
        self.z_rows, self.z_d_cols = _kept_rows(hz_grid, self.label, 'hz')
        others = sorted(set(range(hx_grid.shape[1])) - set(self.x_d_cols))
        if sorted(self.z_d_cols) != others:
            raise InvariantError(f"drop {drop}: D-hat blocks sit in columns {self.z_d_cols}, expected {others}")
        self.permutation_blocks = list(self.x_d_cols) + others
        self.hx_grid, self.hz_grid = hx_grid, hz_grid
        self.x_pairs = _matchings(hx_grid, self.x_rows, self.x_d_cols)
        self.z_pairs = _matchings(hz_grid, self.z_rows, self.z_d_cols)


def _label_grids(code):
    complex_ = code.complex
    if complex_ is None or complex_.layout is None or code.source is None:
        raise ValueError("circuits need a code built by amc_build")
    if complex_.D != 4 or code.level != 2:
        raise ValueError(f"circuits are generated for level-2 D=4 codes, got D={complex_.D} level={code.level}")
    return complex_.layout[1], complex_.layout[2].T


def divides_all(elements, i):
    """True if every element lies in the ideal generated by ``elements[i]``."""
    base = elements[i].regular_rep()
    base_rank = gf2.rank(base)
    return all(gf2.rank(gf2.BitMatrix.vstack(base, a.regular_rep())) == base_rank
               for j, a in enumerate(elements) if j != i)


def drop_order(code):
    """
    Element index kept as the D element by drops 1..D.

    Drop 1 uses the last element that divides all the others, so the rounds
    labelled 1 measure a full-rank set of checks; the remaining drops walk
    the other elements from the last one down.
    """
    elements = code.source.elements
    D = len(elements)
    factors = [i for i in range(D) if divides_all(elements, i)]
    if not factors:
        logger.warning(f"no element divides all of {', '.join(map(str, elements))}; "
                       f"rounds labelled 1 lose rank")
        first = D - 1
    else:
        first = factors[-1]
    return (first,) + tuple(i for i in reversed(range(D)) if i != first)


def _kept_rows(grid, label, name):
    rows, d_cols = [], []
    for r, line in enumerate(grid):
        hits = np.flatnonzero(line == label)
        if len(hits) > 1:
            raise InvariantError(f"{name} block-row {r} holds element {label} {len(hits)} times")
        if len(hits) == 1:
            rows.append(r)
            d_cols.append(int(hits[0]))
    if len(rows) != grid.shape[0] - 1:
        raise InvariantError(f"{name}: element {label} appears in {len(rows)} block-rows, expected {grid.shape[0] - 1}")
    return tuple(rows), tuple(d_cols)


def _matchings(grid, rows, d_cols):
    """The two perfect matchings of kept rows onto their non-D blocks, lexicographically ordered."""
    edges = {(r, c) for r, d in zip(rows, d_cols) for c in np.flatnonzero(grid[r] != ZERO_BLOCK) if c != d}
    columns = sorted({c for _, c in edges})
    found = [tuple(zip(rows, order)) for order in permutations(columns)
             if all((r, c) in edges for r, c in zip(rows, order))]
    if len(found) != 2:
        raise InvariantError(f"expected two perfect matchings between rows {rows} and blocks, found {len(found)}")
    return sorted(found)


def dropped_matrices(code, drop):
    """
    (hx_r, hz_r, permutation) for one round. Kept block-rows keep their order;
    columns are permuted so that the D blocks of hx_r come first. Column i of
    the returned matrices is column ``permutation[i]`` of the code.
    """
    layout = RoundLayout(code, drop)
    ell = code.block_size
    permutation = np.concatenate([np.arange(c * ell, (c + 1) * ell) for c in layout.permutation_blocks])
    x_index = np.concatenate([np.arange(r * ell, (r + 1) * ell) for r in layout.x_rows])
    z_index = np.concatenate([np.arange(r * ell, (r + 1) * ell) for r in layout.z_rows])
    hx_r = code.hx.take_rows(x_index).take_cols(permutation)
    hz_r = code.hz.take_rows(z_index).take_cols(permutation)
    return hx_r, hz_r, permutation


class RoundSchedule:
    """
    Gates of one round as six moments of (check type, check row, data column)
    triples, rows and columns indexed as in the code's hx / hz.
    """

    def __init__(self, drop, moments, x_rows, z_rows):
        self.drop = drop
        self.moments = moments
        self.x_rows = x_rows
        self.z_rows = z_rows

    def gates(self):
        return [gate for moment in self.moments for gate in moment]

    def __len__(self):
        return len(self.moments)


def _monomials(element):
    support = element.sorted_support()
    if len(support) != 2:
        raise ValueError(f"the addressing scheme needs weight-2 elements, got {element}")
    return support


def _block_targets(group, block_col, g, sign):
    """Data columns of block ``block_col`` addressed by monomial g from each row element alpha."""
    table = group.element_table
    shifted = (table + sign * np.asarray(g)) % np.asarray(group.orders)
    return block_col * group.order + shifted @ np.asarray(group.strides)


def build_round(code, drop):
    """
    Six-moment schedule: the D monomials at moments 1 and 6 (X rows: mono0
    first; Z rows: mono1 first), the two remaining blocks at moments 2-3 and
    4-5 following the two row-to-block matchings.
    """
    layout = RoundLayout(code, drop)
    group = code.source.group
    elements = code.source.elements
    ell = group.order
    moments = [[] for _ in range(MOMENTS)]

    def address(kind, grid, row_block, col_block, monomial, moment):
        # X rows hit column g^-1 alpha, Z rows (blocks M(hat a)) hit g alpha
        g = _monomials(elements[grid[row_block, col_block]])[monomial]
        targets = _block_targets(group, col_block, g, -1 if kind == X_TYPE else 1)
        for alpha in range(ell):
            moments[moment].append((kind, row_block * ell + alpha, int(targets[alpha])))

    for r, c in zip(layout.x_rows, layout.x_d_cols):
        address(X_TYPE, layout.hx_grid, r, c, 0, 0)
        address(X_TYPE, layout.hx_grid, r, c, 1, 5)
    for r, c in zip(layout.z_rows, layout.z_d_cols):
        address(Z_TYPE, layout.hz_grid, r, c, 1, 0)
        address(Z_TYPE, layout.hz_grid, r, c, 0, 5)
    for kind, grid, pairs in ((X_TYPE, layout.hx_grid, layout.x_pairs), (Z_TYPE, layout.hz_grid, layout.z_pairs)):
        for base, matching in zip((1, 3), pairs):
            for r, c in matching:
                address(kind, grid, r, c, 0, base)
                address(kind, grid, r, c, 1, base + 1)
    x_rows = tuple(r * ell + a for r in layout.x_rows for a in range(ell))
    z_rows = tuple(r * ell + a for r in layout.z_rows for a in range(ell))
    return RoundSchedule(drop, [tuple(moment) for moment in moments], x_rows, z_rows)


def schedule_is_valid(schedule, hx, hz):
    """
    True when every moment touches each qubit once, every measured check
    touches exactly its support, and each overlapping X/Z check pair meets
    X-first on an even number of shared qubits.
    """
    n = hx.cols
    timing = {X_TYPE: np.full((hx.rows, n), -1), Z_TYPE: np.full((hz.rows, n), -1)}
    for t, moment in enumerate(schedule.moments):
        data_seen, checks_seen = set(), set()
        for kind, row, q in moment:
            if q in data_seen or (kind, row) in checks_seen:
                logger.warning(f"schedule conflict in moment {t + 1} on data {q} or check {(kind, row)}")
                return False
            data_seen.add(q)
            checks_seen.add((kind, row))
            if timing[kind][row, q] != -1:
                return False
            timing[kind][row, q] = t
    for kind, matrix, rows in ((X_TYPE, hx, schedule.x_rows), (Z_TYPE, hz, schedule.z_rows)):
        touched = (timing[kind][list(rows)] >= 0).astype(np.uint8)
        if not np.array_equal(touched, matrix.take_rows(list(rows)).to_dense()):
            logger.warning(f"schedule does not cover the supports of the measured type-{kind} checks")
            return False
    tx = timing[X_TYPE][list(schedule.x_rows)]
    tz = timing[Z_TYPE][list(schedule.z_rows)]
    x_first = np.zeros((len(schedule.x_rows), len(schedule.z_rows)), dtype=np.int64)
    for t in range(len(schedule.moments)):
        x_first += (tx == t).astype(np.int64) @ (tz > t).astype(np.int64).T
    return bool(np.all(x_first % 2 == 0))


class _Records:
    """Measurement record bookkeeping for detector and observable targets."""

    def __init__(self):
        self.count = 0
        self.last = {}

    def measure(self, count):
        indices = list(range(self.count, self.count + count))
        self.count += count
        return indices

    def target(self, index):
        return stim.target_rec(index - self.count)


def qubit_indices(code):
    """(data, x ancillas, z ancillas) qubit id lists."""
    n, rx = code.n, code.hx.rows
    return list(range(n)), list(range(n, n + rx)), list(range(n + rx, n + rx + code.hz.rows))


def build_memory_circuit(code, cycle='1212', basis='Z', rounds=9, x_check_coupling='xcx'):
    """
    Noiseless memory experiment: ``rounds - 1`` measurement rounds following
    the cycle's drop sequence, then a transversal data measurement in
    ``basis``. Each detector compares a check with its previous measurement;
    checks of the basis type start from their deterministic initial value.
    """
    cycle = Cycle.parse(cycle)
    basis = str(basis).upper()
    if basis not in CHECK_TYPES:
        raise ValueError(f"basis must be Z or X, got {basis!r}")
    if x_check_coupling not in X_COUPLINGS:
        raise ValueError(f"x_check_coupling must be one of {X_COUPLINGS}, got {x_check_coupling!r}")
    if rounds < 2:
        raise ValueError(f"need at least one measurement round and the final round, got rounds={rounds}")
    lx, lz = logical_basis(code)
    data, x_anc, z_anc = qubit_indices(code)
    compatible = CHECK_TYPES[basis]
    x_measure = 'MRX' if x_check_coupling == 'cx' else 'MR'
    ancilla = {X_TYPE: x_anc, Z_TYPE: z_anc}

    circuit = stim.Circuit()
    for kind, qubits in ((DATA, data), (X_ANCILLA, x_anc), (Z_ANCILLA, z_anc)):
        for index, q in enumerate(qubits):
            circuit.append('QUBIT_COORDS', [q], [kind, index])
    circuit.append('R' if basis == 'Z' else 'RX', data)
    circuit.append('RX' if x_check_coupling == 'cx' else 'R', x_anc)
    circuit.append('R', z_anc)
    circuit.append('TICK')

    schedules = {}
    for drop in sorted(set(cycle.drop_for(i) for i in range(rounds - 1))):
        schedule = build_round(code, drop)
        if not schedule_is_valid(schedule, code.hx, code.hz):
            raise InvariantError(f"round schedule for drop {drop} is not a valid measurement")
        schedules[drop] = schedule

    records = _Records()
    for r in range(rounds - 1):
        schedule = schedules[cycle.drop_for(r)]
        circuit.append('SHIFT_COORDS', [], [1])
        for moment in schedule.moments:
            pairs = {'CX': [], 'XCX': []}
            for kind, row, q in moment:
                if kind == Z_TYPE:
                    pairs['CX'] += [q, z_anc[row]]
                elif x_check_coupling == 'cx':
                    pairs['CX'] += [x_anc[row], q]
                else:
                    pairs['XCX'] += [x_anc[row], q]
            for gate, targets in pairs.items():
                if targets:
                    circuit.append(gate, targets)
            circuit.append('TICK')
        measured = [(Z_TYPE, row) for row in schedule.z_rows] + [(X_TYPE, row) for row in schedule.x_rows]
        circuit.append('MR', [z_anc[row] for row in schedule.z_rows])
        circuit.append(x_measure, [x_anc[row] for row in schedule.x_rows])
        indices = records.measure(len(measured))
        for key, index in zip(measured, indices):
            previous = records.last.get(key)
            if previous is not None:
                circuit.append('DETECTOR', [records.target(index), records.target(previous)], [0, key[0], key[1]])
            elif key[0] == compatible:
                circuit.append('DETECTOR', [records.target(index)], [0, key[0], key[1]])
            records.last[key] = index
        circuit.append('TICK')

    circuit.append('SHIFT_COORDS', [], [1])
    circuit.append('M' if basis == 'Z' else 'MX', data)
    data_records = records.measure(len(data))
    checks = code.hz if basis == 'Z' else code.hx
    for row, support in enumerate(checks.supports()):
        targets = [records.target(data_records[q]) for q in support]
        previous = records.last.get((compatible, row))
        if previous is not None:
            targets.append(records.target(previous))
        circuit.append('DETECTOR', targets, [0, compatible, row])
    logicals = lz if basis == 'Z' else lx
    for k, support in enumerate(logicals.supports()):
        circuit.append('OBSERVABLE_INCLUDE', [records.target(data_records[q]) for q in support], [k])
    logger.info(f"build_memory_circuit: cycle {cycle.label}, basis {basis}, {rounds} rounds, "
                f"{circuit.num_qubits} qubits, {circuit.num_detectors} detectors")
    return circuit


def data_qubits(circuit):
    return sorted(q for q, coords in circuit.get_final_qubit_coordinates().items() if coords and coords[0] == DATA)


def apply_error_model(circuit, p):
    """
    Insert circuit-level noise: DEPOLARIZE1(p) on data qubits at the start of
    every round, DEPOLARIZE2(p) after every two-qubit gate, and flips with
    probability p before and after every ancilla measure-reset (X_ERROR around
    MR, Z_ERROR around MRX). Idling is noiseless.
    """
    if not 0 <= p < 1:
        raise ValueError(f"error probability must lie in [0, 1), got {p}")
    if p == 0:
        return circuit.copy()
    data = data_qubits(circuit)
    noisy = stim.Circuit()
    sites = 0
    for instruction in circuit:
        if isinstance(instruction, stim.CircuitRepeatBlock):
            raise ValueError("REPEAT blocks are not supported by apply_error_model")
        name = instruction.name
        targets = instruction.targets_copy()
        if name in ('MR', 'MRX'):
            channel = 'X_ERROR' if name == 'MR' else 'Z_ERROR'
            noisy.append(channel, targets, p)
            noisy.append(instruction)
            noisy.append(channel, targets, p)
            sites += 2 * len(targets)
            continue
        noisy.append(instruction)
        if name == 'SHIFT_COORDS':
            noisy.append('DEPOLARIZE1', data, p)
            sites += len(data)
        elif name in ('CX', 'XCX'):
            noisy.append('DEPOLARIZE2', targets, p)
            sites += len(targets)
    logger.debug(f"apply_error_model: p={p}, {sites} single-qubit noise sites")
    return noisy


def noise_sites(circuit):
    """Qubit-level noise locations, counting each qubit of a channel once."""
    counts = {}
    for instruction in circuit.flattened():
        if instruction.name in ('DEPOLARIZE1', 'DEPOLARIZE2', 'X_ERROR', 'Z_ERROR'):
            counts[instruction.name] = counts.get(instruction.name, 0) + len(instruction.targets_copy())
    return counts


def to_text(circuit):
    return str(circuit) + '\n'


def from_text(text):
    try:
        return stim.Circuit(text)
    except ValueError as exc:
        raise ParseError(f"invalid circuit text: {exc}") from exc


def round_matrices(code, drop):
    """hx and hz restricted to the rows measured in a round of the given drop."""
    schedule = build_round(code, drop)
    return code.hx.take_rows(list(schedule.x_rows)), code.hz.take_rows(list(schedule.z_rows))
