"""
Detector error models: aggregated faults with probabilities, detector and
observable signatures, extracted from noisy circuits with stim.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import stim

from .analysis import INFINITE, Distance, logical_distance
from .exceptions import InvariantError, ParseError

logger = logging.getLogger(__name__)

PRUNE_BELOW = 1e-15


@dataclass(frozen=True)
class Fault:
    probability: float
    detectors: tuple
    observables: tuple

    @property
    def signature(self):
        return self.detectors, self.observables


def combine(p, q):
    """Probability that exactly one of two independent faults fires."""
    return p * (1 - q) + q * (1 - p)


class DetectorErrorModel:
    """
    Faults with distinct, nonempty signatures in canonical order (detector
    set lexicographic, then observable set). Identical signatures are merged
    with ``combine``; probabilities below ``prune_below`` are dropped.
    ``coords`` maps detector index to its (round, type, row) coordinates.
    """

    def __init__(self, faults, num_detectors, num_observables, coords=None, prune_below=PRUNE_BELOW):
        merged = {}
        for fault in faults:
            detectors = tuple(sorted(set(int(d) for d in fault.detectors)))
            observables = tuple(sorted(set(int(o) for o in fault.observables)))
            if len(detectors) != len(fault.detectors) or len(observables) != len(fault.observables):
                raise ValueError(f"fault {fault} repeats a detector or observable")
            if not detectors and not observables:
                continue
            if detectors and detectors[-1] >= num_detectors:
                raise ValueError(f"detector D{detectors[-1]} out of range for {num_detectors} detectors")
            if observables and observables[-1] >= num_observables:
                raise ValueError(f"observable L{observables[-1]} out of range for {num_observables} observables")
            key = (detectors, observables)
            merged[key] = combine(merged.get(key, 0.0), float(fault.probability))
        self.faults = tuple(Fault(p, d, o) for (d, o), p in sorted(merged.items()) if p >= prune_below)
        self.num_detectors = int(num_detectors)
        self.num_observables = int(num_observables)
        self.coords = dict(coords or {})

    def __len__(self):
        return len(self.faults)

    def __iter__(self):
        return iter(self.faults)

    def __eq__(self, other):
        if not isinstance(other, DetectorErrorModel):
            return NotImplemented
        return (self.num_detectors, self.num_observables, self.faults) == \
            (other.num_detectors, other.num_observables, other.faults)

    __hash__ = None

    def __repr__(self):
        return f"DetectorErrorModel({len(self)} faults, {self.num_detectors} detectors, " \
               f"{self.num_observables} observables)"

    @property
    def probabilities(self):
        return np.array([f.probability for f in self.faults], dtype=np.float64)

    def check_matrices(self):
        """(H, L) as CSC matrices: detectors x faults and observables x faults."""
        return (_incidence([f.detectors for f in self.faults], self.num_detectors),
                _incidence([f.observables for f in self.faults], self.num_observables))

    def detector_rounds(self):
        """Round coordinate of each detector; detectors without coordinates get -1."""
        return np.array([self.coords[d][0] if d in self.coords else -1 for d in range(self.num_detectors)],
                        dtype=np.int64)

    def detector_types(self):
        return np.array([self.coords[d][1] if d in self.coords else -1 for d in range(self.num_detectors)],
                        dtype=np.int64)

    def restrict(self, check_type):
        """Keep only detectors of one check type (0 = Z, 1 = X), renumbered in order, and re-merge."""
        kept = [d for d in range(self.num_detectors) if d in self.coords and self.coords[d][1] == check_type]
        renumber = {d: i for i, d in enumerate(kept)}
        faults = [Fault(f.probability, tuple(renumber[d] for d in f.detectors if d in renumber), f.observables)
                  for f in self.faults]
        return DetectorErrorModel(faults, len(kept), self.num_observables,
                                  coords={renumber[d]: self.coords[d] for d in kept})

    @classmethod
    def from_stim(cls, dem, prune_below=PRUNE_BELOW):
        faults, coords = [], {}
        for instruction in dem.flattened():
            if instruction.type == 'error':
                detectors, observables = [], []
                for target in instruction.targets_copy():
                    if target.is_relative_detector_id():
                        detectors.append(target.val)
                    elif target.is_logical_observable_id():
                        observables.append(target.val)
                # the same detector twice in one error cancels
                detectors = [d for d in set(detectors) if detectors.count(d) % 2]
                observables = [o for o in set(observables) if observables.count(o) % 2]
                faults.append(Fault(instruction.args_copy()[0], tuple(detectors), tuple(observables)))
            elif instruction.type == 'detector' and instruction.args_copy():
                for target in instruction.targets_copy():
                    coords[target.val] = tuple(int(round(c)) for c in instruction.args_copy())
        return cls(faults, dem.num_detectors, dem.num_observables, coords=coords, prune_below=prune_below)

    def to_stim(self):
        dem = stim.DetectorErrorModel()
        for fault in self.faults:
            targets = [stim.target_relative_detector_id(d) for d in fault.detectors] + \
                      [stim.target_logical_observable_id(o) for o in fault.observables]
            dem.append('error', fault.probability, targets)
        for d in range(self.num_detectors):
            if d in self.coords:
                dem.append('detector', list(self.coords[d]), [stim.target_relative_detector_id(d)])
            elif d == self.num_detectors - 1:
                dem.append('detector', [], [stim.target_relative_detector_id(d)])
        for o in range(self.num_observables):
            dem.append('logical_observable', [], [stim.target_logical_observable_id(o)])
        return dem

    def to_text(self):
        """``error(p) D.. L..`` lines followed by ``detector(r, t, i) D..`` lines."""
        return str(self.to_stim()) + '\n'

    @classmethod
    def from_text(cls, text):
        try:
            dem = stim.DetectorErrorModel(text)
        except ValueError as exc:
            raise ParseError(f"invalid detector error model: {exc}") from exc
        return cls.from_stim(dem)


def _incidence(supports, rows):
    cols = [c for c, support in enumerate(supports) for _ in support]
    indices = [r for support in supports for r in support]
    data = np.ones(len(indices), dtype=np.uint8)
    return scipy.sparse.csc_matrix((data, (indices, cols)), shape=(rows, len(supports)), dtype=np.uint8)


def extract_dem(circuit, prune_below=PRUNE_BELOW):
    """
    Propagate every elementary fault of a noisy circuit to the detectors and
    observables it flips and aggregate faults with identical effect.
    A detector that is not deterministic without noise is an InvariantError.
    """
    try:
        dem = circuit.detector_error_model(decompose_errors=False, flatten_loops=True)
    except ValueError as exc:
        raise InvariantError(f"circuit has a non-deterministic detector or observable: {exc}") from exc
    model = DetectorErrorModel.from_stim(dem, prune_below=prune_below)
    logger.info(f"extract_dem: {model}")
    return model


def circuit_distance(dem, method='exact:6,ris:100000', seed=None, threads=None):
    """Fewest faults with an empty detector signature and a nonempty observable signature."""
    if not len(dem) or not dem.num_observables:
        return Distance(INFINITE, 'exact', True)
    checks, logicals = dem.check_matrices()
    undetectable = [f for f in dem.faults if not f.detectors and f.observables]
    if undetectable:
        logger.warning(f"circuit_distance: {len(undetectable)} faults flip observables without any detector")
    distance = logical_distance(checks, logicals, method, seed=seed, threads=threads)
    logger.info(f"circuit_distance: {distance}")
    return distance
