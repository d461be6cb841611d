"""
Syndrome decoding against a detector error model.

The cascade is: a lookup table of small connected fault clusters, then
serial-schedule sum-product BP from ``ldpc``; when that does not converge,
the layered BP here retries with hard decisions from the running-average
LLRs, and the OSD-1 (combination sweep) output of ``ldpc`` is used last.
``sliding_window`` runs the cascade on windows of T rounds and commits the
oldest round of each window.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property, partial

import numpy as np
import scipy.sparse
from ldpc.bposd_decoder import BpOsdDecoder

from . import parallel
from .clusters import column_supports, connected_subsets, neighbours
from .exceptions import UnmatchableSyndromeError

logger = logging.getLogger(__name__)

CLUSTER_WEIGHT = 2
BP_MAX_ITER = 50
_P_CLIP = 1e-15
_TANH_CLIP = 1 - 1e-15


class DecoderGraph:
    """
    H (detectors x faults), L (observables x faults) and the prior LLRs
    log((1-p)/p) of the faults. ``fault_ids`` index the faults of the model
    the graph came from; ``detector_rounds`` give the round of each row.
    """

    def __init__(self, H, L, priors, fault_ids=None, detector_rounds=None):
        self.H = scipy.sparse.csr_matrix(H, dtype=np.uint8)
        self.L = scipy.sparse.csr_matrix(L, dtype=np.uint8)
        if self.H.shape[1] != self.L.shape[1] or self.H.shape[1] != len(priors):
            raise ValueError(f"H {self.H.shape}, L {self.L.shape} and {len(priors)} priors disagree")
        self.priors = np.clip(np.asarray(priors, dtype=np.float64), _P_CLIP, 1 - _P_CLIP)
        self.llr = np.log((1 - self.priors) / self.priors)
        self.fault_ids = np.arange(self.num_faults) if fault_ids is None else np.asarray(fault_ids)
        self.detector_rounds = None if detector_rounds is None else np.asarray(detector_rounds)
        csr = self.H.tocsr()
        csr.sort_indices()
        self._edge_check = np.repeat(np.arange(self.num_detectors), np.diff(csr.indptr))
        self._edge_var = csr.indices.astype(np.intp)

    @classmethod
    def from_dem(cls, dem):
        """Faults without detectors cannot be inferred and are left out."""
        keep = [i for i, f in enumerate(dem.faults) if f.detectors]
        H, L = dem.check_matrices()
        graph = cls(H[:, keep], L[:, keep], dem.probabilities[keep], fault_ids=keep,
                    detector_rounds=dem.detector_rounds())
        logger.debug(f"DecoderGraph.from_dem: {graph.num_detectors} detectors, {graph.num_faults} faults "
                     f"({len(dem) - len(keep)} undetectable faults dropped)")
        return graph

    @property
    def num_detectors(self):
        return self.H.shape[0]

    @property
    def num_faults(self):
        return self.H.shape[1]

    def syndrome_of(self, correction):
        return (self.H @ np.asarray(correction, dtype=np.int64)) % 2

    def flips_of(self, correction):
        return (self.L @ np.asarray(correction, dtype=np.int64)) % 2

    @cached_property
    def layers(self):
        """Check-node layers; no two checks of a layer share a fault. Each layer is an array of edge indices."""
        used, members = [], []
        csr = self.H.tocsr()
        for c in range(self.num_detectors):
            variables = set(csr.indices[csr.indptr[c]:csr.indptr[c + 1]].tolist())
            for layer_vars, layer_checks in zip(used, members):
                if not variables & layer_vars:
                    layer_vars |= variables
                    layer_checks.append(c)
                    break
            else:
                used.append(set(variables))
                members.append([c])
        layers = []
        for checks in members:
            edges = np.concatenate([np.arange(csr.indptr[c], csr.indptr[c + 1]) for c in checks])
            if edges.size:
                layers.append(edges.astype(np.intp))
        return layers

    def cluster_table(self, weight=CLUSTER_WEIGHT):
        """Syndrome bitmask -> lightest (by prior LLR) connected cluster of at most ``weight`` faults."""
        cache = self.__dict__.setdefault('_cluster_tables', {})
        if weight not in cache:
            cache[weight] = _build_cluster_table(self, weight)
        return cache[weight]

    def bposd(self, max_iter=BP_MAX_ITER):
        """Serial-schedule product-sum BP with OSD-1 fallback, built once per ``max_iter``."""
        cache = self.__dict__.setdefault('_bposd', {})
        if max_iter not in cache:
            cache[max_iter] = BpOsdDecoder(
                self.H,
                error_channel=self.priors.tolist(),
                max_iter=max_iter,
                bp_method='product_sum',
                schedule='serial',
                osd_method='osd_cs',
                osd_order=1,
            )
        return cache[max_iter]

    def __getstate__(self):
        # ldpc decoders do not pickle; workers rebuild their own
        state = dict(self.__dict__)
        state.pop('_bposd', None)
        return state

    def window(self, start, T):
        """
        Window of rounds [start, start + T): the faults whose first detector
        round lies in the window, restricted to the window's detectors.
        Returns (graph, fault columns, detector rows, commit mask); the commit
        mask marks faults first detected in round ``start``, or every fault
        when the window reaches the last round.
        """
        if self.detector_rounds is None:
            raise ValueError("window decoding needs detector rounds")
        first = _first_rounds(self)
        last_round = int(self.detector_rounds.max())
        stop = start + T
        columns = np.flatnonzero((first >= start) & (first < stop))
        rows = np.flatnonzero((self.detector_rounds >= start) & (self.detector_rounds < stop))
        sub = DecoderGraph(self.H[rows][:, columns], self.L[:, columns], self.priors[columns],
                           fault_ids=self.fault_ids[columns], detector_rounds=self.detector_rounds[rows])
        commit = np.ones(len(columns), dtype=bool) if stop > last_round else first[columns] == start
        return sub, columns, rows, commit


def _first_rounds(graph):
    csc = graph.H.tocsc()
    first = np.full(graph.num_faults, np.iinfo(np.int64).max, dtype=np.int64)
    for f in range(graph.num_faults):
        rows = csc.indices[csc.indptr[f]:csc.indptr[f + 1]]
        if rows.size:
            first[f] = graph.detector_rounds[rows].min()
    return first


def _mask(indices):
    mask = 0
    for i in indices:
        mask ^= 1 << int(i)
    return mask


def _build_cluster_table(graph, weight):
    col_checks = column_supports(graph.H)
    signatures = [_mask(checks) for checks in col_checks]
    adjacency = neighbours(col_checks, graph.num_detectors)
    table = {0: (0.0, ())}
    for size in range(1, weight + 1):
        for cluster in connected_subsets(adjacency, size):
            key = 0
            for f in cluster:
                key ^= signatures[f]
            if not key:
                continue
            cost = float(graph.llr[list(cluster)].sum())
            if key not in table or cost < table[key][0]:
                table[key] = (cost, cluster)
    logger.debug(f"cluster table: {len(table)} syndromes from clusters of up to {weight} faults")
    return table


def cluster_predecode(graph, syndrome, weight=CLUSTER_WEIGHT):
    """Correction from the cluster table, or None on a miss."""
    key = _mask(np.flatnonzero(syndrome))
    hit = graph.cluster_table(weight).get(key)
    if hit is None:
        return None
    correction = np.zeros(graph.num_faults, dtype=np.uint8)
    correction[list(hit[1])] = 1
    return correction


@dataclass
class BPResult:
    correction: np.ndarray
    converged: bool
    llr: np.ndarray
    iterations: int


def bp_decode(graph, syndrome, max_iter=BP_MAX_ITER):
    """
    Sum-product BP with a serial schedule over check layers. After every
    sweep the hard decisions of the instantaneous and of the averaged LLRs
    are tested against the syndrome; the first that matches is returned.
    """
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    if not syndrome.any():
        return BPResult(np.zeros(graph.num_faults, dtype=np.uint8), True, graph.llr.copy(), 0)
    edge_check, edge_var = graph._edge_check, graph._edge_var
    check_sign = np.where(syndrome[edge_check] == 1, -1.0, 1.0)
    messages = np.zeros(len(edge_var))
    posterior = graph.llr.copy()
    total = np.zeros(graph.num_faults)
    for iteration in range(1, max_iter + 1):
        for edges in graph.layers:
            variables = edge_var[edges]
            incoming = posterior[variables] - messages[edges]
            t = np.clip(np.tanh(incoming / 2), -_TANH_CLIP, _TANH_CLIP)
            magnitude = np.log(np.maximum(np.abs(t), 1e-300))
            sign = np.where(t < 0, -1.0, 1.0)
            checks = edge_check[edges]
            starts = np.flatnonzero(np.r_[True, checks[1:] != checks[:-1]])
            sizes = np.diff(np.r_[starts, len(edges)])
            others = np.repeat(np.add.reduceat(magnitude, starts), sizes) - magnitude
            parity = np.repeat(np.multiply.reduceat(sign, starts), sizes) * sign
            product = np.clip(parity * np.exp(others), -_TANH_CLIP, _TANH_CLIP)
            updated = check_sign[edges] * 2 * np.arctanh(product)
            posterior[variables] += updated - messages[edges]
            messages[edges] = updated
        total += posterior
        for llr in (posterior, total / iteration):
            hard = (llr < 0).astype(np.uint8)
            if np.array_equal(graph.syndrome_of(hard), syndrome):
                return BPResult(hard, True, llr.copy(), iteration)
    average = total / max_iter
    return BPResult((average < 0).astype(np.uint8), False, average, max_iter)


def osd1(graph, syndrome, max_iter=BP_MAX_ITER):
    """
    BP-OSD from ``ldpc``: serial BP, then order-1 combination-sweep OSD on its
    soft output. Returns (correction, whether BP alone converged).
    """
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    decoder = graph.bposd(max_iter)
    correction = np.asarray(decoder.decode(syndrome), dtype=np.uint8)
    if not np.array_equal(graph.syndrome_of(correction), syndrome):
        raise UnmatchableSyndromeError("unmatchable syndrome: not in the column space of H")
    return correction, bool(decoder.converge)


def decode(graph, syndrome, cluster_weight=CLUSTER_WEIGHT, max_iter=BP_MAX_ITER):
    """
    Cluster lookup, then serial BP, then averaged-LLR BP, then OSD-1.
    Returns (correction, predicted observable flips).
    """
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    correction = cluster_predecode(graph, syndrome, cluster_weight) if cluster_weight else None
    if correction is None and not syndrome.any():
        correction = np.zeros(graph.num_faults, dtype=np.uint8)
    if correction is None:
        correction, converged = osd1(graph, syndrome, max_iter)
        if not converged:
            result = bp_decode(graph, syndrome, max_iter)
            if result.converged:
                correction = result.correction
    return correction, graph.flips_of(correction).astype(np.uint8)


def window_graphs(graph, T):
    """The window graphs of a T-round sliding window, oldest first. T is clamped to the block length."""
    rounds = graph.detector_rounds
    if rounds is None:
        raise ValueError("window decoding needs detector rounds")
    first, last = int(rounds.min()), int(rounds.max())
    total = last - first + 1
    if T < 1:
        raise ValueError(f"window size must be at least 1, got {T}")
    if T >= total:
        if T > total:
            logger.warning(f"window of {T} rounds exceeds the {total} rounds; decoding the full block")
        return [graph.window(first, total)]
    windows = []
    for start in range(first, last + 1):
        windows.append(graph.window(start, T))
        if start + T > last:
            break
    return windows


def sliding_window(graph, syndrome, T, cluster_weight=CLUSTER_WEIGHT, max_iter=BP_MAX_ITER, windows=None):
    """Observable prediction of one shot; committed corrections update the remaining syndrome."""
    syndrome = np.asarray(syndrome, dtype=np.uint8).copy()
    windows = window_graphs(graph, T) if windows is None else windows
    committed = np.zeros(graph.num_faults, dtype=np.uint8)
    for sub, columns, rows, commit in windows:
        correction, _ = decode(sub, syndrome[rows], cluster_weight, max_iter)
        chosen = np.zeros(graph.num_faults, dtype=np.uint8)
        chosen[columns[commit]] = correction[commit]
        syndrome ^= graph.syndrome_of(chosen).astype(np.uint8)
        committed ^= chosen
    return graph.flips_of(committed).astype(np.uint8)


def _decode_chunk(graph, T, options, chunk):
    dets, obs = chunk
    windows = window_graphs(graph, T) if T else None
    fails = 0
    for shot in range(dets.shape[0]):
        if windows is None:
            _, flips = decode(graph, dets[shot], **options)
        else:
            flips = sliding_window(graph, dets[shot], T, windows=windows, **options)
        fails += int(np.any(flips != obs[shot]))
    return fails


def logical_error_rate(graph, dets, obs, window=None, threads=None, **options):
    """(fails, shots, p_L): a shot fails when any predicted observable flip differs from the sampled one."""
    dets = np.asarray(dets, dtype=np.uint8)
    obs = np.asarray(obs, dtype=np.uint8)
    shots = dets.shape[0]
    if not shots:
        return 0, 0, 0.0
    n_workers = parallel.resolve_threads(threads)
    bounds = np.linspace(0, shots, min(shots, 4 * n_workers) + 1).astype(int)
    chunks = [(dets[a:b], obs[a:b]) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    fails = sum(parallel.run_parallel(partial(_decode_chunk, graph, window, options), chunks, n_workers))
    logger.info(f"logical_error_rate: {fails}/{shots} failures (window {window or 'full'})")
    return fails, shots, fails / shots


def estimate_crossing(ps, rates_a, rates_b):
    """
    Error rate where two p_L curves cross, by linear interpolation of their
    difference in log p between the first pair of points with a sign change.
    None when the curves do not cross on the grid.
    """
    ps = np.asarray(ps, dtype=np.float64)
    diff = np.asarray(rates_a, dtype=np.float64) - np.asarray(rates_b, dtype=np.float64)
    order = np.argsort(ps)
    ps, diff = ps[order], diff[order]
    for i in range(len(ps) - 1):
        if diff[i] == 0:
            return float(ps[i])
        if diff[i] * diff[i + 1] < 0:
            x0, x1 = math.log(ps[i]), math.log(ps[i + 1])
            x = x0 + (x1 - x0) * diff[i] / (diff[i] - diff[i + 1])
            return float(math.exp(x))
    if len(ps) and diff[-1] == 0:
        return float(ps[-1])
    return None
