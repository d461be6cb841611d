"""
Connected clusters of columns of a check matrix, and the exact search for
the smallest column set with zero syndrome and a nonzero logical effect.

Both the code distance (checks and logicals of a CSS code) and the circuit
distance (detectors and observables of a detector error model) run through
``min_logical_weight``.
"""
import logging
from functools import partial

import numpy as np
import scipy.sparse

from . import parallel

logger = logging.getLogger(__name__)


def column_supports(matrix):
    """Row indices of each column, for a BitMatrix, a dense array or a scipy sparse matrix."""
    if scipy.sparse.issparse(matrix):
        csc = scipy.sparse.csc_matrix(matrix)
        csc.eliminate_zeros()
        return [tuple(int(r) for r in sorted(csc.indices[csc.indptr[c]:csc.indptr[c + 1]]))
                for c in range(csc.shape[1])]
    dense = matrix.to_dense() if hasattr(matrix, 'to_dense') else np.asarray(matrix)
    return [tuple(int(r) for r in np.flatnonzero(column)) for column in dense.T]


def neighbours(col_checks, n_checks=None):
    """Columns sharing at least one row, per column."""
    if n_checks is None:
        n_checks = 1 + max((c for checks in col_checks for c in checks), default=-1)
    check_cols = [[] for _ in range(n_checks)]
    for q, checks in enumerate(col_checks):
        for c in checks:
            check_cols[c].append(q)
    result = []
    for q, checks in enumerate(col_checks):
        adjacent = set()
        for c in checks:
            adjacent.update(check_cols[c])
        adjacent.discard(q)
        result.append(tuple(sorted(adjacent)))
    return result


def connected_subsets(adjacency, size, roots=None, ordered=True):
    """
    Yield each connected vertex set of ``size`` vertices once, as a sorted tuple.

    Vertex sets are grown from a root by exclusive neighbourhoods (ESU). With
    ``ordered`` the root is the smallest member; otherwise every connected set
    containing a root is produced, once per root it contains.
    """
    roots = range(len(adjacency)) if roots is None else roots

    def extend(members, closed, extension, root):
        if len(members) == size:
            yield tuple(sorted(members))
            return
        extension = list(extension)
        while extension:
            w = extension.pop()
            fresh = [u for u in adjacency[w] if u not in closed and (u > root if ordered else u != root)]
            yield from extend(members + (w,), closed | set(adjacency[w]), extension + fresh, root)

    for root in roots:
        if size == 1:
            yield (root,)
            continue
        extension = [u for u in adjacency[root] if (u > root if ordered else u != root)]
        yield from extend((root,), set(adjacency[root]) | {root}, extension, root)


class LogicalSearch:
    """
    Depth-first search for a column set with zero syndrome and nonzero logical effect.

    Columns are bit masks over checks and over logicals. From a start column,
    the search repeatedly picks the unsatisfied check with the fewest
    candidate columns and adds one of them. The last column is looked up by
    its exact syndrome. A branch is cut when more checks are unsatisfied than
    the remaining budget can clear.
    """

    def __init__(self, col_checks, col_logicals, ordered=True):
        self.ordered = ordered
        self.col_sig = [sum(1 << c for c in checks) for checks in col_checks]
        self.col_log = [sum(1 << o for o in logicals) for logicals in col_logicals]
        n_checks = 1 + max((c for checks in col_checks for c in checks), default=-1)
        self.check_cols = [[] for _ in range(n_checks)]
        self.by_signature = {}
        for q, checks in enumerate(col_checks):
            for c in checks:
                self.check_cols[c].append(q)
            if checks:
                self.by_signature.setdefault(self.col_sig[q], []).append(q)
        self.cmax = max((len(checks) for checks in col_checks), default=0)

    def _allowed(self, q, start, used):
        return q not in used and (q > start if self.ordered else True)

    def _dfs(self, sig, log, budget, start, support, used):
        if sig == 0:
            return tuple(sorted(support)) if log else None
        if budget == 0 or bin(sig).count('1') > budget * self.cmax:
            return None
        if budget == 1:
            for q in self.by_signature.get(sig, ()):
                if self._allowed(q, start, used) and log ^ self.col_log[q]:
                    return tuple(sorted(support + [q]))
            return None
        best = None
        s = sig
        while s:
            low = s & -s
            s ^= low
            candidates = [q for q in self.check_cols[low.bit_length() - 1] if self._allowed(q, start, used)]
            if best is None or len(candidates) < len(best):
                best = candidates
                if not best:
                    return None
        for q in best:
            support.append(q)
            used.add(q)
            found = self._dfs(sig ^ self.col_sig[q], log ^ self.col_log[q], budget - 1, start, support, used)
            support.pop()
            used.discard(q)
            if found:
                return found
        return None

    def search(self, start, weight):
        """A qualifying set of at most ``weight`` columns containing ``start``, or None."""
        return self._dfs(self.col_sig[start], self.col_log[start], weight - 1, start, [start], {start})


def _search_chunk(search, weight, starts):
    for start in starts:
        found = search.search(start, weight)
        if found:
            return found
    return None


def min_logical_weight(col_checks, col_logicals, cap, starts=None, ordered=True, threads=None):
    """
    Smallest set of columns whose checks cancel and whose logicals do not.

    Weights are tried in increasing order up to ``cap``. ``starts`` restricts
    the start columns; with ``ordered=False`` any column may join a start,
    which is how translation-symmetric codes search from one representative
    per orbit. Returns ``(weight, support)`` or None above the cap.
    """
    search = LogicalSearch(col_checks, col_logicals, ordered=ordered)
    if starts is None:
        starts = [q for q, checks in enumerate(col_checks) if checks or col_logicals[q]]
    starts = list(starts)
    n_workers = parallel.resolve_threads(threads)
    for weight in range(1, cap + 1):
        chunks = parallel.chunked(starts, 4 * n_workers)
        found = [r for r in parallel.run_parallel(partial(_search_chunk, search, weight), chunks, n_workers) if r]
        if found:
            best = min(found, key=lambda support: (len(support), support))
            logger.info(f"min_logical_weight: found weight {len(best)} from {len(starts)} starts")
            return len(best), best
        logger.debug(f"min_logical_weight: nothing at weight {weight}")
    return None
