"""
Check matrices on disk: alist (MacKay) text, Matrix Market coordinate
pattern files, and a JSON descriptor for AMC codes.
"""
import json
import logging
import os

import numpy as np
import scipy.io
import scipy.sparse

from .exceptions import ParseError
from .gf2 import BitMatrix

logger = logging.getLogger(__name__)


def _int_lines(handle):
    for number, line in enumerate(handle, 1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        try:
            yield [int(token) for token in line.split()]
        except ValueError:
            raise ParseError(f"alist line {number}: expected integers, got {line!r}") from None


def read_alist(path_or_handle):
    """
    Parse an alist file. Zero entries in the index lists are padding. Both the
    full layout (with degree lines) and the short one (without) are accepted.
    """
    if isinstance(path_or_handle, (str, os.PathLike)):
        with open(path_or_handle) as handle:
            return read_alist(handle)
    lines = list(_int_lines(path_or_handle))
    if len(lines) < 2 or len(lines[0]) != 2:
        raise ParseError("alist header must be 'n m'")
    cols, rows = lines[0]
    start = 4 if len(lines) >= 4 + cols and len(lines[2]) == cols and len(lines[3]) == rows else 2
    if len(lines) < start + cols:
        raise ParseError(f"alist lists {cols} columns but has {len(lines) - start} index lines")
    dense = np.zeros((rows, cols), dtype=np.uint8)
    for col, indices in enumerate(lines[start:start + cols]):
        for row in indices:
            if row == 0:
                continue
            if not 1 <= row <= rows:
                raise ParseError(f"alist column {col + 1}: row index {row} out of range 1..{rows}")
            dense[row - 1, col] = 1
    if start == 4:
        if list(dense.sum(axis=0)) != lines[2]:
            raise ParseError("alist column degrees do not match the column lists")
        if list(dense.sum(axis=1)) != lines[3]:
            raise ParseError("alist row degrees do not match the column lists")
    return BitMatrix.from_dense(dense)


def write_alist(matrix, path_or_handle):
    if isinstance(path_or_handle, (str, os.PathLike)):
        with open(path_or_handle, 'w') as handle:
            return write_alist(matrix, handle)
    dense = matrix.to_dense()
    rows, cols = dense.shape
    col_lists = [list(np.flatnonzero(dense[:, c]) + 1) for c in range(cols)]
    row_lists = [list(np.flatnonzero(dense[r]) + 1) for r in range(rows)]
    max_col = max((len(c) for c in col_lists), default=0)
    max_row = max((len(r) for r in row_lists), default=0)
    out = path_or_handle
    out.write(f'{cols} {rows}\n{max_col} {max_row}\n')
    out.write(' '.join(str(len(c)) for c in col_lists) + '\n')
    out.write(' '.join(str(len(r)) for r in row_lists) + '\n')
    for indices, width in [(c, max_col) for c in col_lists] + [(r, max_row) for r in row_lists]:
        out.write(' '.join(str(i) for i in list(indices) + [0] * (width - len(indices))) + '\n')


def read_mtx(path):
    """Matrix Market file to BitMatrix; entries are taken mod 2."""
    try:
        data = scipy.io.mmread(path)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if scipy.sparse.issparse(data):
        data = data.toarray()
    return BitMatrix.from_dense(np.asarray(data, dtype=np.int64) & 1)


def write_mtx(matrix, path, comment=''):
    sparse = scipy.sparse.coo_matrix(matrix.to_dense())
    scipy.io.mmwrite(path, sparse, comment=comment, field='pattern')


def read_matrix(path):
    return read_mtx(path) if str(path).endswith('.mtx') else read_alist(path)


def write_matrix(matrix, path):
    if str(path).endswith('.mtx'):
        write_mtx(matrix, path)
    else:
        write_alist(matrix, path)


def write_descriptor(code, directory, stem='code', **extra):
    """Write hx/hz (and metachecks when present) as alist files next to a JSON descriptor."""
    os.makedirs(directory, exist_ok=True)
    descriptor = dict(code.describe(), matrices={}, **extra)
    for name in ('hx', 'hz', 'mx', 'mz'):
        matrix = getattr(code, name)
        if matrix is None or matrix.shape[0] == 0:
            continue
        filename = f'{stem}_{name}.alist'
        write_alist(matrix, os.path.join(directory, filename))
        descriptor['matrices'][name] = filename
    path = os.path.join(directory, f'{stem}.json')
    with open(path, 'w') as handle:
        json.dump(descriptor, handle, indent=2)
    logger.info(f"write_descriptor: wrote {path}")
    return path


def read_descriptor(path):
    """The descriptor dict, with each matrix reference replaced by the loaded BitMatrix."""
    with open(path) as handle:
        try:
            descriptor = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    base = os.path.dirname(path)
    descriptor['matrices'] = {name: read_alist(os.path.join(base, filename))
                              for name, filename in descriptor.get('matrices', {}).items()}
    return descriptor
