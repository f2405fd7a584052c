"""Sparse row-major matrix storage, Matrix Market I/O, and row surgery.

The two carrier types are ``SparseRowMatrix`` (CSR arrays, immutable) and
``WeightedRowSample`` (a diagonal row-selection/reweighting operator stored
as index/weight pairs).  Everything downstream operates on rows, so the
layout gives O(1) row slicing.  Column count d is assumed small enough that
dense d x d work is cheap; n-length dense vectors must fit in memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class MatrixFormatError(ValueError):
    """Raised on malformed Matrix Market or TSV input; carries a location."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc += str(path)
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SparseRowMatrix:
    """CSR storage: row i occupies ``[row_offsets[i], row_offsets[i+1])``.

    Invariants (see :meth:`validate`): offsets nondecreasing and bracketing,
    column indices strictly increasing within each row and < n_cols, all
    values finite.  Arrays are frozen after construction.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets", _frozen(np.ascontiguousarray(self.row_offsets, dtype=np.int64)))
        object.__setattr__(self, "col_indices", _frozen(np.ascontiguousarray(self.col_indices, dtype=np.int64)))
        object.__setattr__(self, "values", _frozen(np.ascontiguousarray(self.values, dtype=np.float64)))

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def validate(self) -> None:
        off, col, val = self.row_offsets, self.col_indices, self.values
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("negative dimension")
        if off.shape != (self.n_rows + 1,):
            raise ValueError("row_offsets must have length n_rows+1")
        if off[0] != 0 or off[-1] != val.shape[0] or col.shape != val.shape:
            raise ValueError("row_offsets must bracket the entry arrays")
        if np.any(np.diff(off) < 0):
            raise ValueError("row_offsets must be nondecreasing")
        if val.size:
            if col.min() < 0 or col.max() >= self.n_cols:
                raise ValueError("column index out of range")
            if not np.all(np.isfinite(val)):
                raise ValueError("matrix values must be finite")
        # strict increase within each row: differences may only be <= 0 at row starts
        if col.size > 1:
            bad = np.flatnonzero(np.diff(col) <= 0) + 1
            if bad.size and not np.all(np.isin(bad, off[1:-1])):
                raise ValueError("column indices must strictly increase within each row")

    @classmethod
    def from_coo(cls, n_rows: int, n_cols: int, rows, cols, vals) -> "SparseRowMatrix":
        """Build from triplets; duplicate (i, j) entries are summed and
        explicit zeros dropped, matching Matrix Market conventions."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise ValueError("column index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            first = np.ones(rows.size, dtype=bool)
            first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            group = np.cumsum(first) - 1
            summed = np.zeros(int(group[-1]) + 1, dtype=np.float64)
            np.add.at(summed, group, vals)
            rows, cols, vals = rows[first], cols[first], summed
            keep = vals != 0.0
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(offsets, rows + 1, 1)
        offsets = np.cumsum(offsets)
        out = cls(n_rows, n_cols, offsets, cols, vals)
        out.validate()
        return out

    @classmethod
    def from_dense(cls, arr) -> "SparseRowMatrix":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("expected a 2-d array")
        rows, cols = np.nonzero(arr)
        return cls.from_coo(arr.shape[0], arr.shape[1], rows, cols, arr[rows, cols])

    @classmethod
    def from_scipy(cls, mat) -> "SparseRowMatrix":
        csr = sp.csr_matrix(mat, copy=True)
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        out = cls(csr.shape[0], csr.shape[1], csr.indptr.astype(np.int64),
                  csr.indices.astype(np.int64), csr.data.astype(np.float64))
        out.validate()
        return out

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets),
                             shape=(self.n_rows, self.n_cols))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of row i (views, O(1))."""
        if not 0 <= i < self.n_rows:
            raise IndexError(f"row {i} out of range for {self.n_rows} rows")
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def row_dense(self, i: int) -> np.ndarray:
        cols, vals = self.row(i)
        out = np.zeros(self.n_cols)
        out[cols] = vals
        return out

    def row_norms_sq(self) -> np.ndarray:
        out = np.zeros(self.n_rows)
        np.add.at(out, np.repeat(np.arange(self.n_rows), np.diff(self.row_offsets)), self.values ** 2)
        return out

    def dot_dense(self, X: np.ndarray) -> np.ndarray:
        """A @ X for a dense vector or d x k block."""
        return self.to_scipy() @ X

    def t_dot_dense(self, y: np.ndarray) -> np.ndarray:
        """A.T @ y for a dense n-vector (or n x k block)."""
        return self.to_scipy().T @ y


@dataclass(frozen=True)
class WeightedRowSample:
    """Diagonal sampling operator: entry (i, w) selects parent row i scaled
    by w.  Indices are unique; weights positive and finite."""

    parent_rows: int
    row_indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_indices", _frozen(np.ascontiguousarray(self.row_indices, dtype=np.int64)))
        object.__setattr__(self, "weights", _frozen(np.ascontiguousarray(self.weights, dtype=np.float64)))

    def __len__(self) -> int:
        return int(self.row_indices.shape[0])

    def validate(self) -> None:
        idx, w = self.row_indices, self.weights
        if idx.shape != w.shape or idx.ndim != 1:
            raise ValueError("indices and weights must be 1-d and aligned")
        if idx.size:
            if idx.min() < 0 or idx.max() >= self.parent_rows:
                raise ValueError("sample index out of parent range")
            if np.unique(idx).size != idx.size:
                raise ValueError("sample indices must be unique")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValueError("sample weights must be positive and finite")

    @classmethod
    def identity(cls, n: int) -> "WeightedRowSample":
        return cls(n, np.arange(n, dtype=np.int64), np.ones(n))

    def scaled(self, factor: float) -> "WeightedRowSample":
        return WeightedRowSample(self.parent_rows, self.row_indices, self.weights * float(factor))


def materialize(A: SparseRowMatrix, S: WeightedRowSample) -> SparseRowMatrix:
    """Rows of S applied to A: output row k equals ``S.weights[k] * A[S.row_indices[k]]``."""
    if S.parent_rows != A.n_rows:
        raise ValueError(f"sample built for {S.parent_rows} rows, matrix has {A.n_rows}")
    S.validate()
    idx, w = S.row_indices, S.weights
    sub = A.to_scipy()[idx]
    sub.sort_indices()
    vals = sub.data * np.repeat(w, np.diff(sub.indptr))
    return SparseRowMatrix(idx.size, A.n_cols, sub.indptr.astype(np.int64),
                           sub.indices.astype(np.int64), vals)


def scale_rows(A: SparseRowMatrix, w: np.ndarray) -> SparseRowMatrix:
    """diag(w) @ A with w of length n_rows; zero weights empty their rows."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (A.n_rows,):
        raise ValueError("weight vector length must equal n_rows")
    vals = A.values * np.repeat(w, np.diff(A.row_offsets))
    scaled = SparseRowMatrix(A.n_rows, A.n_cols, A.row_offsets, A.col_indices, vals)
    if np.any(w == 0.0):
        return SparseRowMatrix.from_scipy(scaled.to_scipy())
    return scaled


def gram(A: SparseRowMatrix) -> np.ndarray:
    """Exact A.T @ A as a dense symmetric d x d matrix."""
    csr = A.to_scipy()
    G = (csr.T @ csr).toarray()
    return (G + G.T) / 2.0


# ---------------------------------------------------------------------------
# Matrix Market I/O (coordinate and array formats, real-valued, general)
# ---------------------------------------------------------------------------

def read_matrix_market(path) -> SparseRowMatrix:
    """Parse a Matrix Market file.

    Supports ``coordinate`` and ``array`` formats with the ``real`` (or
    ``integer``) field and ``general`` symmetry.  Duplicate coordinate
    entries are summed; explicit zeros are dropped.  Parse failures raise
    :class:`MatrixFormatError` with the offending line number.
    """
    path = str(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixFormatError("empty file", path, 1)
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket" or header[1].lower() != "matrix":
        raise MatrixFormatError("expected '%%MatrixMarket matrix <format> <field> <symmetry>' header", path, 1)
    fmt, field, symmetry = header[2].lower(), header[3].lower(), header[4].lower()
    if fmt not in ("coordinate", "array"):
        raise MatrixFormatError(f"unknown format {fmt!r}", path, 1)
    if field in ("complex", "pattern"):
        raise MatrixFormatError(f"unsupported field {field!r} (real-valued input required)", path, 1)
    if field not in ("real", "integer", "double"):
        raise MatrixFormatError(f"unknown field {field!r}", path, 1)
    if symmetry != "general":
        raise MatrixFormatError(f"unsupported symmetry {symmetry!r} (only 'general')", path, 1)

    def parse_real(tok: str, lineno: int) -> float:
        try:
            v = float(tok)
        except ValueError:
            raise MatrixFormatError(f"bad numeric value {tok!r}", path, lineno) from None
        if not np.isfinite(v):
            raise MatrixFormatError(f"non-finite value {tok!r}", path, lineno)
        return v

    body = [(i + 1, ln) for i, ln in enumerate(lines[1:], start=1)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixFormatError("missing size line", path, len(lines))
    size_lineno, size_line = body[0]
    toks = size_line.split()

    if fmt == "coordinate":
        if len(toks) != 3:
            raise MatrixFormatError("coordinate size line must be 'rows cols nnz'", path, size_lineno)
        try:
            n_rows, n_cols, nnz = (int(t) for t in toks)
        except ValueError:
            raise MatrixFormatError("bad size line", path, size_lineno) from None
        entries = body[1:]
        if len(entries) != nnz:
            raise MatrixFormatError(f"expected {nnz} entries, found {len(entries)}", path, size_lineno)
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        for k, (lineno, ln) in enumerate(entries):
            parts = ln.split()
            if len(parts) != 3:
                raise MatrixFormatError("coordinate entry must be 'row col value'", path, lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise MatrixFormatError("bad index", path, lineno) from None
            if not (1 <= i <= n_rows and 1 <= j <= n_cols):
                raise MatrixFormatError(f"index ({i}, {j}) outside {n_rows} x {n_cols}", path, lineno)
            rows[k], cols[k] = i - 1, j - 1
            vals[k] = parse_real(parts[2], lineno)
        return SparseRowMatrix.from_coo(n_rows, n_cols, rows, cols, vals)

    # array format: dense column-major listing
    if len(toks) != 2:
        raise MatrixFormatError("array size line must be 'rows cols'", path, size_lineno)
    try:
        n_rows, n_cols = (int(t) for t in toks)
    except ValueError:
        raise MatrixFormatError("bad size line", path, size_lineno) from None
    entries = body[1:]
    if len(entries) != n_rows * n_cols:
        raise MatrixFormatError(f"expected {n_rows * n_cols} values, found {len(entries)}", path, size_lineno)
    dense = np.empty((n_rows, n_cols))
    for k, (lineno, ln) in enumerate(entries):
        parts = ln.split()
        if len(parts) != 1:
            raise MatrixFormatError("array entry must be a single value", path, lineno)
        dense[k % n_rows, k // n_rows] = parse_real(parts[0], lineno)
    return SparseRowMatrix.from_dense(dense)


def write_matrix_market(path, A: SparseRowMatrix) -> None:
    """Write coordinate real general format; values keep 17 significant digits."""
    with open(str(path), "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{A.n_rows} {A.n_cols} {A.nnz}\n")
        row_of = np.repeat(np.arange(A.n_rows), np.diff(A.row_offsets))
        for i, j, v in zip(row_of, A.col_indices, A.values):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


# ---------------------------------------------------------------------------
# Sample TSV I/O: header then "row_index<TAB>weight" lines
# ---------------------------------------------------------------------------

SAMPLE_HEADER = "row_index\tweight"


def write_sample(path, S: WeightedRowSample) -> None:
    with open(str(path), "w", encoding="ascii") as fh:
        fh.write(f"# parent_rows={S.parent_rows}\n")
        fh.write(SAMPLE_HEADER + "\n")
        for i, w in zip(S.row_indices, S.weights):
            fh.write(f"{i}\t{w:.17g}\n")


def read_sample(path) -> WeightedRowSample:
    path = str(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# parent_rows="):
        raise MatrixFormatError("missing '# parent_rows=' line", path, 1)
    try:
        parent = int(lines[0].split("=", 1)[1])
    except ValueError:
        raise MatrixFormatError("bad parent_rows value", path, 1) from None
    if len(lines) < 2 or lines[1] != SAMPLE_HEADER:
        raise MatrixFormatError(f"expected header {SAMPLE_HEADER!r}", path, 2)
    idx, wts = [], []
    for lineno, ln in enumerate(lines[2:], start=3):
        if not ln.strip():
            continue
        parts = ln.split("\t")
        if len(parts) != 2:
            raise MatrixFormatError("expected 'row_index<TAB>weight'", path, lineno)
        try:
            idx.append(int(parts[0]))
            wts.append(float(parts[1]))
        except ValueError:
            raise MatrixFormatError("bad entry", path, lineno) from None
    out = WeightedRowSample(parent, np.asarray(idx, dtype=np.int64), np.asarray(wts))
    out.validate()
    return out
