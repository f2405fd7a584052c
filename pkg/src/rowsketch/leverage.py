"""Ground-truth leverage machinery via dense factorizations.

Exact scores tau_i = a_i' (A'A)^+ a_i, cross scores tau_ij, generalized
scores tau^B_i(A) with explicit kernel handling, and the minimum-norm
witness characterization.  All of it runs through ``PseudoinverseFactor``,
a truncated SVD-based factorization of the Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import instrument
from .matrix import MatrixFormatError, SparseRowMatrix


@dataclass(frozen=True)
class ScoreVector:
    """Per-row scores with a tagged per-entry "infinite" flag.

    Infinite marks a row whose component in the reference matrix's kernel is
    non-negligible (generalized scores only).  The flag is never a floating
    Inf, so score arithmetic cannot silently propagate it; ``values`` holds
    0.0 at flagged positions.
    """

    values: np.ndarray
    infinite: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        inf = np.ascontiguousarray(self.infinite, dtype=bool)
        vals.flags.writeable = False
        inf.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "infinite", inf)

    @classmethod
    def from_finite(cls, vals) -> "ScoreVector":
        vals = np.asarray(vals, dtype=np.float64)
        return cls(vals, np.zeros(vals.shape[0], dtype=bool))

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def has_infinite(self) -> bool:
        return bool(self.infinite.any())

    def validate(self) -> None:
        if self.values.shape != self.infinite.shape or self.values.ndim != 1:
            raise ValueError("values and infinite flags must be aligned 1-d arrays")
        finite_vals = self.values[~self.infinite]
        if finite_vals.size and (not np.all(np.isfinite(finite_vals)) or np.any(finite_vals < 0)):
            raise ValueError("finite scores must be nonnegative reals")
        if np.any(self.values[self.infinite] != 0.0):
            raise ValueError("flagged entries must carry value 0.0")

    def with_infinite_as(self, fill: float = 1.0) -> np.ndarray:
        """Finite array with flagged entries replaced by ``fill``."""
        return np.where(self.infinite, float(fill), self.values)

    def finite_sum(self) -> float:
        return float(self.values[~self.infinite].sum())


@dataclass(frozen=True)
class PseudoinverseFactor:
    """Rank-truncated factorization of A'A = V diag(sigma^2) V'.

    ``right_singular_vectors`` is d x r with orthonormal columns, ``sigma``
    the singular values of A above ``truncation_tol`` times the largest.
    (A'A)^+ acts as V diag(sigma^-2) V'.
    """

    right_singular_vectors: np.ndarray
    singular_values: np.ndarray
    rank: int
    truncation_tol: float

    @property
    def n_cols(self) -> int:
        return int(self.right_singular_vectors.shape[0])

    def pinv_apply(self, x: np.ndarray) -> np.ndarray:
        """(A'A)^+ @ x for a d-vector or d x k block."""
        if self.rank == 0:
            return np.zeros_like(np.asarray(x, dtype=np.float64))
        V, s = self.right_singular_vectors, self.singular_values
        coeff = (V.T @ x)
        return V @ (coeff / (s ** 2)[..., :, None] if coeff.ndim == 2 else coeff / s ** 2)

    def pinv_matrix(self) -> np.ndarray:
        """Dense d x d (A'A)^+."""
        if self.rank == 0:
            return np.zeros((self.n_cols, self.n_cols))
        V, s = self.right_singular_vectors, self.singular_values
        return (V / s ** 2) @ V.T

    def half_pinv(self) -> np.ndarray:
        """d x r block M = V diag(1/sigma); then tau_i = ||M' a_i||^2."""
        return self.right_singular_vectors / self.singular_values

    def rowspace_project(self, X: np.ndarray) -> np.ndarray:
        """Orthogonal projection V V' @ X onto the row space of A."""
        if self.rank == 0:
            return np.zeros_like(np.asarray(X, dtype=np.float64))
        V = self.right_singular_vectors
        return V @ (V.T @ X)


def factor_gram(A: SparseRowMatrix, rtol: float = 1e-10) -> PseudoinverseFactor:
    """Factor A'A with numerical rank cut at sigma > rtol * sigma_max.

    The singular values come from an SVD of the materialized rows rather
    than an eigendecomposition of the Gram matrix: squaring would push the
    noise floor for sigma to ~1e-8 relative and defeat the 1e-10 default.
    """
    if not 0.0 < rtol < 1.0:
        raise ValueError("rtol must lie in (0, 1)")
    instrument.count_factorization()
    dense = A.to_dense() if A.n_rows else np.zeros((0, A.n_cols))
    _, s, vh = np.linalg.svd(dense, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return PseudoinverseFactor(np.zeros((A.n_cols, 0)), np.zeros(0), 0, rtol)
    keep = s > rtol * s[0]
    r = int(keep.sum())
    return PseudoinverseFactor(np.ascontiguousarray(vh[:r].T), s[:r].copy(), r, rtol)


def exact_leverage_scores(A: SparseRowMatrix, rtol: float = 1e-10,
                          factor: PseudoinverseFactor | None = None) -> ScoreVector:
    """tau_i = a_i' (A'A)^+ a_i; finite, in [0, 1], summing to rank(A)."""
    f = factor if factor is not None else factor_gram(A, rtol)
    if f.rank == 0:
        return ScoreVector.from_finite(np.zeros(A.n_rows))
    P = A.dot_dense(f.half_pinv())
    tau = np.einsum("ij,ij->i", P, P)
    return ScoreVector.from_finite(np.clip(tau, 0.0, 1.0))


def cross_leverage(A: SparseRowMatrix, i: int, j: int,
                   factor: PseudoinverseFactor | None = None) -> float:
    """tau_ij = a_i' (A'A)^+ a_j; symmetric, with tau_ii = tau_i."""
    for k in (i, j):
        if not 0 <= k < A.n_rows:
            raise IndexError(f"row {k} out of range for {A.n_rows} rows")
    f = factor if factor is not None else factor_gram(A)
    if f.rank == 0:
        return 0.0
    M = f.half_pinv()
    ci, vi = A.row(i)
    cj, vj = A.row(j)
    return float((vi @ M[ci]) @ (vj @ M[cj]))


def min_norm_witness(A: SparseRowMatrix, i: int,
                     factor: PseudoinverseFactor | None = None) -> np.ndarray:
    """The minimum-norm x with A'x = a_i.

    Satisfies ||x||^2 = tau_i and x[j] = tau_ij for every j; returns the
    zero vector when a_i = 0.
    """
    if not 0 <= i < A.n_rows:
        raise IndexError(f"row {i} out of range for {A.n_rows} rows")
    f = factor if factor is not None else factor_gram(A)
    if f.rank == 0:
        return np.zeros(A.n_rows)
    cols, vals = A.row(i)
    a_i = np.zeros(A.n_cols)
    a_i[cols] = vals
    return A.dot_dense(f.pinv_apply(a_i))


def generalized_leverage_scores(A: SparseRowMatrix, B: SparseRowMatrix,
                                ktol: float = 1e-8, rtol: float = 1e-10,
                                factor: PseudoinverseFactor | None = None) -> ScoreVector:
    """tau^B_i(A) = a_i' (B'B)^+ a_i, flagged infinite when a_i leans into ker(B).

    A row is flagged when its residual against B's row space exceeds
    ``ktol * ||a_i||``; the zero row is defined orthogonal to every kernel
    and scores 0.  With B = A this reduces to the exact scores.
    """
    if A.n_cols != B.n_cols:
        raise ValueError(f"column mismatch: {A.n_cols} vs {B.n_cols}")
    f = factor if factor is not None else factor_gram(B, rtol)
    n = A.n_rows
    norms = np.sqrt(A.row_norms_sq())
    if f.rank == 0:
        infinite = norms > 0
        return ScoreVector(np.zeros(n), infinite)
    V = f.right_singular_vectors
    P = A.dot_dense(V)
    vals = np.einsum("ij,ij->i", P / f.singular_values, P / f.singular_values)
    if f.rank < A.n_cols:
        # explicit residual rows: cancellation-free kernel detection
        resid = A.to_dense() - P @ V.T
        infinite = np.linalg.norm(resid, axis=1) > ktol * norms
        vals = np.where(infinite, 0.0, vals)
    else:
        infinite = np.zeros(n, dtype=bool)
    return ScoreVector(np.maximum(vals, 0.0), infinite)


# ---------------------------------------------------------------------------
# Score TSV I/O: "row_index<TAB>score", literal token `inf` for flagged rows
# ---------------------------------------------------------------------------

SCORE_HEADER = "row_index\tscore"


def write_scores(path, s: ScoreVector) -> None:
    with open(str(path), "w", encoding="ascii") as fh:
        fh.write(SCORE_HEADER + "\n")
        for i in range(len(s)):
            tok = "inf" if s.infinite[i] else f"{s.values[i]:.17g}"
            fh.write(f"{i}\t{tok}\n")


def read_scores(path) -> ScoreVector:
    path = str(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != SCORE_HEADER:
        raise MatrixFormatError(f"expected header {SCORE_HEADER!r}", path, 1)
    vals, flags = [], []
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        parts = ln.split("\t")
        if len(parts) != 2:
            raise MatrixFormatError("expected 'row_index<TAB>score'", path, lineno)
        if int(parts[0]) != len(vals):
            raise MatrixFormatError("row indices must be consecutive from 0", path, lineno)
        if parts[1] == "inf":
            vals.append(0.0)
            flags.append(True)
        else:
            vals.append(float(parts[1]))
            flags.append(False)
    out = ScoreVector(np.asarray(vals), np.asarray(flags, dtype=bool))
    out.validate()
    return out
