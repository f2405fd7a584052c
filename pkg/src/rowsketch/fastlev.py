"""Sketched generalized leverage scores with randomized null-space probes.

For a small reference matrix B, tau^B_i(A) = ||B (B'B)^+ a_i||^2.  Instead
of applying the full projector per row, we apply a seeded Gaussian sketch
G with k = ceil(jl_rows_constant / theta) rows: the k x d matrix
M = (1/sqrt(k)) G B (B'B)^+ costs k factor-backed solves to build, and
||M a_i||^2 estimates each score within a d^theta distortion.  Raw sketched
norms are multiplied by d^theta so the two-sided distortion turns into a
one-sided overestimate at the configured confidence.

Rows with components in ker(B) are flagged infinite by dotting against a
few random kernel-projected probe vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import instrument
from .leverage import PseudoinverseFactor, ScoreVector, factor_gram
from .matrix import SparseRowMatrix
from .sampling import SketchConfig, rng_from


@dataclass(frozen=True)
class GaussianSketch:
    """k x n matrix of independent standard normal draws, seed-reproducible."""

    rows: int
    entries: np.ndarray

    def validate(self) -> None:
        if self.entries.shape[0] != self.rows or self.entries.ndim != 2:
            raise ValueError("entry block must be rows x n")


@dataclass(frozen=True)
class KernelProbe:
    """Kernel-projected Gaussian probes z_t = (I - (B'B)^+ (B'B)) g_t, rows of ``probes``.

    ``source_norms`` holds ||g_t|| of the unprojected Gaussians.  Detection
    thresholds are relative to the source norm, not ||z_t||: with a trivial
    kernel z_t is pure roundoff and a ||z_t||-relative test would flag
    every row.
    """

    probes: np.ndarray
    t_probes: int
    source_norms: np.ndarray

    def validate(self) -> None:
        if self.probes.shape[0] != self.t_probes or self.probes.ndim != 2:
            raise ValueError("probe block must be t_probes x d")
        if self.source_norms.shape != (self.t_probes,):
            raise ValueError("need one source norm per probe")


def sketch_rows(theta: float, cfg: SketchConfig) -> int:
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    return int(np.ceil(cfg.jl_rows_constant / theta))


def gaussian_sketch(k: int, n: int, cfg: SketchConfig, salt=()) -> GaussianSketch:
    entries = rng_from(cfg.seed, "gaussian-sketch", *salt).standard_normal((k, n))
    return GaussianSketch(k, entries)


def build_projector_sketch(B: SparseRowMatrix, theta: float, cfg: SketchConfig,
                           salt=(), factor: PseudoinverseFactor | None = None) -> np.ndarray:
    """M = (1/sqrt(k)) G B (B'B)^+ as a dense k x d block.

    Costs one solve against the Gram factor per sketch row; applying M to a
    row then costs O(k nnz(a_i)).  E ||M a_i||^2 equals tau^B_i exactly.
    """
    k = sketch_rows(theta, cfg)
    f = factor if factor is not None else factor_gram(B)
    G = gaussian_sketch(k, B.n_rows, cfg, salt=salt).entries
    GB = (B.to_scipy().T @ G.T).T  # k x d
    instrument.count_solves(k)
    M = f.pinv_apply(GB.T).T / np.sqrt(k)
    return M


def kernel_probe(B: SparseRowMatrix, t_probes: int, cfg: SketchConfig, salt=(),
                 factor: PseudoinverseFactor | None = None) -> KernelProbe:
    """Random vectors in ker(B): the kernel projection of independent Gaussians.

    With a trivial kernel every probe is numerically zero and every row
    passes.  A row with a genuine kernel component misses all t probes with
    probability zero in exact arithmetic; multiple probes cover roundoff.
    """
    if t_probes < 1:
        raise ValueError("need at least one probe")
    f = factor if factor is not None else factor_gram(B)
    g = rng_from(cfg.seed, "kernel-probe", *salt).standard_normal((B.n_cols, t_probes))
    instrument.count_solves(t_probes)
    z = g - f.rowspace_project(g)
    return KernelProbe(np.ascontiguousarray(z.T), t_probes, np.linalg.norm(g, axis=0))


def approx_generalized_leverage(A: SparseRowMatrix, B: SparseRowMatrix, theta: float,
                                cfg: SketchConfig, salt=(), ktol: float = 1e-8) -> ScoreVector:
    """Sketched overestimates of tau^B(A) within a d^(2 theta) envelope.

    Returns d^theta * ||M a_i||^2 per row (the safety factor making the
    estimate one-sided), and flags a row infinite when any probe dot
    exceeds ktol * ||a_i|| * ||z_t||.  One factorization plus k + t_probes
    solves per call.
    """
    if A.n_cols != B.n_cols:
        raise ValueError(f"column mismatch: {A.n_cols} vs {B.n_cols}")
    f = factor_gram(B)
    M = build_projector_sketch(B, theta, cfg, salt=salt, factor=f)
    kp = kernel_probe(B, cfg.kernel_probes, cfg, salt=salt, factor=f)
    safety = max(A.n_cols, 2) ** theta
    sketched = A.dot_dense(M.T)  # n x k
    vals = safety * np.einsum("ij,ij->i", sketched, sketched)
    norms = np.sqrt(A.row_norms_sq())
    dots = np.abs(A.dot_dense(kp.probes.T))  # n x t
    infinite = np.any(dots > ktol * norms[:, None] * kp.source_norms[None, :], axis=1)
    return ScoreVector(np.where(infinite, 0.0, vals), infinite)
