"""Coherence-reducing row reweighting.

Given per-row targets u > 0, repeatedly visit rows whose leverage under the
current weighting exceeds its target: down-weight the row so its score
lands exactly on the target (closed form below), or zero it outright when
the score sits at 1.  Weights only ever decrease; the reweighted rows end
up carrying total target mass at most d.

Scores are maintained across updates with the rank-1 formulas

    tau_i' = (1 - g) tau_i / (1 - g tau_i)
    tau_j' = tau_j + g tau_ij^2 / (1 - g tau_i)      (j != i)

for a single weight change w_i -> sqrt(1 - g) w_i, and refreshed from a
full factorization periodically to stop floating-point drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .leverage import ScoreVector, exact_leverage_scores, factor_gram
from .matrix import MatrixFormatError, SparseRowMatrix, gram, scale_rows


@dataclass(frozen=True)
class Reweighting:
    """Dense diagonal weights, each in [0, 1]."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return int(self.weights.shape[0])

    def validate(self) -> None:
        w = self.weights
        if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
            raise ValueError("weights must be finite reals in [0, 1]")


@dataclass(frozen=True)
class ReweightCertificate:
    """Evidence that a reweighting meets its targets.

    ``achieved`` is recomputed from scratch on the final weights;
    ``reweighted_mass`` sums targets over rows whose weight moved off 1.
    A non-converged run reports ``converged=False`` with the violation
    left, never a silent success.
    """

    target: np.ndarray
    achieved: np.ndarray
    reweighted_mass: float
    reweighted_count: int
    sweeps_used: int
    max_violation: float
    converged: bool
    tol: float


def rank_one_update(tau: np.ndarray, cross_i: np.ndarray, i: int, gamma: float) -> np.ndarray:
    """Leverage scores after scaling row i by sqrt(1 - gamma).

    ``cross_i`` holds the cross scores tau_ij of the current matrix for the
    fixed i (so cross_i[i] == tau[i]).  The updated row score never rises;
    every other score never falls.
    """
    tau = np.asarray(tau, dtype=np.float64)
    cross_i = np.asarray(cross_i, dtype=np.float64)
    if tau.shape != cross_i.shape:
        raise ValueError("tau and cross vectors must align")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    denom = 1.0 - gamma * tau[i]
    if denom <= 0.0:
        raise ValueError(f"1 - gamma*tau_i must stay positive (got {denom:g})")
    out = tau + gamma * cross_i ** 2 / denom
    out[i] = (1.0 - gamma) * tau[i] / denom
    return out


def gamma_for_target(tau_i: float, u_i: float) -> float:
    """The gamma for which the rank-1 update lands row i exactly on u_i.

    Inverting tau' = (1-g) tau / (1 - g tau) at tau' = u gives
    g = (tau - u) / (tau (1 - u)), valid for 0 < u <= tau < 1 (zero at the
    boundary u = tau).  At tau >= 1 no finite down-weighting reaches a
    smaller target; zero the row instead.
    """
    if tau_i >= 1.0:
        raise ValueError("row at leverage 1 cannot be partially down-weighted; set its weight to 0")
    if not 0.0 < u_i <= tau_i:
        raise ValueError("need 0 < u_i <= tau_i < 1")
    return (tau_i - u_i) / (tau_i * (1.0 - u_i))


_ZERO_BRANCH = 1e-6  # rows with score above 1 - this are zeroed, not solved


class _ScoreState:
    """Running (weights, scores, Gram pseudoinverse) for the sweep."""

    def __init__(self, A: SparseRowMatrix):
        self.A = A
        self.csr = A.to_scipy()
        self.w = np.ones(A.n_rows)
        self.refresh()

    def refresh(self) -> None:
        B = scale_rows(self.A, self.w)
        f = factor_gram(B)
        self.P = f.pinv_matrix()
        self.tau = exact_leverage_scores(B, factor=f).values.copy()

    def _row_dense(self, i: int) -> np.ndarray:
        cols, vals = self.A.row(i)
        b = np.zeros(self.A.n_cols)
        b[cols] = vals * self.w[i]
        return b

    def cross_vector(self, i: int) -> np.ndarray:
        b = self._row_dense(i)
        return self.w * (self.csr @ (self.P @ b))

    def downweight(self, i: int, gamma: float) -> None:
        b = self._row_dense(i)
        Pb = self.P @ b
        denom = 1.0 - gamma * float(b @ Pb)
        cross = self.w * (self.csr @ Pb)
        self.tau = rank_one_update(self.tau, cross, i, gamma)
        self.P = self.P + gamma * np.outer(Pb, Pb) / denom
        self.w[i] *= math.sqrt(1.0 - gamma)

    def zero_row(self, i: int) -> None:
        self.w[i] = 0.0
        self.refresh()


def compute_reweighting(A: SparseRowMatrix, u, tol: float = 1e-6,
                        max_sweeps: int | None = None) -> tuple[Reweighting, ReweightCertificate]:
    """Find weights in [0, 1] with tau_i(WA) <= u_i + tol everywhere.

    Sweeps rows in ascending index order; a sweep that changes nothing (and
    survives an exact recomputation) ends the run.  Weights never increase.
    Rows are zeroed when their current score sits within 1e-6 of 1, since a
    full-leverage row cannot be pushed below any smaller target by finite
    down-weighting.
    """
    if isinstance(u, ScoreVector):
        if u.has_infinite:
            raise ValueError("targets must be finite")
        u = u.values
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (A.n_rows,) or not np.all(np.isfinite(u)) or np.any(u <= 0):
        raise ValueError("targets must be positive finite reals, one per row")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_sweeps is None:
        max_sweeps = 100 * max(A.n_rows, 1)

    state = _ScoreState(A)
    touched = np.zeros(A.n_rows, dtype=bool)
    refresh_every = max(A.n_rows, 1)
    changes = 0
    sweeps_used = 0
    converged = False

    while sweeps_used < max_sweeps:
        sweeps_used += 1
        changed = False
        for i in range(A.n_rows):
            if state.tau[i] <= u[i] + tol:
                continue
            if state.tau[i] < 1.0 - _ZERO_BRANCH and u[i] < state.tau[i]:
                gamma = gamma_for_target(float(state.tau[i]), float(u[i]))
                state.downweight(i, gamma)
            else:
                state.zero_row(i)
            touched[i] = True
            changed = True
            changes += 1
            if changes % refresh_every == 0:
                state.refresh()
        if not changed:
            state.refresh()  # drift check: confirm against exact scores
            if float(np.max(state.tau - u)) <= tol:
                converged = True
                break

    state.refresh()
    achieved = state.tau.copy()
    cert = ReweightCertificate(
        target=u.copy(),
        achieved=achieved,
        reweighted_mass=float(u[touched].sum()),
        reweighted_count=int(touched.sum()),
        sweeps_used=sweeps_used,
        max_violation=float(np.max(achieved - u)) if A.n_rows else 0.0,
        converged=converged,
        tol=tol,
    )
    return Reweighting(state.w.copy()), cert


def compare_leverage_bound(A: SparseRowMatrix, W: Reweighting, Wbar: Reweighting,
                           i: int) -> tuple[float, float]:
    """Both sides of the weight-perturbation bound on leverage scores.

    lhs = tau_i under Wbar; rhs scales tau_i under W by
    (wbar_i/w_i)^2 (1 + sqrt(lmax(A (A'Wbar^2 A)^+ A')) * ||W - Wbar||_inf)^2.
    The inequality lhs <= rhs holds whenever both weights at i are nonzero.
    """
    if not 0 <= i < A.n_rows:
        raise IndexError(f"row {i} out of range")
    wi, wbi = float(W.weights[i]), float(Wbar.weights[i])
    if wi <= 0.0 or wbi <= 0.0:
        raise ValueError("both weightings must keep row i nonzero")
    Bbar = scale_rows(A, Wbar.weights)
    fbar = factor_gram(Bbar)
    lhs = float(exact_leverage_scores(Bbar, factor=fbar).values[i])
    B = scale_rows(A, W.weights)
    tau_w = float(exact_leverage_scores(B).values[i])
    if fbar.rank:
        H = fbar.half_pinv()
        lam_max = float(np.linalg.eigvalsh(H.T @ gram(A) @ H)[-1])
    else:
        lam_max = 0.0
    inf_norm = float(np.max(np.abs(W.weights - Wbar.weights)))
    rhs = (wbi / wi) ** 2 * (1.0 + math.sqrt(max(lam_max, 0.0)) * inf_norm) ** 2 * tau_w
    return lhs, rhs


# ---------------------------------------------------------------------------
# Weight TSV I/O: "row_index<TAB>weight" over all rows (zeros included)
# ---------------------------------------------------------------------------

WEIGHT_HEADER = "row_index\tweight"


def write_weights(path, W: Reweighting) -> None:
    with open(str(path), "w", encoding="ascii") as fh:
        fh.write(WEIGHT_HEADER + "\n")
        for i, w in enumerate(W.weights):
            fh.write(f"{i}\t{w:.17g}\n")


def read_weights(path) -> Reweighting:
    path = str(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != WEIGHT_HEADER:
        raise MatrixFormatError(f"expected header {WEIGHT_HEADER!r}", path, 1)
    vals = []
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        parts = ln.split("\t")
        if len(parts) != 2 or int(parts[0]) != len(vals):
            raise MatrixFormatError("expected consecutive 'row_index<TAB>weight'", path, lineno)
        vals.append(float(parts[1]))
    out = Reweighting(np.asarray(vals))
    out.validate()
    return out
