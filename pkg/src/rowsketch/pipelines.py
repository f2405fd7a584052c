"""End-to-end sketchers built from uniform sampling and score estimation.

Each pipeline returns a ``SketchResult`` whose sample always indexes the
ORIGINAL matrix; intermediate levels only ever inform score estimates.
Output weights carry a single 1/sqrt(1 + eps) normalization from the final
sampling stage, so a successful run satisfies the canonical one-sided
spectral sandwich at its configured lambda.  Intermediate sketches are left
unnormalized: they are unbiased for their parents, and normalizing them
would compound a deterministic (1 + eps) inflation into every downstream
score estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import instrument
from .fastlev import approx_generalized_leverage
from .leverage import factor_gram
from .matrix import SparseRowMatrix, WeightedRowSample, materialize
from .sampling import SketchConfig, log_dim, rng_from, sample


class PipelineError(RuntimeError):
    pass


class NonConvergenceError(PipelineError):
    """Iteration budget exhausted; carries the recorded estimate-sum history."""

    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = list(history)


@dataclass(frozen=True)
class SketchResult:
    """A row sketch of the original matrix plus run accounting.

    ``sum_estimates_history`` records the L1 mass of the score estimates at
    each sampling round; ``solve_count`` is the instrumented factorization
    and solve total consumed by the run; ``check_lambda`` is the spectral
    grade the output targets.
    """

    sample: WeightedRowSample
    rows_kept: int
    sum_estimates_history: tuple[float, ...]
    levels_or_iterations: int
    solve_count: int
    seed: int
    check_lambda: float


def _identity_on(n_parent: int, idx: np.ndarray) -> WeightedRowSample:
    return WeightedRowSample(n_parent, np.sort(idx).astype(np.int64), np.ones(idx.size))


def _compose(parent: WeightedRowSample, local: WeightedRowSample) -> WeightedRowSample:
    """Sample-of-a-sample: push local indices/weights through the parent."""
    if local.parent_rows != len(parent):
        raise ValueError("local sample does not match parent length")
    idx = parent.row_indices[local.row_indices]
    w = parent.weights[local.row_indices] * local.weights
    order = np.argsort(idx)
    return WeightedRowSample(parent.parent_rows, idx[order], w[order])


def _base_rows(d: int, cfg: SketchConfig) -> int:
    return int(math.ceil(cfg.base_rows_multiplier * max(d, 1) * log_dim(d)))


def _depth_cap(n: int, d: int) -> int:
    return int(math.ceil(math.log2(max(n / max(d, 1), 2.0)))) + 8


def _finish(sample_: WeightedRowSample, history: list[float], levels: int,
            cfg: SketchConfig, check_lambda: float, counter_before: int,
            normalize_eps: float | None) -> SketchResult:
    if normalize_eps is not None:
        sample_ = sample_.scaled(1.0 / math.sqrt(1.0 + normalize_eps))
    return SketchResult(
        sample=sample_,
        rows_kept=len(sample_),
        sum_estimates_history=tuple(history),
        levels_or_iterations=levels,
        solve_count=instrument.solve_counter() - counter_before,
        seed=cfg.seed,
        check_lambda=check_lambda,
    )


# ---------------------------------------------------------------------------
# Repeated halving (with an optional coarse/fine two-stage refinement step,
# reused by the input-sparsity composition)
# ---------------------------------------------------------------------------

def _halve(A: SparseRowMatrix, idx: np.ndarray, level: int, cfg: SketchConfig,
           theta_fine: float, theta_coarse: float | None, alpha: float,
           base_rows: int, depth_cap: int, history: list[float],
           salt: tuple) -> tuple[WeightedRowSample, bool, int]:
    """Recursive halving on A[idx]; returns (sample into A, sampled?, levels)."""
    m = idx.size
    if m <= base_rows:
        return _identity_on(A.n_rows, idx), False, 0
    if level >= depth_cap:
        raise PipelineError(f"halving recursion exceeded depth cap {depth_cap}")
    draws = rng_from(cfg.seed, *salt, level, "uniform").random(m)
    sub, _, depth = _halve(A, idx[draws < 0.5], level + 1, cfg, theta_fine,
                           theta_coarse, alpha, base_rows, depth_cap, history, salt)
    B = materialize(A, sub)
    Ak = materialize(A, _identity_on(A.n_rows, idx))
    d = A.n_cols
    if theta_coarse is None:
        u = approx_generalized_leverage(Ak, B, theta_fine, cfg,
                                        salt=(*salt, level, "jl")).with_infinite_as(1.0)
        history.append(float(u.sum()))
        local = sample(u, alpha, cfg, d, salt=(*salt, level, "sample"))
        return _compose(_identity_on(A.n_rows, idx), local), True, depth + 1
    # coarse pass: cheap d^theta estimates, larger intermediate sample
    u1 = approx_generalized_leverage(Ak, B, theta_coarse, cfg,
                                     salt=(*salt, level, "coarse")).with_infinite_as(1.0)
    big_local = sample(u1, alpha, cfg, d, salt=(*salt, level, "big"))
    big = _compose(_identity_on(A.n_rows, idx), big_local)
    # fine pass: re-estimate the kept rows at constant distortion, cut again
    A_big = materialize(A, big)
    u2 = approx_generalized_leverage(A_big, B, theta_fine, cfg,
                                     salt=(*salt, level, "fine")).with_infinite_as(1.0)
    history.append(float(u2.sum()))
    local = sample(u2, alpha, cfg, d, salt=(*salt, level, "small"))
    return _compose(big, local), True, depth + 1


def repeated_halving(A: SparseRowMatrix, cfg: SketchConfig) -> SketchResult:
    """Recursive sketcher: halve uniformly, estimate scores against the
    recursively sketched half, resample the current level by the estimates.

    Matrices at or below base_rows pass through untouched at weight 1.  The
    output targets a (1+eps)/(1-eps) spectral grade with O(d log d / eps^2)
    rows.
    """
    d = A.n_cols
    theta = cfg.resolve_theta(d)
    history: list[float] = []
    before = instrument.solve_counter()
    out, sampled, levels = _halve(
        A, np.arange(A.n_rows, dtype=np.int64), 0, cfg, theta, None,
        cfg.epsilon ** -2, _base_rows(d, cfg), _depth_cap(A.n_rows, d),
        history, ("halving",))
    lam = (1.0 + cfg.epsilon) / (1.0 - cfg.epsilon)
    return _finish(out, history, levels, cfg, lam, before,
                   cfg.epsilon if sampled else None)


# ---------------------------------------------------------------------------
# Refinement sampling
# ---------------------------------------------------------------------------

def refinement_sampling(A: SparseRowMatrix, cfg: SketchConfig) -> SketchResult:
    """Iteratively tighten all-ones overestimates by undersampled sketches.

    Each round undersamples at rate 6d over the current estimate mass,
    re-estimates against the sketch, and takes coordinatewise minima; the
    mass falls by a constant factor per round until it reaches
    stop_multiplier * d, after which one final sample of A is drawn.

    The sketched estimates default to theta = 1/(2 log d) here: the d^theta
    one-sided safety factor multiplies the estimate mass, and at 1/log d it
    would eat the entire headroom of the per-round contraction.
    """
    n, d = A.n_rows, A.n_cols
    theta = cfg.theta if cfg.theta is not None else 1.0 / (2.0 * log_dim(d))
    stop = cfg.stop_multiplier * d
    cap = 4 * int(math.ceil(math.log2(max(n / max(d, 1), 2.0)))) + 16
    tau = np.ones(n)
    history = [float(n)]
    before = instrument.solve_counter()
    iters = 0
    while tau.sum() > stop:
        if iters >= cap:
            raise NonConvergenceError(
                f"refinement failed to reach {stop:g} within {cap} iterations", history)
        alpha = 6.0 * d / float(tau.sum())
        scale = math.sqrt(alpha) * math.sqrt(3.0 / 4.0)
        S = sample(tau, 9.0 * alpha, cfg, d, salt=("refine", iters, "draw")).scaled(scale)
        u = approx_generalized_leverage(A, materialize(A, S), theta, cfg,
                                        salt=("refine", iters, "jl"))
        tau = np.where(u.infinite, tau, np.minimum(tau, u.values))
        history.append(float(tau.sum()))
        iters += 1
    final = sample(tau, cfg.epsilon ** -2, cfg, d, salt=("refine", "final"))
    lam = (1.0 + cfg.epsilon) / (1.0 - cfg.epsilon)
    return _finish(final, history, iters, cfg, lam, before, cfg.epsilon)


# ---------------------------------------------------------------------------
# Generic row sampling scheme (uniform -> recurse -> estimate+sample -> recurse)
# ---------------------------------------------------------------------------

# Count-driven presets sample at rates too weak for the per-level matrix
# Chernoff bound to bite, so their output fluctuation budget is pinned
# empirically at desk scale and absorbed into the output normalization.
_COUNT_DRIVEN_OUTPUT_EPS = 0.6


@dataclass(frozen=True)
class GenericSchemeParams:
    """Knobs for the four-line generic scheme.

    ``n1`` sizes the uniform first cut; ``n3`` targets the expected row
    count of the estimate-driven cut (None means quality-driven at rate
    1/per_level_epsilon^2).  ``sample_wrt`` picks whether that cut draws
    from the original matrix or the current recursion operand.
    ``output_epsilon`` is the fluctuation budget of the final sample: the
    output is scaled by 1/sqrt(1 + output_epsilon) and graded at
    ``check_lambda`` = (1 + output_epsilon)/(1 - output_epsilon).  Presets
    re-derive counts at each recursion level.
    """

    n1: int
    n3: int | None
    sample_wrt: str
    per_level_epsilon: float
    output_epsilon: float
    preset: str | None = None

    def __post_init__(self):
        if self.n1 < 1 or (self.n3 is not None and self.n3 < 1):
            raise ValueError("sample sizes must be at least 1")
        if self.sample_wrt not in ("original", "current"):
            raise ValueError("sample_wrt must be 'original' or 'current'")
        for eps in (self.per_level_epsilon, self.output_epsilon):
            if not 0.0 < eps < 1.0:
                raise ValueError("epsilon knobs must lie in (0, 1)")

    @property
    def check_lambda(self) -> float:
        return (1.0 + self.output_epsilon) / (1.0 - self.output_epsilon)

    @staticmethod
    def for_preset(name: str, n: int, d: int, cfg: SketchConfig) -> "GenericSchemeParams":
        dln = max(int(math.ceil(d * log_dim(d))), 1)
        if name == "head":
            return GenericSchemeParams(max(n // 2, 1), None, "original",
                                       cfg.epsilon, cfg.epsilon, "head")
        if name == "refinement":
            return GenericSchemeParams(dln, dln, "original", cfg.epsilon,
                                       cfg.epsilon, "refinement")
        if name == "tail":
            eps_l = min(1.0 / math.log2(max(n, 4)), 0.5)
            return GenericSchemeParams(dln, max(n // 2, 1), "current",
                                       eps_l, _COUNT_DRIVEN_OUTPUT_EPS, "tail")
        if name == "sqrt":
            n13 = max(int(math.ceil(math.sqrt(n * d * log_dim(d)))), 1)
            return GenericSchemeParams(n13, n13, "original", cfg.epsilon,
                                       _COUNT_DRIVEN_OUTPUT_EPS, "sqrt")
        raise ValueError(f"unknown preset {name!r} (head, tail, refinement, sqrt)")


def _generic(A: SparseRowMatrix, current: WeightedRowSample, depth: int,
             params: GenericSchemeParams, cfg: SketchConfig, base_rows: int,
             depth_cap: int, history: list[float]) -> tuple[WeightedRowSample, bool, int]:
    if depth >= depth_cap:
        raise PipelineError(f"generic scheme exceeded depth cap {depth_cap}")
    nhat = len(current)
    d = A.n_cols

    def child_params(size: int) -> GenericSchemeParams:
        if params.preset is not None:
            return GenericSchemeParams.for_preset(params.preset, size, d, cfg)
        return params

    # line 1: uniform cut of the current rows
    rate = min(params.n1 / max(nhat, 1), 1.0)
    draws = rng_from(cfg.seed, "generic", depth, "uniform").random(nhat)
    a1 = WeightedRowSample(A.n_rows, current.row_indices[draws < rate],
                           current.weights[draws < rate])
    # line 2: approximate the cut recursively when it is still large
    if len(a1) <= base_rows:
        a2, lv2 = a1, 0
    else:
        a2, _, lv2 = _generic(A, a1, depth + 1, child_params(len(a1)), cfg,
                              base_rows, depth_cap, history)
    # line 3: estimate scores against the approximation, sample n3 rows
    B = materialize(A, a2)
    if params.sample_wrt == "original":
        target = _identity_on(A.n_rows, np.arange(A.n_rows, dtype=np.int64))
    else:
        target = current
    T = materialize(A, target)
    u = approx_generalized_leverage(T, B, cfg.resolve_theta(d), cfg,
                                    salt=("generic", depth, "jl")).with_infinite_as(1.0)
    history.append(float(u.sum()))
    if params.n3 is not None:
        alpha3 = params.n3 / max(cfg.c * log_dim(d) * float(u.sum()), 1e-300)
    else:
        alpha3 = params.per_level_epsilon ** -2
    local = sample(u, alpha3, cfg, d, salt=("generic", depth, "sample"))
    a3 = _compose(target, local)
    # line 4: recurse when the result is still large and actually shrank
    if len(a3) <= base_rows or len(a3) >= nhat:
        return a3, True, lv2 + 1
    a4, _, lv4 = _generic(A, a3, depth + 1, child_params(len(a3)), cfg,
                          base_rows, depth_cap, history)
    return a4, True, lv2 + lv4 + 1


def generic_scheme(A: SparseRowMatrix, params: GenericSchemeParams,
                   cfg: SketchConfig) -> SketchResult:
    """Uniform cut, recursive approximation, estimate-driven resampling.

    The head and refinement presets are exactly the repeated-halving and
    refinement-sampling algorithms and delegate to them; tail and sqrt run
    the four-line scheme with their own size rules.
    """
    if params.preset == "head":
        res = repeated_halving(A, cfg)
        return replace(res, check_lambda=params.check_lambda)
    if params.preset == "refinement":
        res = refinement_sampling(A, cfg)
        return replace(res, check_lambda=params.check_lambda)
    history: list[float] = []
    before = instrument.solve_counter()
    out, sampled, levels = _generic(
        A, WeightedRowSample.identity(A.n_rows), 0, params, cfg,
        _base_rows(A.n_cols, cfg), _depth_cap(A.n_rows, A.n_cols), history)
    return _finish(out, history, levels, cfg, params.check_lambda, before,
                   params.output_epsilon if sampled else None)


# ---------------------------------------------------------------------------
# Input-sparsity two-stage composition
# ---------------------------------------------------------------------------

def input_sparsity_sketch(A: SparseRowMatrix, theta: float, epsilon: float,
                          cfg: SketchConfig) -> SketchResult:
    """Coarse-theta halving to a constant-factor sketch, then two (1+eps/2)
    sampling stages composing to a (1+eps) grade.

    Stage 1 runs halving with cheap d^theta-distortion estimates and a
    per-level constant-factor re-estimation; stage 2 draws an
    O(d^(1+theta) log d / eps^2) sample of A by coarse estimates against the
    stage-1 sketch, then re-refines that sample down to
    O(d log d / eps^2) rows with constant-factor estimates.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    d = A.n_cols
    theta_fine = 1.0 / log_dim(d)
    history: list[float] = []
    before = instrument.solve_counter()
    s1, s1_sampled, levels = _halve(
        A, np.arange(A.n_rows, dtype=np.int64), 0, cfg, theta_fine, theta,
        cfg.epsilon ** -2, _base_rows(d, cfg), _depth_cap(A.n_rows, d),
        history, ("isparse",))
    if not s1_sampled:
        # nothing to do at this size: the matrix is its own sketch
        return _finish(s1, history, levels, cfg,
                       (1.0 + epsilon) / (1.0 - epsilon / 20.0), before, None)
    B1 = materialize(A, s1)
    alpha_half = (epsilon / 2.0) ** -2
    u_a = approx_generalized_leverage(A, B1, theta, cfg,
                                      salt=("isparse", "s2a")).with_infinite_as(1.0)
    history.append(float(u_a.sum()))
    S_a = sample(u_a, alpha_half, cfg, d, salt=("isparse", "s2a-draw"))
    A2 = materialize(A, S_a)
    u_b = approx_generalized_leverage(A2, B1, theta_fine, cfg,
                                      salt=("isparse", "s2b")).with_infinite_as(1.0)
    history.append(float(u_b.sum()))
    S_b = sample(u_b, alpha_half, cfg, d, salt=("isparse", "s2b-draw"))
    final = _compose(S_a, S_b)
    lam = (1.0 + epsilon) / (1.0 - epsilon / 20.0)
    return _finish(final, history, levels + 2, cfg, lam, before, epsilon / 2.0)


def final_refinement(A: SparseRowMatrix, sketch: SketchResult, epsilon: float,
                     cfg: SketchConfig) -> SketchResult:
    """Sample A once by constant-factor estimates against a certified sketch.

    When d log d / eps^2 already reaches n the whole matrix is returned at
    weight 1.  Output rows scale as 1/eps^2.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    d = A.n_cols
    before = instrument.solve_counter()
    if d * log_dim(d) * epsilon ** -2 >= A.n_rows:
        return _finish(WeightedRowSample.identity(A.n_rows), [], 0, cfg, 1.0, before, None)
    B = materialize(A, sketch.sample)
    u = approx_generalized_leverage(A, B, 1.0 / log_dim(d), cfg,
                                    salt=("final-refine",)).with_infinite_as(1.0)
    S = sample(u, epsilon ** -2, cfg, d, salt=("final-refine", "draw"))
    lam = (1.0 + epsilon) / (1.0 - epsilon) if epsilon < 1.0 else math.inf
    return _finish(S, [float(u.sum())], 1, cfg, lam, before, epsilon)


# ---------------------------------------------------------------------------
# Preconditioned least squares
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    iterations: int
    relative_residual: float
    converged: bool


def normal_equations_cg(A: SparseRowMatrix, b: np.ndarray, preconditioner=None,
                        tol: float = 1e-8, max_iters: int = 1000) -> SolveResult:
    """Conjugate gradients on A'Ax = A'b, optionally preconditioned.

    Stops when the relative normal-equation residual ||A'(Ax - b)|| /
    ||A'b|| drops below tol; reports the iterations used either way.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.n_rows,):
        raise ValueError("right-hand side length must equal n_rows")
    csr = A.to_scipy()
    rhs = csr.T @ b
    rhs_norm = float(np.linalg.norm(rhs))
    x = np.zeros(A.n_cols)
    if rhs_norm == 0.0:
        return SolveResult(x, 0, 0.0, True)
    apply_m = preconditioner if preconditioner is not None else (lambda v: v)
    r = rhs.copy()
    z = apply_m(r)
    p = z.copy()
    rz = float(r @ z)
    iterations = 0
    rel = 1.0
    for k in range(1, max_iters + 1):
        q = csr.T @ (csr @ p)
        denom = float(p @ q)
        if denom <= 0.0:
            break
        step = rz / denom
        x = x + step * p
        r = r - step * q
        iterations = k
        rel = float(np.linalg.norm(r)) / rhs_norm
        if rel <= tol:
            return SolveResult(x, iterations, rel, True)
        z = apply_m(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return SolveResult(x, iterations, rel, False)


def normal_equations_gradient_descent(A: SparseRowMatrix, b: np.ndarray,
                                      tol: float = 1e-8,
                                      max_iters: int = 1000) -> SolveResult:
    """Unpreconditioned fixed-point baseline: x += step * A'(b - Ax).

    The step is 1/lambda_max(A'A) (ten power iterations), giving the
    textbook contraction of 1 - 1/cond(A'A) per sweep; on ill-conditioned
    instances this stalls, which is exactly what sketch preconditioning
    repairs.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.n_rows,):
        raise ValueError("right-hand side length must equal n_rows")
    csr = A.to_scipy()
    rhs = csr.T @ b
    rhs_norm = float(np.linalg.norm(rhs))
    x = np.zeros(A.n_cols)
    if rhs_norm == 0.0:
        return SolveResult(x, 0, 0.0, True)
    v = rng_from(0, "power-iteration").standard_normal(A.n_cols)
    for _ in range(10):
        v = csr.T @ (csr @ v)
        v /= np.linalg.norm(v)
    lam_max = float(v @ (csr.T @ (csr @ v)))
    step = 1.0 / lam_max
    rel = 1.0
    iterations = 0
    for k in range(1, max_iters + 1):
        r = rhs - csr.T @ (csr @ x)
        iterations = k
        rel = float(np.linalg.norm(r)) / rhs_norm
        if rel <= tol:
            return SolveResult(x, iterations - 1, rel, True)
        x = x + step * r
    return SolveResult(x, iterations, rel, False)


def precondition_solve(A: SparseRowMatrix, b: np.ndarray, sketch: SketchResult,
                       tol: float = 1e-8, max_iters: int = 200) -> SolveResult:
    """Least squares min ||Ax - b|| preconditioned by the sketch's Gram factor.

    A constant-factor sketch bounds the preconditioned condition number by
    its spectral grade, so iteration counts stay small independent of A's
    conditioning.
    """
    B = materialize(A, sketch.sample)
    f = factor_gram(B)
    if f.rank == 0:
        raise PipelineError("sketch has rank zero; cannot precondition")
    return normal_equations_cg(A, b, preconditioner=f.pinv_apply,
                               tol=tol, max_iters=max_iters)
