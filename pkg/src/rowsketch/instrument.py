"""Global operation counters for dense d x d factorizations and solves.

Counters are process-wide totals; callers that need per-run numbers take a
snapshot before and after (see pipelines.SketchResult.solve_count).
Increment order is irrelevant, only totals are contractual.
"""

_FACTORIZATIONS = 0
_SOLVES = 0


def count_factorization() -> None:
    global _FACTORIZATIONS
    _FACTORIZATIONS += 1


def count_solves(k: int = 1) -> None:
    global _SOLVES
    _SOLVES += k


def factorization_count() -> int:
    return _FACTORIZATIONS


def solve_count() -> int:
    return _SOLVES


def solve_counter() -> int:
    """Total instrumented work: factorizations plus factor-backed solves."""
    return _FACTORIZATIONS + _SOLVES


def reset_counters() -> None:
    global _FACTORIZATIONS, _SOLVES
    _FACTORIZATIONS = 0
    _SOLVES = 0
