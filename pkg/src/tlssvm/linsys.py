"""Dense direct solution of the equality-constrained dual systems.

Both the shared-factor step, the mode-row steps, and the single-task
baseline reduce to the same symmetric indefinite system

    [[0, A^T], [A, Q + I/C + jitter*I]] [b; coef] = [0; y]

with A the block-of-ones constraint matrix pairing samples to tasks.
Solved by LU with partial pivoting; one step of iterative refinement is
applied if the residual misses the acceptance bound.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve

from .errors import SolverError

__all__ = ["RESIDUAL_RTOL", "solve_dual_system"]

RESIDUAL_RTOL = 1e-8


def block_constraint_matrix(block_sizes) -> np.ndarray:
    """m x T block-diagonal matrix of ones columns (one column per task)."""
    m = int(sum(block_sizes))
    A = np.zeros((m, len(block_sizes)))
    start = 0
    for j, size in enumerate(block_sizes):
        A[start : start + size, j] = 1.0
        start += size
    return A


def solve_dual_system(block_sizes, Q: np.ndarray, y: np.ndarray, C: float, jitter: float = 0.0):
    """Solve the saddle-point system above.

    Returns (biases, coefficients, residual_norm) where biases has one
    entry per block and coefficients one per sample. Raises SolverError if
    the system is singular or the residual exceeds
    RESIDUAL_RTOL * (1 + ||y||) even after refinement.
    """
    block_sizes = [int(s) for s in block_sizes]
    y = np.asarray(y, dtype=float)
    m = y.shape[0]
    n_blocks = len(block_sizes)
    if sum(block_sizes) != m or Q.shape != (m, m):
        raise ValueError(f"inconsistent system shapes: blocks {sum(block_sizes)}, Q {Q.shape}, y {m}")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    if jitter < 0:
        raise ValueError(f"jitter must be nonnegative, got {jitter}")

    A = block_constraint_matrix(block_sizes)
    M = np.zeros((n_blocks + m, n_blocks + m))
    M[:n_blocks, n_blocks:] = A.T
    M[n_blocks:, :n_blocks] = A
    M[n_blocks:, n_blocks:] = Q + (1.0 / C + jitter) * np.eye(m)
    rhs = np.concatenate([np.zeros(n_blocks), y])

    try:
        factors = lu_factor(M)
        sol = lu_solve(factors, rhs)
    except (LinAlgError, ValueError) as exc:
        raise SolverError(
            f"dual system is singular ({exc}); increase jitter or adjust C"
        ) from exc

    bound = RESIDUAL_RTOL * (1.0 + float(np.linalg.norm(y)))
    residual = float(np.linalg.norm(M @ sol - rhs))
    if residual > bound:
        sol = sol + lu_solve(factors, rhs - M @ sol)
        residual = float(np.linalg.norm(M @ sol - rhs))
    if not np.all(np.isfinite(sol)) or residual > bound:
        raise SolverError(
            f"dual system solve residual {residual:.3e} exceeds {bound:.3e}; "
            "increase jitter or adjust C"
        )
    return sol[:n_blocks], sol[n_blocks:], residual
