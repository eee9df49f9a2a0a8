"""Direct (and optional iterative) solution of the bordered system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import BorderedSystem, DiscreteSolution

__all__ = ["LinearSolveReport", "solve", "solve_linear"]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class LinearSolveReport:
    """Solve outcome; the residual is recomputed from the assembled system."""

    residual_norm: float
    method: str
    iterations: int


class SolveError(RuntimeError):
    """Structural singularity or non-convergence of the linear solve."""


def solve_linear(matrix, rhs: np.ndarray, tol: float = DEFAULT_TOL,
                 method: str = "direct_factorization",
                 precond_diag: np.ndarray | None = None):
    """Solve a sparse symmetric indefinite system to relative residual tol.

    ``direct_factorization`` uses a sparse LU with partial pivoting and a
    fill-reducing column ordering; ``minres_uzawa`` runs MINRES with a
    positive block-diagonal preconditioner (pass ``precond_diag``; the
    absolute matrix diagonal is the fallback).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rhs = np.asarray(rhs, dtype=float)
    matrix = sp.csc_matrix(matrix)
    iterations = 0
    if method == "direct_factorization":
        try:
            x = spla.splu(matrix).solve(rhs)
        except (RuntimeError, ValueError) as exc:
            raise SolveError(f"direct factorization failed: {exc}") from exc
    elif method == "minres_uzawa":
        diag = np.abs(matrix.diagonal()) if precond_diag is None \
            else np.asarray(precond_diag, dtype=float)
        floor = max(diag.max(), 1.0) * 1e-12
        precond = spla.LinearOperator(
            matrix.shape, matvec=lambda v: v / np.maximum(diag, floor))
        counter = _IterationCounter()
        x, info = spla.minres(matrix, rhs, rtol=tol * 1e-3, maxiter=200000,
                              M=precond, callback=counter)
        iterations = counter.count
        if info != 0:
            raise SolveError(f"MINRES did not converge (info={info})")
    else:
        raise ValueError(f"unknown solve method {method!r}")
    if not np.all(np.isfinite(x)):
        raise SolveError("solver produced non-finite values "
                         "(structurally singular system?)")
    residual = float(np.linalg.norm(rhs - matrix @ x))
    scale = float(np.linalg.norm(rhs))
    if residual > tol * max(scale, 1e-300) and scale > 0:
        raise SolveError(
            f"relative residual {residual / scale:.3e} exceeds tol {tol:.1e}")
    if scale == 0 and residual > tol:
        raise SolveError(f"residual {residual:.3e} exceeds tol {tol:.1e}")
    return x, LinearSolveReport(residual_norm=residual, method=method,
                                iterations=iterations)


class _IterationCounter:
    def __init__(self):
        self.count = 0

    def __call__(self, _xk):
        self.count += 1


def solve(system: BorderedSystem, tol: float = DEFAULT_TOL,
          method: str = "direct_factorization"):
    """Solve a bordered system; returns (DiscreteSolution, LinearSolveReport)."""
    precond = None
    if method == "minres_uzawa":
        # block-diagonal scaling: stiffness diagonal for the velocity block,
        # lumped pressure mass for the pressure block (Schur-equivalent)
        precond = np.concatenate([[max(system.alpha_reg, 1.0)],
                                  system.A.diagonal(), system.s])
    x, report = solve_linear(system.matrix(), system.rhs(), tol=tol,
                             method=method, precond_diag=precond)
    return system.unpack(x), report
