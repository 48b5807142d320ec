"""CSR kernels and a BiCGSTAB solver.

Matrices are ``scipy.sparse.csr_matrix`` with sorted column indices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class ZeroDiagonalError(ValueError):
    def __init__(self, index: int):
        super().__init__(f"zero diagonal entry at row {index}")
        self.index = index


def as_csr(a) -> sp.csr_matrix:
    m = sp.csr_matrix(a)
    m.sum_duplicates()
    m.sort_indices()
    return m


def spmv(a: sp.csr_matrix, x) -> np.ndarray:
    """``y = A x``."""
    x = np.asarray(x, dtype=float)
    if a.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} times {x.shape}")
    return a @ x


@dataclass
class SolverConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_iter: int | None = None   # None means 10 * n
    preconditioner: str = "jacobi"  # "none" | "jacobi"

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.preconditioner not in ("none", "jacobi"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass
class SolveReport:
    iterations: int
    residual: float            # final true relative residual
    converged: bool
    breakdown: bool = False
    matvecs: int = 0


class JacobiPreconditioner:
    """Applies ``D^{-1}`` with ``D = diag(A)``."""

    def __init__(self, a: sp.csr_matrix):
        d = a.diagonal()
        zero = np.flatnonzero(d == 0)
        if zero.size:
            raise ZeroDiagonalError(int(zero[0]))
        self.inv_diag = 1.0 / d

    def __call__(self, x):
        return self.inv_diag * x


def jacobi_precondition(a: sp.csr_matrix) -> JacobiPreconditioner:
    return JacobiPreconditioner(a)


def _identity(x):
    return x


def bicgstab(a: sp.csr_matrix, rhs, x0=None, cfg: SolverConfig | None = None):
    """Solve ``A x = rhs`` by BiCGSTAB with optional right preconditioning.

    Every iteration does exactly two products with ``A``.  Convergence is
    declared on ``||rhs - A x|| <= max(rel_tol * ||rhs||, abs_tol)`` with the
    residual recomputed from scratch; if it has drifted from the recurrence,
    iteration resumes from the true residual.

    Returns ``(x, SolveReport)``.
    """
    cfg = cfg or SolverConfig()
    b = np.asarray(rhs, dtype=float)
    n = b.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"matrix {a.shape} incompatible with rhs of length {n}")
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    max_iter = cfg.max_iter or 10 * n
    prec = jacobi_precondition(a) if cfg.preconditioner == "jacobi" else _identity

    bnorm = np.linalg.norm(b)
    target = max(cfg.rel_tol * bnorm, cfg.abs_tol)
    scale = bnorm if bnorm > 0 else 1.0
    matvecs = 0

    def true_residual():
        nonlocal matvecs
        matvecs += 1
        return b - spmv(a, x)

    r = true_residual()
    rnorm = np.linalg.norm(r)
    if rnorm <= target:
        return x, SolveReport(0, rnorm / scale, True, False, matvecs)

    r_hat = r.copy()
    rho_old = alpha = omega = 1.0
    v = np.zeros(n)
    p = np.zeros(n)
    breakdown = False
    it = 0
    while it < max_iter:
        rho = np.dot(r_hat, r)
        if rho == 0.0 or not np.isfinite(rho):
            breakdown = True
            break
        if it == 0 or p is None:
            p = r.copy()
        else:
            beta = (rho / rho_old) * (alpha / omega)
            p = r + beta * (p - omega * v)
        p_hat = prec(p)
        v = spmv(a, p_hat)
        rv = np.dot(r_hat, v)
        if rv == 0.0 or not np.isfinite(rv):
            # aborted iteration: not counted, its single product still is
            matvecs += 1
            breakdown = True
            break
        alpha = rho / rv
        s = r - alpha * v
        s_hat = prec(s)
        t = spmv(a, s_hat)
        matvecs += 2
        tt = np.dot(t, t)
        omega = np.dot(t, s) / tt if tt > 0 else 0.0
        x += alpha * p_hat + omega * s_hat
        r = s - omega * t
        rho_old = rho
        it += 1

        rnorm = np.linalg.norm(r)
        if not np.isfinite(rnorm):
            breakdown = True
            break
        if rnorm <= target:
            r = true_residual()
            rnorm = np.linalg.norm(r)
            if rnorm <= target:
                return x, SolveReport(it, rnorm / scale, True, False, matvecs)
            # recurrence drifted: restart the shadow sequence from the true residual
            r_hat = r.copy()
            p = None
            continue
        if omega == 0.0:
            breakdown = True
            break

    rnorm = np.linalg.norm(true_residual())
    return x, SolveReport(it, rnorm / scale, rnorm <= target, breakdown, matvecs)


def dense_solve(a: sp.csr_matrix, rhs) -> np.ndarray:
    """Direct LU solve of the densified system; an oracle for small tests."""
    import scipy.linalg

    return scipy.linalg.lu_solve(scipy.linalg.lu_factor(a.toarray()), rhs)
