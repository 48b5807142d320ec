"""One-level Newton and two-level solvers for the stream-function equations."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .assembly import NavierStokesOperator
from .mesh import build_uniform, nests
from .space import BoundarySpec, DiscreteField, FeSpace, interpolate, make_space
from .sparse import SolveReport, SolverConfig, bicgstab

log = logging.getLogger(__name__)


class LinearSolveError(RuntimeError):
    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


class NewtonError(RuntimeError):
    """Newton iteration failed; carries the best iterate and residual history."""

    def __init__(self, message: str, best, history, stats=None):
        super().__init__(message)
        self.best = best
        self.history = history
        self.stats = stats


@dataclass
class NewtonConfig:
    tol: float = 1e-3
    max_newton: int = 25
    initial_guess: str = "stokes"      # "stokes" | "zero"
    continuation: tuple[float, ...] | None = None
    max_step: float = 1e8

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("Newton tolerance must be positive")
        if self.max_newton < 1:
            raise ValueError("max_newton must be at least 1")
        if self.initial_guess not in ("stokes", "zero"):
            raise ValueError(f"unknown initial guess {self.initial_guess!r}")
        if self.continuation is not None:
            c = tuple(float(r) for r in self.continuation)
            if any(b <= a for a, b in zip(c, c[1:])) or any(r <= 0 for r in c):
                raise ValueError("continuation schedule must be positive and increasing")
            self.continuation = c


@dataclass
class RunStats:
    method: str
    re: float
    coarse_h: float | None
    fine_h: float
    newton_iters: int = 0
    fine_newton_iters: int = 0
    fine_linear_solves: int = 0
    bicgstab_iters_coarse: list[int] = field(default_factory=list)
    bicgstab_iters_fine: list[int] = field(default_factory=list)
    bicgstab_iters_initial: list[int] = field(default_factory=list)
    residual: float = math.nan
    residual_history: list[float] = field(default_factory=list)
    step_history: list[float] = field(default_factory=list)
    errors: dict | None = None
    free_dofs: dict = field(default_factory=dict)
    wall_seconds: float = 0.0
    converged: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def _linear_solve(matrix, rhs, x0, cfg: SolverConfig):
    x, report = bicgstab(matrix, rhs, x0, cfg)
    if not report.converged:
        reason = "breakdown" if report.breakdown else "no convergence"
        raise LinearSolveError(
            f"BiCGSTAB {reason} after {report.iterations} iterations "
            f"(relative residual {report.residual:.3e})", report)
    return x, report


def stokes_guess(op: NavierStokesOperator, linear_cfg: SolverConfig):
    matrix, rhs = op.linear_system(None)
    x, report = _linear_solve(matrix, rhs, None, linear_cfg)
    return op.space.lift(x), report


def newton(op: NavierStokesOperator, psi, cfg: NewtonConfig,
           linear_cfg: SolverConfig, stats: RunStats):
    """Plain Newton on ``op`` from the full vector ``psi``.

    Stops once both the update norm and the residual norm (Euclidean, over
    free DOFs) are at most ``cfg.tol``.  Returns the new iterate.
    """
    space = op.space
    psi = np.array(psi, dtype=float)
    r = op.residual(psi)
    best, best_norm = psi.copy(), np.linalg.norm(r)
    history = [best_norm]
    for k in range(1, cfg.max_newton + 1):
        delta, report = _linear_solve(op.jacobian(psi), -r, None, linear_cfg)
        stats.bicgstab_iters_coarse.append(report.iterations)
        step = np.linalg.norm(delta)
        if not np.isfinite(step) or step > cfg.max_step:
            raise NewtonError(f"Newton step {k} too large ({step:.3e})",
                              best, history, stats)
        psi[space.free] += delta
        r = op.residual(psi)
        rnorm = np.linalg.norm(r)
        history.append(rnorm)
        stats.step_history.append(step)
        stats.newton_iters += 1
        log.debug("Newton %d: |delta| = %.3e, |R| = %.3e, %d BiCGSTAB its",
                  k, step, rnorm, report.iterations)
        if rnorm < best_norm:
            best, best_norm = psi.copy(), rnorm
        if step <= cfg.tol and rnorm <= cfg.tol:
            stats.residual_history.extend(history)
            stats.residual = rnorm
            return psi
    stats.residual_history.extend(history)
    stats.residual = best_norm
    raise NewtonError(f"Newton did not converge in {cfg.max_newton} iterations",
                      best, history, stats)


def solve_one_level(space: FeSpace, reynolds: float, f=None,
                    newton_cfg: NewtonConfig | None = None,
                    linear_cfg: SolverConfig | None = None,
                    stats: RunStats | None = None):
    """Solve the nonlinear discrete problem on ``space`` by Newton's method.

    ``space`` must already carry its boundary constraints.  Returns the
    full coefficient vector and a :class:`RunStats`.
    """
    newton_cfg = newton_cfg or NewtonConfig()
    linear_cfg = linear_cfg or SolverConfig()
    t0 = time.perf_counter()
    if stats is None:
        stats = RunStats("one-level", float(reynolds), None, space.mesh.h)
    stats.free_dofs.setdefault("fine" if stats.coarse_h is None else "coarse", space.n_free)

    schedule = [float(reynolds)]
    if newton_cfg.continuation:
        schedule = [r for r in newton_cfg.continuation if r < reynolds] + schedule

    psi = None
    for re in schedule:
        op = NavierStokesOperator(space, re, f)
        if psi is None:
            if newton_cfg.initial_guess == "stokes":
                psi, report = stokes_guess(op, linear_cfg)
                stats.bicgstab_iters_initial.append(report.iterations)
            else:
                psi = space.zero()
        psi = newton(op, psi, newton_cfg, linear_cfg, stats)

    stats.converged = True
    stats.wall_seconds = time.perf_counter() - t0
    return psi, stats


def prolongate(coarse: DiscreteField, fine_space: FeSpace) -> np.ndarray:
    """Hermite interpolation of a coarse field at the nodes of a nested fine mesh.

    The fine spaces contain the coarse ones, so the result represents the
    same function.
    """
    if not nests(coarse.space.mesh, fine_space.mesh):
        raise ValueError(f"{fine_space.mesh!r} does not refine {coarse.space.mesh!r}")

    def g(x, y):
        v = coarse.evaluate(x, y)
        return v.value, v.dx, v.dy, v.dxy

    return interpolate(fine_space, g)


@dataclass
class TwoLevelConfig:
    coarse_n: int
    fine_n: int | None = None          # default: 2 * coarse_n
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    linear: SolverConfig = field(default_factory=SolverConfig)
    quad_order: int = 4

    def __post_init__(self):
        if self.fine_n is None:
            self.fine_n = 2 * self.coarse_n
        if self.coarse_n < 1 or self.fine_n < 1:
            raise ValueError("mesh sizes must be positive")
        if self.fine_n % self.coarse_n:
            raise ValueError("fine mesh must refine the coarse mesh")


def solve_two_level(cfg: TwoLevelConfig, reynolds: float, f, bc: BoundarySpec,
                    stats: RunStats | None = None):
    """Newton on the coarse mesh, then one linearized solve on the fine mesh.

    The fine system is ``a(psi_h, .) + b(P psi_H; psi_h, .) = l`` with ``P``
    the prolongation; its BiCGSTAB run starts from ``P psi_H``.
    Returns ``(fine_coeffs, stats, coarse_field)``.
    """
    t0 = time.perf_counter()
    coarse_space = make_space(build_uniform(cfg.coarse_n, cfg.coarse_n), bc, cfg.quad_order)
    fine_space = make_space(build_uniform(cfg.fine_n, cfg.fine_n), bc, cfg.quad_order)
    if stats is None:
        stats = RunStats("two-level", float(reynolds), coarse_space.mesh.h, fine_space.mesh.h)

    psi_coarse, stats = solve_one_level(coarse_space, reynolds, f, cfg.newton,
                                        cfg.linear, stats)
    coarse_residual = stats.residual
    stats.converged = False
    coarse = DiscreteField(coarse_space, psi_coarse)

    xi = prolongate(coarse, fine_space)
    op = NavierStokesOperator(fine_space, reynolds, f)
    matrix, rhs = op.linear_system(xi)
    x, report = _linear_solve(matrix, rhs, fine_space.restrict(xi), cfg.linear)
    stats.fine_linear_solves += 1
    stats.bicgstab_iters_fine.append(report.iterations)
    stats.free_dofs["fine"] = fine_space.n_free
    stats.residual = report.residual
    stats.residual_history.append(coarse_residual)
    stats.converged = True
    stats.wall_seconds = time.perf_counter() - t0
    return fine_space.lift(x), stats, coarse


class ElementKind(Enum):
    ARGYRIS = "argyris"
    CLOUGH_TOCHER = "clough-tocher"
    BOGNER_FOX_SCHMIT = "bogner-fox-schmit"
    BICUBIC_SPLINE = "bicubic-spline"

    @property
    def exponent(self) -> float:
        """Power of H in the coarse/fine balance ``h |ln h|^{-1/4} ~ H^p``."""
        return 2.5 if self is ElementKind.ARGYRIS else 1.5

    @property
    def error_orders(self) -> tuple[int, int]:
        """Coarse error orders in the H^2 and H^1 seminorms."""
        return (4, 5) if self is ElementKind.ARGYRIS else (2, 3)


def scaling_lhs(h: float) -> float:
    return h * (-math.log(h)) ** -0.25


def scaling_h_for_H(kind: ElementKind, H: float) -> float:
    """Fine width ``h`` solving ``h |ln h|^{-1/4} = H^p`` (unit constant).

    The left side increases monotonically on (0, 1), so bisection applies.
    """
    if not 0.0 < H < 1.0:
        raise ValueError(f"coarse width must lie in (0, 1), got {H!r}")
    target = H ** ElementKind(kind).exponent
    lo, hi = 0.0, min(H, 0.5)
    while scaling_lhs(hi) < target:
        hi = 0.5 * (hi + 1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if scaling_lhs(mid) < target:
            lo = mid
        else:
            hi = mid
    return hi
