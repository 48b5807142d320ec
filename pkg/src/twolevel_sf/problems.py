"""Test problems, exact solutions and error measurement.

Velocity is recovered from the stream function as ``u = psi_y, v = -psi_x``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bfs import gauss_rule, physical_basis
from .space import ClampedHomogeneous, DiscreteField, LidDriven


def _bump(t):
    """``t^2 (t-1)^2`` and its first four derivatives."""
    return (t**2 * (t - 1) ** 2,
            2 * t * (t - 1) * (2 * t - 1),
            12 * t**2 - 12 * t + 2,
            24 * t - 12,
            np.full_like(np.asarray(t, float), 24.0))


@dataclass(frozen=True)
class ManufacturedProblem:
    """Smooth clamped flow ``psi = x^2 (x-1)^2 y^2 (y-1)^2``, ``p = x^3 + y^3 - 1/2``."""

    reynolds: float = 10.0
    bc = ClampedHomogeneous()

    def psi(self, x, y):
        """Value, gradient and Hessian of the exact stream function."""
        X, X1, X2, _, _ = _bump(np.asarray(x, float))
        Y, Y1, Y2, _, _ = _bump(np.asarray(y, float))
        return X * Y, X1 * Y, X * Y1, X2 * Y, X1 * Y1, X * Y2

    def hermite_data(self, x, y):
        """``(value, dx, dy, dxy)`` for Hermite interpolation."""
        v, dx, dy, _, dxy, _ = self.psi(x, y)
        return v, dx, dy, dxy

    def velocity(self, x, y):
        X, X1, _, _, _ = _bump(np.asarray(x, float))
        Y, Y1, _, _, _ = _bump(np.asarray(y, float))
        return X * Y1, -X1 * Y

    @staticmethod
    def pressure(x, y):
        return np.asarray(x) ** 3 + np.asarray(y) ** 3 - 0.5

    def force(self, x, y):
        return manufactured_f(self.reynolds)(x, y)


def manufactured_f(reynolds: float):
    """Body force ``-1/Re lap(u) + (u . grad) u + grad(p)`` of the manufactured flow."""
    if reynolds <= 0:
        raise ValueError("Reynolds number must be positive")
    nu = 1.0 / reynolds

    def f(x, y):
        X, X1, X2, X3, _ = _bump(np.asarray(x, float))
        Y, Y1, Y2, Y3, _ = _bump(np.asarray(y, float))
        u1, u2 = X * Y1, -X1 * Y
        lap_u1 = X2 * Y1 + X * Y3
        lap_u2 = -(X3 * Y + X1 * Y2)
        conv1 = u1 * (X1 * Y1) + u2 * (X * Y2)
        conv2 = u1 * (-X2 * Y) + u2 * (-X1 * Y1)
        return (-nu * lap_u1 + conv1 + 3 * np.asarray(x) ** 2,
                -nu * lap_u2 + conv2 + 3 * np.asarray(y) ** 2)

    return f


@dataclass(frozen=True)
class CavityProblem:
    """Driven cavity: no body force, top wall moving with ``lid_speed``."""

    reynolds: float = 1.0
    lid_speed: float = 1.0

    @property
    def bc(self) -> LidDriven:
        return LidDriven(self.lid_speed)

    @staticmethod
    def force(x, y):
        z = np.zeros(np.shape(x))
        return z, z


@dataclass(frozen=True)
class ErrorReport:
    l2: float
    h1: float
    h2: float

    def as_dict(self):
        return {"l2": self.l2, "h1": self.h1, "h2": self.h2}


def error_norms(field: DiscreteField, exact: ManufacturedProblem,
                quad_order: int = 6, seminorm: bool = False) -> ErrorReport:
    """L2, H1 and H2 errors of ``field`` against the exact stream function.

    By default ``h1`` and ``h2`` are full Sobolev norms (all derivative
    orders up to j); ``seminorm=True`` keeps only the order-j terms.
    """
    space = field.space
    mesh = space.mesh
    rule = gauss_rule(quad_order)
    basis = physical_basis(rule.points[:, 0], rule.points[:, 1], mesh.hx, mesh.hy)
    w = rule.weights * mesh.hx * mesh.hy
    pts = mesh.element_origin()[:, None, :] + rule.points * [mesh.hx, mesh.hy]

    c = np.asarray(field.coeffs)[space.elem_dofs]
    approx = [c @ arr.T for arr in (basis.n, basis.dx, basis.dy,
                                    basis.dxx, basis.dxy, basis.dyy)]
    ex = exact.psi(pts[..., 0], pts[..., 1])
    e = [a - b for a, b in zip(ex, approx)]

    def integral(sq):
        return float(np.sum(sq * w))

    s0 = integral(e[0] ** 2)
    s1 = integral(e[1] ** 2 + e[2] ** 2)
    s2 = integral(e[3] ** 2 + 2 * e[4] ** 2 + e[5] ** 2)
    if seminorm:
        return ErrorReport(np.sqrt(s0), np.sqrt(s1), np.sqrt(s2))
    return ErrorReport(np.sqrt(s0), np.sqrt(s0 + s1), np.sqrt(s0 + s1 + s2))


def sample_field(field: DiscreteField, n: int) -> np.ndarray:
    """Rows ``(x, y, psi, u, v)`` on an ``n`` by ``n`` grid over the closed square.

    Rows run with x fastest.
    """
    if n < 2:
        raise ValueError("sample resolution must be at least 2")
    t = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(t, t)
    vals = field.evaluate(X.ravel(), Y.ravel())
    return np.column_stack([X.ravel(), Y.ravel(), vals.value, vals.dy, -vals.dx])


def velocity_profile(field: DiscreteField, line: str, c: float, samples: int) -> np.ndarray:
    """Velocity along a centerline.

    ``line="vertical"`` gives rows ``(y, u)`` along ``x = c``;
    ``line="horizontal"`` gives rows ``(x, v)`` along ``y = c``.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError("line position must lie in [0, 1]")
    if samples < 2:
        raise ValueError("need at least two samples")
    t = np.linspace(0.0, 1.0, samples)
    if line == "vertical":
        vals = field.evaluate(np.full_like(t, c), t)
        return np.column_stack([t, vals.dy])
    if line == "horizontal":
        vals = field.evaluate(t, np.full_like(t, c))
        return np.column_stack([t, -vals.dx])
    raise ValueError(f"line must be 'vertical' or 'horizontal', got {line!r}")
