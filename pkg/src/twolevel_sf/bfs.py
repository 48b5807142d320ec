"""Bogner-Fox-Schmit bicubic Hermite rectangle.

The reference element is ``[0, 1]^2``.  Local degrees of freedom are ordered
vertex-major, with vertices lower-left, lower-right, upper-right, upper-left
and, at each vertex, the kinds value, d/dx, d/dy, d2/dxdy.  Local index is
``4 * vertex + kind``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

N_LOCAL = 16

# (a, b) reference coordinates of the four vertices in local order
VERTICES = np.array([(0, 0), (1, 0), (1, 1), (0, 1)])


class DofKind(IntEnum):
    VALUE = 0
    DX = 1
    DY = 2
    DXY = 3


def hermite_1d(t, deriv=0):
    """The four cubic Hermite functions on [0, 1] and their derivatives.

    Returns an array of shape ``t.shape + (4,)`` ordered as
    ``(value at 0, value at 1, slope at 0, slope at 1)``.
    """
    t = np.asarray(t, dtype=float)
    if deriv == 0:
        cols = (1 - 3 * t**2 + 2 * t**3, 3 * t**2 - 2 * t**3,
                t - 2 * t**2 + t**3, -t**2 + t**3)
    elif deriv == 1:
        cols = (-6 * t + 6 * t**2, 6 * t - 6 * t**2,
                1 - 4 * t + 3 * t**2, -2 * t + 3 * t**2)
    elif deriv == 2:
        cols = (-6 + 12 * t, 6 - 12 * t, -4 + 6 * t, -2 + 6 * t)
    else:
        raise ValueError("deriv must be 0, 1 or 2")
    return np.stack(cols, axis=-1)


# index into hermite_1d columns for each local dof: (x-factor, y-factor)
_X_FACTOR = np.empty(N_LOCAL, dtype=int)
_Y_FACTOR = np.empty(N_LOCAL, dtype=int)
for _v, (_a, _b) in enumerate(VERTICES):
    for _k in DofKind:
        slope_x = _k in (DofKind.DX, DofKind.DXY)
        slope_y = _k in (DofKind.DY, DofKind.DXY)
        _X_FACTOR[4 * _v + _k] = _a + 2 * slope_x
        _Y_FACTOR[4 * _v + _k] = _b + 2 * slope_y


@dataclass(frozen=True)
class BasisEval:
    """Reference shape functions and derivatives, each ``(..., 16)``."""

    n: np.ndarray
    dxi: np.ndarray
    deta: np.ndarray
    dxixi: np.ndarray
    dxieta: np.ndarray
    detaeta: np.ndarray


def shape_eval(xi, eta) -> BasisEval:
    """Evaluate the 16 reference shape functions at ``(xi, eta)``.

    Inputs may be scalars or broadcastable arrays.
    """
    xi, eta = np.broadcast_arrays(np.asarray(xi, float), np.asarray(eta, float))
    hx = [hermite_1d(xi, d)[..., _X_FACTOR] for d in range(3)]
    hy = [hermite_1d(eta, d)[..., _Y_FACTOR] for d in range(3)]
    return BasisEval(
        n=hx[0] * hy[0],
        dxi=hx[1] * hy[0],
        deta=hx[0] * hy[1],
        dxixi=hx[2] * hy[0],
        dxieta=hx[1] * hy[1],
        detaeta=hx[0] * hy[2],
    )


def physical_scaling(hx: float, hy: float) -> np.ndarray:
    """Factors turning reference shapes into shapes for physical DOFs.

    A global derivative DOF ``d/dx`` corresponds to the reference slope
    times ``hx``; likewise ``hy`` for ``d/dy`` and ``hx * hy`` for the
    mixed derivative.
    """
    if hx <= 0 or hy <= 0:
        raise ValueError("element widths must be positive")
    per_kind = np.array([1.0, hx, hy, hx * hy])
    return np.tile(per_kind, 4)


@dataclass(frozen=True)
class PhysicalBasis:
    """Shape functions of one ``hx`` by ``hy`` element in physical units."""

    n: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    dxx: np.ndarray
    dxy: np.ndarray
    dyy: np.ndarray

    @property
    def lap(self) -> np.ndarray:
        return self.dxx + self.dyy


def physical_basis(xi, eta, hx: float, hy: float) -> PhysicalBasis:
    ref = shape_eval(xi, eta)
    s = physical_scaling(hx, hy)
    return PhysicalBasis(
        n=ref.n * s,
        dx=ref.dxi * s / hx,
        dy=ref.deta * s / hy,
        dxx=ref.dxixi * s / hx**2,
        dxy=ref.dxieta * s / (hx * hy),
        dyy=ref.detaeta * s / hy**2,
    )


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (q, 2) on [0, 1]^2
    weights: np.ndarray  # (q,)


def gauss_rule(n: int) -> QuadratureRule:
    """Tensor Gauss-Legendre rule with ``n`` points per axis on [0, 1]^2."""
    if int(n) != n or not 1 <= n <= 10:
        raise ValueError(f"quadrature order must be in 1..10, got {n!r}")
    t, w = np.polynomial.legendre.leggauss(int(n))
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    T, S = np.meshgrid(t, t)
    W = np.outer(w, w)
    return QuadratureRule(np.column_stack([T.ravel(), S.ravel()]), W.ravel())


def interpolate_element(g, x0: float, y0: float, hx: float, hy: float):
    """Local DOFs of the BFS interpolant of ``g`` on one element.

    ``g(x, y)`` must return ``(value, dx, dy, dxy)``.
    """
    dofs = np.empty(N_LOCAL)
    for v, (a, b) in enumerate(VERTICES):
        dofs[4 * v: 4 * v + 4] = g(x0 + a * hx, y0 + b * hy)
    return dofs
