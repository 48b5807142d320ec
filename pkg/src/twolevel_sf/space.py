"""Global BFS spaces: DOF numbering, essential conditions, discrete fields."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .bfs import (
    N_LOCAL,
    DofKind,
    PhysicalBasis,
    QuadratureRule,
    gauss_rule,
    physical_basis,
)
from .mesh import NodeClass, RectMesh, classify_boundary

DOFS_PER_NODE = 4


def dof_index(node, kind):
    """Global DOF number of ``(node, kind)``."""
    return DOFS_PER_NODE * np.asarray(node) + np.asarray(kind)


@dataclass(frozen=True)
class ClampedHomogeneous:
    """Zero value and zero normal derivative on the whole boundary."""


@dataclass(frozen=True)
class LidDriven:
    """Cavity walls at rest, top wall sliding with tangential speed ``lid_speed``.

    Only the top nodes strictly between the corners carry the lid speed; the
    corners keep the wall value so the field stays in H^2.
    """

    lid_speed: float = 1.0


BoundarySpec = ClampedHomogeneous | LidDriven


@dataclass(frozen=True, eq=False)
class FeSpace:
    """BFS space on a mesh, with the constraint table of an essential condition."""

    mesh: RectMesh
    fixed: np.ndarray = field(repr=False)          # bool, (n_dofs,)
    fixed_values: np.ndarray = field(repr=False)   # float, (n_dofs,), 0 where free
    quad_order: int = 4

    @property
    def n_dofs(self) -> int:
        return DOFS_PER_NODE * self.mesh.n_nodes

    @cached_property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.fixed)

    @cached_property
    def constrained(self) -> np.ndarray:
        return np.flatnonzero(self.fixed)

    @property
    def n_free(self) -> int:
        return int(self.free.size)

    @cached_property
    def elem_dofs(self) -> np.ndarray:
        """Global DOF numbers of each element in local order, ``(E, 16)``."""
        el = self.mesh.elements
        kinds = np.arange(DOFS_PER_NODE)
        return (DOFS_PER_NODE * el[:, :, None] + kinds).reshape(len(el), N_LOCAL)

    @cached_property
    def quadrature(self) -> QuadratureRule:
        return gauss_rule(self.quad_order)

    @cached_property
    def basis(self) -> PhysicalBasis:
        """Physical shape functions at the quadrature points, ``(q, 16)``."""
        p = self.quadrature.points
        return physical_basis(p[:, 0], p[:, 1], self.mesh.hx, self.mesh.hy)

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights times the element area."""
        return self.quadrature.weights * self.mesh.hx * self.mesh.hy

    @cached_property
    def quad_points(self) -> np.ndarray:
        """Physical quadrature points per element, ``(E, q, 2)``."""
        h = np.array([self.mesh.hx, self.mesh.hy])
        return self.mesh.element_origin()[:, None, :] + self.quadrature.points * h

    def lift(self, free_values) -> np.ndarray:
        """Full DOF vector from free values plus the prescribed ones."""
        full = self.fixed_values.copy()
        full[self.free] = free_values
        return full

    def restrict(self, full) -> np.ndarray:
        return np.asarray(full)[self.free]

    def zero(self) -> np.ndarray:
        """Full DOF vector that is zero on free DOFs."""
        return self.fixed_values.copy()

    def with_quad_order(self, n: int) -> "FeSpace":
        return FeSpace(self.mesh, self.fixed, self.fixed_values, n)


def make_space(mesh: RectMesh, bc: BoundarySpec | None = None,
               quad_order: int = 4) -> FeSpace:
    """BFS space on ``mesh``; constraints from ``bc`` if given."""
    n = DOFS_PER_NODE * mesh.n_nodes
    space = FeSpace(mesh, np.zeros(n, bool), np.zeros(n), quad_order)
    return apply_bc(space, bc) if bc is not None else space


def apply_bc(space: FeSpace, bc: BoundarySpec) -> FeSpace:
    """Return a copy of ``space`` constrained by ``bc``."""
    if not isinstance(bc, (ClampedHomogeneous, LidDriven)):
        raise TypeError(f"unknown boundary specification {bc!r}")
    cls = classify_boundary(space.mesh)
    bnodes = np.flatnonzero(cls != NodeClass.INTERIOR)

    fixed = np.zeros(space.n_dofs, bool)
    values = np.zeros(space.n_dofs)
    fixed[dof_index(bnodes[:, None], np.arange(DOFS_PER_NODE))] = True

    if isinstance(bc, LidDriven):
        lid = np.flatnonzero(cls == NodeClass.TOP)
        # u = d(psi)/dy, so the lid speed is the y-derivative DOF
        values[dof_index(lid, DofKind.DY)] = bc.lid_speed

    for a in (fixed, values):
        a.setflags(write=False)
    return FeSpace(space.mesh, fixed, values, space.quad_order)


class FieldValues(NamedTuple):
    value: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    dxx: np.ndarray
    dxy: np.ndarray
    dyy: np.ndarray


@dataclass(frozen=True, eq=False)
class DiscreteField:
    """A BFS function: a space plus a full coefficient vector."""

    space: FeSpace
    coeffs: np.ndarray

    def __post_init__(self):
        if np.shape(self.coeffs) != (self.space.n_dofs,):
            raise ValueError(
                f"expected {self.space.n_dofs} coefficients, got {np.shape(self.coeffs)}")

    def evaluate(self, x, y) -> FieldValues:
        """Value and derivatives up to order two at the points ``(x, y)``."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        mesh = self.space.mesh
        el, xi, eta = mesh.locate(x, y)
        b = physical_basis(xi, eta, mesh.hx, mesh.hy)
        c = np.asarray(self.coeffs)[self.space.elem_dofs[el]]
        return FieldValues(*(np.einsum("...k,...k->...", arr, c)
                             for arr in (b.n, b.dx, b.dy, b.dxx, b.dxy, b.dyy)))

    def __call__(self, x, y):
        return self.evaluate(x, y).value

    def at_quadrature(self) -> FieldValues:
        """Field values at every element's quadrature points, each ``(E, q)``."""
        c = np.asarray(self.coeffs)[self.space.elem_dofs]
        b = self.space.basis
        return FieldValues(*(c @ arr.T for arr in (b.n, b.dx, b.dy, b.dxx, b.dxy, b.dyy)))


def interpolate(space: FeSpace, g) -> np.ndarray:
    """Hermite interpolant of ``g`` as a full coefficient vector.

    ``g(x, y)`` must return ``(value, dx, dy, dxy)`` for arrays of nodes.
    Prescribed boundary values of ``space`` are *not* imposed.
    """
    x, y = space.mesh.nodes.T
    parts = np.broadcast_arrays(*[np.asarray(p, float) for p in g(x, y)], x)[:4]
    return np.column_stack(parts).ravel()
