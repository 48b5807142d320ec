"""Uniform rectangular meshes of the unit square.

Nodes are numbered lexicographically with x running fastest, so node
``(i, j)`` has index ``j * (nx + 1) + i``.  Elements list their vertices
counter-clockwise starting from the lower-left corner.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np


class NodeClass(IntEnum):
    INTERIOR = 0
    LEFT = 1
    RIGHT = 2
    BOTTOM = 3
    TOP = 4
    CORNER_LL = 5
    CORNER_LR = 6
    CORNER_UR = 7
    CORNER_UL = 8


SIDES = (NodeClass.LEFT, NodeClass.RIGHT, NodeClass.BOTTOM, NodeClass.TOP)
CORNERS = (NodeClass.CORNER_LL, NodeClass.CORNER_LR,
           NodeClass.CORNER_UR, NodeClass.CORNER_UL)


@dataclass(frozen=True, eq=False)
class RectMesh:
    """Uniform ``nx`` by ``ny`` partition of ``[0, 1]^2``."""

    nx: int
    ny: int
    nodes: np.ndarray = field(repr=False)
    elements: np.ndarray = field(repr=False)

    @property
    def hx(self) -> float:
        return 1.0 / self.nx

    @property
    def hy(self) -> float:
        return 1.0 / self.ny

    @property
    def h(self) -> float:
        """Mesh width, the larger of the two element widths."""
        return max(self.hx, self.hy)

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    def node_index(self, i, j):
        return j * (self.nx + 1) + i

    def element_origin(self) -> np.ndarray:
        """Lower-left corner of every element, shape ``(n_elements, 2)``."""
        return self.nodes[self.elements[:, 0]]

    def locate(self, x, y):
        """Element index and local coordinates in ``[0, 1]^2`` of points.

        Points on an interior edge are assigned to the element above/right
        of it; points on the outer boundary go to the adjacent element.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        i = np.clip(np.floor(x * self.nx).astype(int), 0, self.nx - 1)
        j = np.clip(np.floor(y * self.ny).astype(int), 0, self.ny - 1)
        xi = x * self.nx - i
        eta = y * self.ny - j
        return j * self.nx + i, xi, eta

    def __repr__(self) -> str:
        return f"RectMesh(nx={self.nx}, ny={self.ny})"


def build_uniform(nx: int, ny: int) -> RectMesh:
    """Build the uniform ``nx`` by ``ny`` mesh of the unit square."""
    for name, n in (("nx", nx), ("ny", ny)):
        if int(n) != n or n < 1:
            raise ValueError(f"{name} must be a positive integer, got {n!r}")
    nx, ny = int(nx), int(ny)

    xs = np.arange(nx + 1) / nx
    ys = np.arange(ny + 1) / ny
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny))
    ll = (jj * (nx + 1) + ii).ravel()
    elements = np.column_stack([ll, ll + 1, ll + nx + 2, ll + nx + 1])

    nodes.setflags(write=False)
    elements.setflags(write=False)
    return RectMesh(nx, ny, nodes, elements)


def refine_halve(mesh: RectMesh) -> RectMesh:
    """Split every element into four; coarse nodes stay fine nodes."""
    return build_uniform(2 * mesh.nx, 2 * mesh.ny)


def nests(coarse: RectMesh, fine: RectMesh) -> bool:
    """True when every coarse element is a union of fine elements."""
    return fine.nx % coarse.nx == 0 and fine.ny % coarse.ny == 0


def classify_boundary(mesh: RectMesh) -> np.ndarray:
    """Per-node :class:`NodeClass` codes."""
    nx, ny = mesh.nx, mesh.ny
    i = np.tile(np.arange(nx + 1), ny + 1)
    j = np.repeat(np.arange(ny + 1), nx + 1)
    left, right = i == 0, i == nx
    bottom, top = j == 0, j == ny

    cls = np.full(mesh.n_nodes, NodeClass.INTERIOR, dtype=np.int8)
    cls[left] = NodeClass.LEFT
    cls[right] = NodeClass.RIGHT
    cls[bottom] = NodeClass.BOTTOM
    cls[top] = NodeClass.TOP
    cls[left & bottom] = NodeClass.CORNER_LL
    cls[right & bottom] = NodeClass.CORNER_LR
    cls[right & top] = NodeClass.CORNER_UR
    cls[left & top] = NodeClass.CORNER_UL
    return cls


def boundary_nodes(mesh: RectMesh) -> np.ndarray:
    return np.flatnonzero(classify_boundary(mesh) != NodeClass.INTERIOR)
