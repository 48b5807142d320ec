"""Assembly of the stream-function forms.

With ``curl phi = (phi_y, -phi_x)``::

    a(psi, phi)      = 1/Re * int lap(psi) lap(phi)
    b(xi; psi, phi)  = int lap(xi) (psi_y phi_x - psi_x phi_y)
    l(phi)           = int f . curl(phi)

Matrices are returned restricted to the free DOFs unless ``full=True``;
rows index test functions, columns trial functions.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .space import DiscreteField, FeSpace


def _scatter(space: FeSpace, ke: np.ndarray, full: bool) -> sp.csr_matrix:
    dofs = space.elem_dofs
    ne = len(dofs)
    ke = np.broadcast_to(ke, (ne, 16, 16))
    rows = np.repeat(dofs, 16, axis=1).ravel()
    cols = np.tile(dofs, (1, 16)).ravel()
    n = space.n_dofs
    mat = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat if full else restrict_matrix(space, mat)


def restrict_matrix(space: FeSpace, mat: sp.csr_matrix) -> sp.csr_matrix:
    """Free-by-free block of a full matrix."""
    sub = mat[space.free][:, space.free].tocsr()
    sub.sort_indices()
    return sub


def element_a(space: FeSpace, reynolds: float) -> np.ndarray:
    """The (element-independent) biharmonic element matrix."""
    lap = space.basis.lap
    return np.einsum("q,qi,qj->ij", space.weights, lap, lap) / reynolds


def assemble_a(space: FeSpace, reynolds: float, full: bool = False) -> sp.csr_matrix:
    if reynolds <= 0:
        raise ValueError("Reynolds number must be positive")
    return _scatter(space, element_a(space, reynolds), full)


def _convection_pairs(space: FeSpace) -> np.ndarray:
    """``psi_y phi_x - psi_x phi_y`` for shape pairs, ``(q, test, trial)``."""
    b = space.basis
    return (np.einsum("qi,qj->qij", b.dx, b.dy)
            - np.einsum("qi,qj->qij", b.dy, b.dx))


def element_b_first(space: FeSpace, xi) -> np.ndarray:
    lap_xi = DiscreteField(space, xi).at_quadrature()
    lap_xi = lap_xi.dxx + lap_xi.dyy
    return np.einsum("eq,qij->eij", lap_xi * space.weights, _convection_pairs(space))


def assemble_b_first_slot(space: FeSpace, xi, full: bool = False) -> sp.csr_matrix:
    """Matrix ``B(xi)`` with ``phi . B(xi) psi = b(xi; psi, phi)``."""
    return _scatter(space, element_b_first(space, xi), full)


def element_b_middle(space: FeSpace, psi) -> np.ndarray:
    vals = DiscreteField(space, psi).at_quadrature()
    b = space.basis
    w = space.weights
    test = (np.einsum("eq,qi->eqi", vals.dy * w, b.dx)
            - np.einsum("eq,qi->eqi", vals.dx * w, b.dy))
    return np.einsum("eqi,qj->eij", test, b.lap)


def assemble_b_middle_slot(space: FeSpace, psi, full: bool = False) -> sp.csr_matrix:
    """Matrix ``C(psi)`` with ``phi . C(psi) delta = b(delta; psi, phi)``."""
    return _scatter(space, element_b_middle(space, psi), full)


def assemble_load(space: FeSpace, f, full: bool = False) -> np.ndarray:
    """Load vector ``l(phi_i) = (f, curl phi_i)``.

    ``f(x, y)`` returns the two body-force components for arrays of points.
    """
    pts = space.quad_points
    f1, f2 = (np.broadcast_to(np.asarray(c, float), pts.shape[:2])
              for c in f(pts[..., 0], pts[..., 1]))
    b = space.basis
    w = space.weights
    le = (f1 * w) @ b.dy - (f2 * w) @ b.dx
    out = np.zeros(space.n_dofs)
    np.add.at(out, space.elem_dofs.ravel(), le.ravel())
    return out if full else out[space.free]


def zero_force(x, y):
    z = np.zeros(np.shape(x))
    return z, z


class NavierStokesOperator:
    """Discrete residual and Newton Jacobian of the stream-function problem.

    Full-size matrices are kept so prescribed (possibly nonzero) boundary
    values enter through the residual; everything returned is over free DOFs.
    """

    def __init__(self, space: FeSpace, reynolds: float, f=None):
        self.space = space
        self.reynolds = float(reynolds)
        self.a_full = assemble_a(space, reynolds, full=True)
        self.load_full = assemble_load(space, f if f is not None else zero_force, full=True)
        self.residual_evaluations = 0

    @property
    def load(self) -> np.ndarray:
        return self.load_full[self.space.free]

    def residual(self, psi) -> np.ndarray:
        """``A psi + B(psi) psi - l`` on free rows; ``psi`` is a full vector."""
        self.residual_evaluations += 1
        b = assemble_b_first_slot(self.space, psi, full=True)
        r = self.a_full @ psi + b @ psi - self.load_full
        return r[self.space.free]

    def jacobian(self, psi) -> sp.csr_matrix:
        """``A + B(psi) + C(psi)`` on the free DOFs."""
        j = (self.a_full
             + assemble_b_first_slot(self.space, psi, full=True)
             + assemble_b_middle_slot(self.space, psi, full=True))
        return restrict_matrix(self.space, j.tocsr())

    def linear_system(self, xi=None):
        """Matrix and right-hand side of ``a(psi, .) + b(xi; psi, .) = l``.

        With ``xi=None`` the convection term is dropped (Stokes problem).
        Prescribed values are moved to the right-hand side.
        """
        m = self.a_full
        if xi is not None:
            m = (m + assemble_b_first_slot(self.space, xi, full=True)).tocsr()
        s = self.space
        rhs = self.load_full[s.free] - m[s.free][:, s.constrained] @ s.fixed_values[s.constrained]
        return restrict_matrix(s, m), rhs
