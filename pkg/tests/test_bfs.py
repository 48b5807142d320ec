import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twolevel_sf.bfs import (
    VERTICES,
    DofKind,
    gauss_rule,
    interpolate_element,
    physical_basis,
    physical_scaling,
    shape_eval,
)
from twolevel_sf.mesh import build_uniform
from twolevel_sf.space import DiscreteField, interpolate, make_space


def dof_functionals(xi, eta):
    """Matrix of the 16 DOF functionals applied to the 16 shapes at one vertex."""
    b = shape_eval(xi, eta)
    return np.stack([b.n, b.dxi, b.deta, b.dxieta])


def test_kronecker_property():
    for v, (a, c) in enumerate(VERTICES):
        rows = dof_functionals(float(a), float(c))
        for kind in DofKind:
            expected = np.zeros(16)
            expected[4 * v + kind] = 1.0
            np.testing.assert_allclose(rows[kind], expected, atol=1e-15)


def test_lower_left_value_at_origin():
    n = shape_eval(0.0, 0.0).n
    assert n[0] == 1.0
    assert np.all(n[1:] == 0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_constant_reproduction(xi, eta):
    b = shape_eval(xi, eta)
    value = [4 * v + DofKind.VALUE for v in range(4)]
    assert b.n[value].sum() == pytest.approx(1.0, abs=1e-14)
    for d in (b.dxi, b.deta, b.dxixi, b.dxieta, b.detaeta):
        assert d[value].sum() == pytest.approx(0.0, abs=1e-13)


def monomial(a, b):
    def g(x, y):
        def p(t, k, d):
            if k < d:
                return 0.0 * t
            c = 1.0
            for m in range(d):
                c *= k - m
            return c * t ** (k - d)
        return (p(x, a, 0) * p(y, b, 0), p(x, a, 1) * p(y, b, 0),
                p(x, a, 0) * p(y, b, 1), p(x, a, 1) * p(y, b, 1))
    return g


@pytest.mark.parametrize("a", range(4))
@pytest.mark.parametrize("b", range(4))
def test_monomial_reproduction(a, b):
    rng = np.random.default_rng(10 * a + b)
    x0, y0, hx, hy = 0.25, 0.5, 0.125, 0.25
    g = monomial(a, b)
    dofs = interpolate_element(g, x0, y0, hx, hy)
    xi, eta = rng.random(20), rng.random(20)
    pb = physical_basis(xi, eta, hx, hy)
    x, y = x0 + xi * hx, y0 + eta * hy
    np.testing.assert_allclose(pb.n @ dofs, g(x, y)[0], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(pb.dx @ dofs, g(x, y)[1], rtol=1e-12, atol=1e-13)


def test_cubic_times_quadratic_relative():
    rng = np.random.default_rng(1)
    g = monomial(3, 2)
    x0, y0, h = 0.5, 0.375, 0.125
    dofs = interpolate_element(g, x0, y0, h, h)
    xi, eta = rng.uniform(0.01, 0.99, (2, 20))
    exact = g(x0 + xi * h, y0 + eta * h)[0]
    got = physical_basis(xi, eta, h, h).n @ dofs
    assert np.max(np.abs(got - exact) / np.abs(exact)) <= 1e-12


def test_scaling_identity():
    np.testing.assert_array_equal(physical_scaling(1.0, 1.0), np.ones(16))
    s = physical_scaling(0.5, 0.25)
    np.testing.assert_allclose(s[:4], [1, 0.5, 0.25, 0.125])
    with pytest.raises(ValueError):
        physical_scaling(0.0, 1.0)


def test_linear_reproduction_on_small_element():
    space = make_space(build_uniform(8, 8))
    c = interpolate(space, lambda x, y: (x, 1.0, 0.0, 0.0))
    dofs = c.reshape(-1, 4)
    np.testing.assert_array_equal(dofs[:, DofKind.DX], 1.0)
    np.testing.assert_array_equal(dofs[:, DofKind.DY], 0.0)
    np.testing.assert_array_equal(dofs[:, DofKind.DXY], 0.0)
    x, y = np.random.default_rng(2).random((2, 30))
    np.testing.assert_allclose(DiscreteField(space, c)(x, y), x, atol=1e-15)


def test_interpolation_of_bump_accuracy():
    bump = lambda t: t**2 * (t - 1) ** 2
    dbump = lambda t: 2 * t * (t - 1) * (2 * t - 1)
    space = make_space(build_uniform(8, 8))
    c = interpolate(space, lambda x, y: (bump(x) * bump(y), dbump(x) * bump(y),
                                         bump(x) * dbump(y), dbump(x) * dbump(y)))
    got = DiscreteField(space, c)(0.3, 0.7)
    assert abs(got - bump(0.3) * bump(0.7)) <= 1e-4


def test_second_derivative_matches_fd():
    rng = np.random.default_rng(3)
    step = 1e-5
    for xi, eta in rng.uniform(0.1, 0.9, (10, 2)):
        b = shape_eval(xi, eta)
        fd = (shape_eval(xi + step, eta).dxi - shape_eval(xi - step, eta).dxi) / (2 * step)
        fd_mixed = (shape_eval(xi, eta + step).dxi - shape_eval(xi, eta - step).dxi) / (2 * step)
        fd_yy = (shape_eval(xi, eta + step).deta - shape_eval(xi, eta - step).deta) / (2 * step)
        scale = np.maximum(np.abs(b.dxixi), 1.0)
        assert np.max(np.abs(fd - b.dxixi) / scale) <= 1e-6
        assert np.max(np.abs(fd_mixed - b.dxieta) / np.maximum(np.abs(b.dxieta), 1)) <= 1e-6
        assert np.max(np.abs(fd_yy - b.detaeta) / np.maximum(np.abs(b.detaeta), 1)) <= 1e-6


def _local_eval(field, el, x, y):
    space = field.space
    h = space.mesh.hx
    origin = space.mesh.element_origin()[el]
    pb = physical_basis((x - origin[:, 0]) / h, (y - origin[:, 1]) / h, h, h)
    c = field.coeffs[space.elem_dofs[el]]
    return [np.einsum("ij,ij->i", arr, c) for arr in (pb.n, pb.dx, pb.dy, pb.dxy)]


def test_global_field_is_c1():
    rng = np.random.default_rng(4)
    space = make_space(build_uniform(4, 4))
    field = DiscreteField(space, rng.standard_normal(space.n_dofs))
    t = rng.random(10)
    j = np.minimum((t * 4).astype(int), 3)
    # vertical edge x = 0.5 between element columns 1 and 2
    x, y = np.full(10, 0.5), t
    left = _local_eval(field, j * 4 + 1, x, y)
    right = _local_eval(field, j * 4 + 2, x, y)
    # horizontal edge y = 0.25 between element rows 0 and 1
    below = _local_eval(field, j, t, np.full(10, 0.25))
    above = _local_eval(field, 4 + j, t, np.full(10, 0.25))
    for a, b in [*zip(left, right), *zip(below, above)]:
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_gauss_midpoint():
    r = gauss_rule(1)
    np.testing.assert_allclose(r.points, [[0.5, 0.5]])
    np.testing.assert_allclose(r.weights, [1.0])


def test_gauss_exactness_and_weights():
    r = gauss_rule(4)
    x, y = r.points.T
    assert abs(np.sum(r.weights * x**7 * y**7) - 1 / 64) <= 1e-14
    assert abs(r.weights.sum() - 1) <= 1e-15
    assert np.all(r.weights > 0)


@pytest.mark.parametrize("n", [0, 11, 2.5])
def test_gauss_rejects(n):
    with pytest.raises(ValueError):
        gauss_rule(n)


@pytest.mark.parametrize("n", range(1, 11))
def test_gauss_degree(n):
    r = gauss_rule(n)
    x, y = r.points.T
    d = 2 * n - 1
    assert np.sum(r.weights * x**d * y**d) == pytest.approx(1 / (d + 1) ** 2, rel=1e-13)
