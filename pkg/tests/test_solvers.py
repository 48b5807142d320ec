import math

import numpy as np
import pytest

from twolevel_sf.assembly import zero_force
from twolevel_sf.mesh import build_uniform
from twolevel_sf.problems import CavityProblem, ManufacturedProblem, error_norms
from twolevel_sf.solvers import (
    ElementKind,
    NewtonConfig,
    NewtonError,
    TwoLevelConfig,
    prolongate,
    scaling_h_for_H,
    scaling_lhs,
    solve_one_level,
    solve_two_level,
)
from twolevel_sf.space import ClampedHomogeneous, DiscreteField, interpolate, make_space
from twolevel_sf.sparse import SolverConfig


@pytest.fixture(scope="module")
def problem():
    return ManufacturedProblem(10.0)


def test_zero_force_gives_zero(problem):
    space = make_space(build_uniform(4, 4), ClampedHomogeneous())
    psi, stats = solve_one_level(space, 10.0, zero_force)
    assert np.all(psi == 0)
    assert stats.newton_iters == 1


def test_loose_tolerance_newton_count(problem):
    space = make_space(build_uniform(8, 8), problem.bc)
    _, stats = solve_one_level(space, 10.0, problem.force, NewtonConfig(tol=1e-3))
    assert 1 <= stats.newton_iters <= 5
    assert len(stats.bicgstab_iters_coarse) == stats.newton_iters


def test_tight_tolerance_residual(problem):
    space = make_space(build_uniform(8, 8), problem.bc)
    psi, stats = solve_one_level(space, 10.0, problem.force, NewtonConfig(tol=1e-10))
    assert stats.residual <= 1e-10
    assert stats.step_history[-1] <= 1e-10
    hist = stats.residual_history
    assert all(b < a for a, b in zip(hist, hist[1:]))
    err = error_norms(DiscreteField(space, psi), problem)
    assert err.h2 == pytest.approx(7.911e-4, rel=1e-3)


def test_zero_initial_guess_converges(problem):
    space = make_space(build_uniform(4, 4), problem.bc)
    cfg = NewtonConfig(tol=1e-10, initial_guess="zero")
    psi0, s0 = solve_one_level(space, 10.0, problem.force, cfg)
    psi1, _ = solve_one_level(space, 10.0, problem.force, NewtonConfig(tol=1e-10))
    assert s0.bicgstab_iters_initial == []
    np.testing.assert_allclose(psi0, psi1, atol=1e-12)


def test_newton_failure_carries_best(problem):
    space = make_space(build_uniform(4, 4), problem.bc)
    with pytest.raises(NewtonError) as err:
        solve_one_level(space, 10.0, problem.force, NewtonConfig(tol=1e-30, max_newton=2))
    assert err.value.best.shape == (space.n_dofs,)
    assert len(err.value.history) == 3


def test_max_step_safeguard(problem):
    space = make_space(build_uniform(4, 4), problem.bc)
    with pytest.raises(NewtonError, match="too large"):
        solve_one_level(space, 10.0, problem.force,
                        NewtonConfig(tol=1e-10, initial_guess="zero", max_step=1e-12))


def test_continuation_matches_direct(problem):
    space = make_space(build_uniform(4, 4), problem.bc)
    direct, _ = solve_one_level(space, 100.0, problem.force, NewtonConfig(tol=1e-11))
    ramped, stats = solve_one_level(space, 100.0, problem.force,
                                    NewtonConfig(tol=1e-11, continuation=(10.0, 50.0, 100.0)))
    np.testing.assert_allclose(ramped, direct, atol=1e-10)
    assert stats.newton_iters >= 3


def test_newton_config_validation():
    with pytest.raises(ValueError):
        NewtonConfig(tol=0)
    with pytest.raises(ValueError):
        NewtonConfig(continuation=(10.0, 5.0))
    with pytest.raises(ValueError):
        NewtonConfig(initial_guess="oseen")


def test_two_level_structure(problem):
    cfg = TwoLevelConfig(4, newton=NewtonConfig(tol=1e-3))
    psi, stats, coarse = solve_two_level(cfg, 10.0, problem.force, problem.bc)
    assert stats.fine_newton_iters == 0
    assert stats.fine_linear_solves == 1
    assert len(stats.bicgstab_iters_fine) == 1
    assert stats.free_dofs == {"coarse": 36, "fine": 196}
    assert (stats.coarse_h, stats.fine_h) == (0.25, 0.125)
    assert coarse.space.mesh.nx == 4 and psi.shape == (4 * 81,)


def test_two_level_fine_never_assembles_residual(problem, monkeypatch):
    import twolevel_sf.solvers as solvers

    calls = []
    real = solvers.NavierStokesOperator.residual

    def spy(self, psi):
        calls.append(self.space.mesh.nx)
        return real(self, psi)

    monkeypatch.setattr(solvers.NavierStokesOperator, "residual", spy)
    solve_two_level(TwoLevelConfig(4), 10.0, problem.force, problem.bc)
    assert calls and set(calls) == {4}


def test_two_level_same_mesh_identity(problem):
    lin = SolverConfig(rel_tol=1e-10)
    newton = NewtonConfig(tol=1e-11)
    space = make_space(build_uniform(6, 6), problem.bc)
    one, _ = solve_one_level(space, 10.0, problem.force, newton, lin)
    two, stats, _ = solve_two_level(TwoLevelConfig(6, 6, newton, lin), 10.0,
                                    problem.force, problem.bc)
    assert np.linalg.norm(space.restrict(one - two)) <= 10 * lin.rel_tol
    assert stats.fine_newton_iters == 0


def test_two_level_config_checks():
    with pytest.raises(ValueError):
        TwoLevelConfig(4, 6)
    assert TwoLevelConfig(5).fine_n == 10


@pytest.mark.parametrize("coarse_n,fine_n", [(2, 4), (4, 8), (3, 12)])
def test_prolongation_exact(coarse_n, fine_n):
    rng = np.random.default_rng(coarse_n)
    coarse_space = make_space(build_uniform(coarse_n, coarse_n))
    fine_space = make_space(build_uniform(fine_n, fine_n))
    coarse = DiscreteField(coarse_space, rng.standard_normal(coarse_space.n_dofs))
    fine = DiscreteField(fine_space, prolongate(coarse, fine_space))
    x, y = rng.random((2, 50))
    a, b = coarse.evaluate(x, y), fine.evaluate(x, y)
    for k in ("value", "dx", "dy"):
        np.testing.assert_allclose(getattr(a, k), getattr(b, k), atol=1e-12)


def test_prolongation_of_xy():
    coarse_space = make_space(build_uniform(2, 2))
    fine_space = make_space(build_uniform(4, 4))
    coarse = DiscreteField(coarse_space, interpolate(coarse_space, lambda x, y: (x * y, y, x, 1.0)))
    fine = DiscreteField(fine_space, prolongate(coarse, fine_space))
    x, y = np.random.default_rng(9).random((2, 20))
    assert np.max(np.abs(fine(x, y) - coarse(x, y))) <= 1e-13


def test_prolongation_zero_and_nesting():
    coarse_space = make_space(build_uniform(3, 3))
    fine_space = make_space(build_uniform(6, 6))
    zero = prolongate(DiscreteField(coarse_space, np.zeros(coarse_space.n_dofs)), fine_space)
    assert np.all(zero == 0)
    with pytest.raises(ValueError):
        prolongate(DiscreteField(coarse_space, np.zeros(coarse_space.n_dofs)),
                   make_space(build_uniform(4, 4)))


def test_scaling_exponents():
    assert ElementKind.ARGYRIS.exponent == 2.5
    for k in (ElementKind.CLOUGH_TOCHER, ElementKind.BOGNER_FOX_SCHMIT,
              ElementKind.BICUBIC_SPLINE):
        assert k.exponent == 1.5


def test_scaling_bfs_quarter():
    h = scaling_h_for_H(ElementKind.BOGNER_FOX_SCHMIT, 0.25)
    assert abs(scaling_lhs(h) - 0.125) <= 1e-12
    assert 0 < h <= 0.25


def test_scaling_argyris_finer():
    assert (scaling_h_for_H(ElementKind.ARGYRIS, 1 / 8)
            < scaling_h_for_H(ElementKind.CLOUGH_TOCHER, 1 / 8))


@pytest.mark.parametrize("H", [0.5, 0.3, 0.25, 0.1, 1 / 16, 1e-3])
@pytest.mark.parametrize("kind", list(ElementKind))
def test_scaling_h_below_H(kind, H):
    h = scaling_h_for_H(kind, H)
    assert h <= H
    assert abs(scaling_lhs(h) - H ** kind.exponent) <= 1e-12


def test_scaling_large_H_still_solves():
    h = scaling_h_for_H(ElementKind.BOGNER_FOX_SCHMIT, 0.9)
    assert abs(scaling_lhs(h) - 0.9 ** 1.5) <= 1e-12


@pytest.mark.parametrize("H", [1.0, 2.0, 0.0, -0.5])
def test_scaling_rejects(H):
    with pytest.raises(ValueError):
        scaling_h_for_H(ElementKind.ARGYRIS, H)


def test_cavity_lid_imposed():
    cav = CavityProblem(10.0)
    psi, stats, _ = solve_two_level(TwoLevelConfig(4), 10.0, cav.force, cav.bc)
    space = make_space(build_uniform(8, 8), cav.bc)
    field = DiscreteField(space, psi)
    assert field.evaluate(0.5, 1.0).dy == pytest.approx(1.0, abs=1e-14)
    assert field.evaluate(0.5, 0.0).dy == pytest.approx(0.0, abs=1e-14)
    assert math.isfinite(stats.residual)
