import math

import numpy as np
import pytest

from linetension.envelope import AlphaSet, alpha_program, pair2d_objective
from linetension.optim import (
    AffineFeasibleSet,
    SolverOptions,
    eliminate_constraints,
    grid_oracle,
    minimize_multistart,
    nelder_mead,
    pattern_search,
)

FAST = SolverOptions(restarts=6, seed=0)


class TestEliminateConstraints:
    def test_single_row(self):
        fs = eliminate_constraints([[1.0, 1.0]], [1.0])
        assert np.allclose(fs.particular, [0.5, 0.5], atol=1e-12)
        assert fs.basis.shape == (2, 1)
        direction = fs.basis[:, 0]
        assert np.allclose(np.abs(direction), [1, 1] / np.sqrt(2), atol=1e-12)

    def test_full_rank_square(self):
        fs = eliminate_constraints([[2.0, 0.0], [0.0, 4.0]], [2.0, 8.0])
        assert fs.dim == 0
        assert np.allclose(fs.particular, [1.0, 2.0], atol=1e-12)

    def test_inconsistent_rejected(self):
        with pytest.raises(ValueError, match="residual"):
            eliminate_constraints([[1.0, 0.0], [1.0, 0.0]], [0.0, 1.0])

    def test_moment_constraint_nullspace_dimension(self):
        # 4 scalar equations on 8 unknowns, full rank: 4-dimensional nullspace.
        _, _, feasible, _ = alpha_program((1, 1), (0.0, 1.0), 1.0, AlphaSet.small(2))
        assert feasible.particular.size == 8
        assert feasible.dim == 4

    def test_orthonormal_basis_and_feasibility(self):
        _, _, fs, _ = alpha_program((2, 1), (0.6, 0.8), 1.0, AlphaSet.small(2))
        gram = fs.basis.T @ fs.basis
        assert np.allclose(gram, np.eye(fs.dim), atol=1e-12)
        rng = np.random.default_rng(0)
        for _ in range(10):
            x = fs.point(rng.uniform(-2, 2, fs.dim))
            assert fs.residual_check(x) <= 1e-10


class TestMinimizeMultistart:
    def test_convex_quadratic(self):
        target = np.array([0.3, -1.2, 0.7])
        f = lambda x: float(sum((xi - ti) ** 2 for xi, ti in zip(x, target)))
        rep = minimize_multistart(f, AffineFeasibleSet.unconstrained(3), FAST)
        assert rep.best_value == pytest.approx(0.0, abs=1e-8)
        assert np.allclose(rep.best_point, target, atol=1e-4)
        assert rep.converged

    def test_kinked_objective(self):
        f = lambda x: sum(abs(v) for v in x)
        rep = minimize_multistart(f, AffineFeasibleSet.unconstrained(2), FAST)
        assert rep.best_value <= 1e-8

    def test_determinism(self):
        obj, _ = pair2d_objective((0.0, 1.0), 1.0)
        opts = SolverOptions(restarts=8, seed=42)
        a = minimize_multistart(obj, AffineFeasibleSet.unconstrained(2), opts)
        b = minimize_multistart(obj, AffineFeasibleSet.unconstrained(2), opts)
        assert a.best_value == b.best_value
        assert np.array_equal(a.best_point, b.best_point)
        assert a.final_step == b.final_step

    def test_constrained_iterates_feasible(self):
        fs = eliminate_constraints([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]], [1.0, 2.0])
        f = lambda x: float(sum(v * v for v in x))
        rep = minimize_multistart(f, fs, FAST)
        assert fs.residual_check(rep.best_point) <= 1e-10

    def test_pair_objective_bound(self):
        obj, _ = pair2d_objective((0.0, 1.0), 1.0)
        rep = minimize_multistart(obj, AffineFeasibleSet.unconstrained(2), FAST)
        assert rep.best_value <= 2.9422


class TestLowLevel:
    def test_nelder_mead_quadratic(self):
        f = lambda x: (x[0] - 1.0) ** 2 + 4 * (x[1] + 0.5) ** 2
        x, fx, evals = nelder_mead(f, [0.0, 0.0], edge=0.25)
        assert fx < 1e-8
        assert evals > 0

    def test_pattern_search_refines(self):
        f = lambda x: abs(x[0] - 0.125)
        x, fx, _, step = pattern_search(f, [0.0], f([0.0]), step=0.5, final_step=1e-8)
        assert fx <= 1e-7
        assert step <= 1e-8


class TestGridOracle:
    def test_kink_location(self):
        rep = grid_oracle(lambda x: abs(x[0] - 0.37), [(-1, 1)], 0.01)
        assert rep.best_value <= 2e-3
        assert rep.best_point[0] == pytest.approx(0.37, abs=2e-3)

    def test_constant(self):
        rep = grid_oracle(lambda x: 4.2, [(-1, 1), (-1, 1)], 0.5)
        assert rep.best_value == 4.2

    def test_dimension_guard(self):
        with pytest.raises(ValueError, match="dimension"):
            grid_oracle(lambda x: 0.0, [(-1, 1)] * 7, 0.5)

    def test_never_beats_local_solver_by_much(self):
        # The local method must not lose to brute force beyond refinement error.
        for angle in (0.3, 1.0, 2.2):
            t = (math.cos(angle), math.sin(angle))
            obj, batch = pair2d_objective(t, 1.0)
            local = minimize_multistart(obj, AffineFeasibleSet.unconstrained(2), FAST)
            brute = grid_oracle(obj, [(-2, 2), (-2, 2)], 0.02, batch=batch)
            assert local.best_value <= brute.best_value + 1e-4
