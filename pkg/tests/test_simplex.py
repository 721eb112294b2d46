"""Equality-form LP solver checked against an independent reference.

scipy is used here as the oracle only; the library itself never imports it,
which is what makes this comparison meaningful.
"""

import numpy as np
import pytest
from scipy.optimize import linprog

import resourcedyn.simplex as simplex
from resourcedyn.simplex import SimplexResult, minimize_l1, solve_equality_lp


def battery_program(rng, trial):
    """One random equality-form program; the four kinds cycle through
    generic, degenerate-rhs, redundant-row, and arbitrary-rhs shapes."""
    m = int(rng.integers(2, 12))
    n = int(rng.integers(m, 40))
    A = rng.integers(-2, 3, size=(m, n)).astype(float)
    kind = trial % 4
    if kind == 0:
        b = A @ np.abs(rng.normal(size=n))
    elif kind == 1:
        x0 = np.zeros(n)
        x0[rng.choice(n, size=max(1, n // 6), replace=False)] = 1.0
        b = A @ x0
    elif kind == 2:
        A[m - 1] = A[0] + A[1 % m]
        b = A @ np.abs(rng.normal(size=n))
    else:
        b = rng.normal(size=m)
    c = rng.integers(0, 3, size=n).astype(float)
    return A, b, c


class TestAgainstReference:
    def test_random_program_battery(self):
        rng = np.random.default_rng(7)
        for trial in range(60):
            A, b, c = battery_program(rng, trial)
            ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
            try:
                res = solve_equality_lp(A, b, c)
                outcome = "ok"
            except RuntimeError as exc:
                msg = str(exc)
                outcome = ("unbounded" if "unbounded" in msg
                           else "infeasible" if "infeasible" in msg
                           else "error")
            if ref.status == 0:
                assert outcome == "ok", (trial, outcome)
                assert abs(res.value - ref.fun) <= 1e-6 * (1 + abs(ref.fun)), \
                    (trial, res.value, ref.fun)
                assert res.x.min() >= -1e-9, trial
                assert np.abs(A @ res.x - b).max() < 1e-7, trial
            elif ref.status == 2:
                assert outcome == "infeasible", (trial, outcome)
            elif ref.status == 3:
                assert outcome == "unbounded", (trial, outcome)

    def test_wide_l1_column_generation(self):
        rng = np.random.default_rng(11)
        D = rng.integers(-1, 2, size=(40, 9000)).astype(float)
        b = D @ np.abs(rng.normal(size=9000) * (rng.random(9000) < 0.01))
        value, x = minimize_l1(D, b)
        ref = linprog(np.ones(18000), A_eq=np.hstack([D, -D]), b_eq=b,
                      bounds=(0, None), method="highs")
        assert abs(value - ref.fun) < 1e-7 * (1 + abs(ref.fun))
        assert np.abs(D @ x - b).max() < 1e-7
        assert abs(np.abs(x).sum() - value) < 1e-7


class TestSmallPrograms:
    def test_simple_exact_optimum(self):
        res = solve_equality_lp(np.array([[1.0, 1.0]]), np.array([1.0]),
                                np.array([1.0, 1.0]))
        assert isinstance(res, SimplexResult)
        assert abs(res.value - 1.0) < 1e-12

    def test_octahedron_l1(self):
        # min ||x||_1 subject to x1 + x2 + x3 = 2, x1 = x2
        D = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, 0.0]])
        value, x = minimize_l1(D, np.array([2.0, 0.0]))
        assert abs(value - 2.0) < 1e-9
        assert np.allclose(D @ x, [2.0, 0.0], atol=1e-9)
        assert abs(np.abs(x).sum() - value) < 1e-9

    def test_unbounded_raises(self):
        with pytest.raises(RuntimeError, match="unbounded"):
            solve_equality_lp(np.array([[1.0, -1.0]]), np.array([0.0]),
                              np.array([-1.0, 0.0]))

    def test_infeasible_raises(self):
        with pytest.raises(RuntimeError, match="infeasible"):
            solve_equality_lp(np.array([[1.0], [1.0]]), np.array([0.0, 1.0]),
                              np.array([1.0]))

    def test_negative_rhs_rows_handled(self):
        # same program as the exact optimum above with the row negated
        res = solve_equality_lp(np.array([[-1.0, -1.0]]), np.array([-1.0]),
                                np.array([2.0, 3.0]))
        assert abs(res.value - 2.0) < 1e-12

    def test_deterministic_replay(self):
        rng = np.random.default_rng(3)
        A = rng.integers(-2, 3, size=(6, 25)).astype(float)
        b = A @ np.abs(rng.normal(size=25))
        c = rng.integers(0, 3, size=25).astype(float)
        first = solve_equality_lp(A, b, c)
        second = solve_equality_lp(A, b, c)
        assert first.value == second.value
        assert (first.x == second.x).all()

    def test_dimension_validation(self):
        with pytest.raises(ValueError):
            solve_equality_lp(np.ones((2, 3)), np.ones(3), np.ones(3))
        with pytest.raises(ValueError):
            solve_equality_lp(np.ones((2, 3)), np.ones(2), np.ones(4))
        with pytest.raises(ValueError):
            minimize_l1(np.ones((2, 3)), np.ones(3))


class TestColumnGenerationInternals:
    def test_forced_narrow_threshold_matches_direct(self, monkeypatch):
        rng = np.random.default_rng(5)
        D = rng.integers(-2, 3, size=(4, 30)).astype(float)
        x0 = np.zeros(30)
        x0[[3, 17, 26]] = (1.0, 2.0, 0.5)
        b = D @ x0
        direct_value, _ = minimize_l1(D, b)
        monkeypatch.setattr(simplex, "_CG_THRESHOLD", 8)
        monkeypatch.setattr(simplex, "_CG_INITIAL", 4)
        monkeypatch.setattr(simplex, "_CG_BATCH", 3)
        cg_value, cg_x = minimize_l1(D, b)
        assert abs(cg_value - direct_value) < 1e-9
        assert np.abs(D @ cg_x - b).max() < 1e-9

    def test_redundant_rows_fall_back_to_direct(self, monkeypatch):
        rng = np.random.default_rng(9)
        D = rng.integers(-2, 3, size=(4, 30)).astype(float)
        D[3] = D[0] + D[1]
        x0 = np.abs(rng.normal(size=30)) * (rng.random(30) < 0.2)
        b = D @ x0
        ref = linprog(np.ones(60), A_eq=np.hstack([D, -D]), b_eq=b,
                      bounds=(0, None), method="highs")
        monkeypatch.setattr(simplex, "_CG_THRESHOLD", 8)
        monkeypatch.setattr(simplex, "_CG_INITIAL", 4)
        monkeypatch.setattr(simplex, "_CG_BATCH", 3)
        value, x = minimize_l1(D, b)
        assert abs(value - ref.fun) < 1e-7 * (1 + abs(ref.fun))
        assert np.abs(D @ x - b).max() < 1e-7

    def test_round_exhaustion_raises(self, monkeypatch):
        monkeypatch.setattr(simplex, "_CG_THRESHOLD", 2)
        monkeypatch.setattr(simplex, "_CG_ROUNDS", 0)
        with pytest.raises(RuntimeError, match="column generation"):
            minimize_l1(np.eye(3), np.ones(3))
