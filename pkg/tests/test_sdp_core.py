"""Solver unit tests: oracles are eigenvalue identities and hand-built LPs."""

import os
import tempfile

import numpy as np
import pytest

from isacsim.errors import ValidationError
from isacsim.sdp_core import (
    Constraint,
    SdpProblem,
    SolverOptions,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    check_residuals,
    dump_problem,
    load_problem,
    realify,
    solve,
    _embed,
)


def random_hermitian(rng, n, real=False):
    a = rng.standard_normal((n, n))
    if not real:
        a = a + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2.0


def lambda_max_problem(c):
    n = c.shape[0]
    return SdpProblem(
        blocks=[("X", n)],
        scalars=[],
        objective_matrices={"X": c},
        objective_scalars={},
        sense="maximize",
        constraints=[Constraint({"X": np.eye(n)}, {}, 1.0, "==", "trace")],
    )


def test_lambda_max_diagonal():
    c = np.diag([3.0, -1.0, 0.5])
    sol = solve(lambda_max_problem(c))
    assert sol.status == STATUS_OPTIMAL
    assert abs(sol.objective - 3.0) < 1e-6
    assert sol.duality_gap < 1e-5


def test_lambda_max_random_hermitian():
    rng = np.random.default_rng(7)
    opts = SolverOptions(gap_tol=1e-9, feas_tol=1e-9)
    for trial in range(12):
        n = int(rng.integers(2, 9))
        c = random_hermitian(rng, n, real=bool(trial % 2))
        sol = solve(lambda_max_problem(c), opts)
        lam = float(np.linalg.eigvalsh(c)[-1])
        assert sol.status == STATUS_OPTIMAL, f"trial {trial}: {sol.status}"
        assert abs(sol.objective - lam) < 1e-6, f"trial {trial}: {sol.objective} vs {lam}"
        assert sol.duality_gap < 1e-6


def test_embedding_doubles_eigenvalues():
    rng = np.random.default_rng(21)
    for _ in range(20):
        n = int(rng.integers(1, 7))
        h = random_hermitian(rng, n)
        eh = np.linalg.eigvalsh(h)
        ee = np.linalg.eigvalsh(_embed(h))
        assert np.allclose(np.repeat(np.sort(eh), 2), np.sort(ee), atol=1e-10)


def test_embedding_preserves_inner_products():
    rng = np.random.default_rng(22)
    for _ in range(20):
        n = int(rng.integers(1, 7))
        a = random_hermitian(rng, n)
        x = random_hermitian(rng, n)
        lhs = float(np.sum((_embed(a) / 2.0) * _embed(x)))
        rhs = float(np.real(np.trace(a @ x)))
        assert abs(lhs - rhs) < 1e-10 * (1 + abs(rhs))


def test_realify_shapes_and_values():
    rng = np.random.default_rng(23)
    c = random_hermitian(rng, 3)
    prob = lambda_max_problem(c)
    rp = realify(prob)
    assert rp.blocks == [("X", 6)]
    assert rp.objective_matrices["X"].shape == (6, 6)
    assert np.max(np.abs(rp.objective_matrices["X"].imag)) == 0.0


def test_lp_with_scalars_and_mixed_senses():
    # maximize 3*x11 + t subject to tr(X) + t <= 2, t <= 1
    prob = SdpProblem(
        blocks=[("X", 2)],
        scalars=["t"],
        objective_matrices={"X": np.diag([3.0, 0.0])},
        objective_scalars={"t": 1.0},
        sense="maximize",
        constraints=[
            Constraint({"X": np.eye(2)}, {"t": 1.0}, 2.0, "<=", "budget"),
            Constraint({}, {"t": 1.0}, 1.0, "<=", "cap"),
        ],
    )
    sol = solve(prob)
    assert sol.status == STATUS_OPTIMAL
    assert abs(sol.objective - 6.0) < 1e-5
    assert sol.scalar_values["t"] < 1e-5
    assert abs(sol.block_values["X"][0, 0].real - 2.0) < 1e-5


def test_ge_constraint_binds():
    # minimize tr(X) subject to x11 >= 4
    e11 = np.zeros((2, 2))
    e11[0, 0] = 1.0
    prob = SdpProblem(
        blocks=[("X", 2)],
        scalars=[],
        objective_matrices={"X": np.eye(2)},
        objective_scalars={},
        sense="minimize",
        constraints=[Constraint({"X": e11}, {}, 4.0, ">=", "floor")],
    )
    sol = solve(prob)
    assert sol.status == STATUS_OPTIMAL
    assert abs(sol.objective - 4.0) < 1e-5


def test_infeasible_pair_detected():
    prob = SdpProblem(
        blocks=[("X", 2)],
        scalars=[],
        objective_matrices={"X": np.eye(2)},
        objective_scalars={},
        sense="maximize",
        constraints=[
            Constraint({"X": np.eye(2)}, {}, 1.0, "<=", "ub"),
            Constraint({"X": np.eye(2)}, {}, 3.0, ">=", "lb"),
        ],
    )
    sol = solve(prob, SolverOptions(max_iterations=200))
    assert sol.status == STATUS_INFEASIBLE, sol.status
    assert sol.status != STATUS_OPTIMAL


def test_scale_covariance():
    rng = np.random.default_rng(31)
    c = random_hermitian(rng, 4)
    base = solve(lambda_max_problem(c))
    scaled_prob = lambda_max_problem(1e6 * c)
    scaled_prob.constraints[0] = Constraint({"X": np.eye(4)}, {}, 1e-3, "==", "trace")
    sol = solve(scaled_prob)
    # objective scales by 1e6 * 1e-3 = 1e3
    assert base.status == STATUS_OPTIMAL and sol.status == STATUS_OPTIMAL
    assert abs(sol.objective - 1e3 * base.objective) < 1e-3 * (1 + abs(1e3 * base.objective))


def test_merit_history_non_increasing_on_feasible():
    rng = np.random.default_rng(41)
    for trial in range(5):
        c = random_hermitian(rng, 5)
        sol = solve(lambda_max_problem(c))
        assert sol.status == STATUS_OPTIMAL
        hist = sol.info["merit_history"]
        slack = 1e-10 * (1 + hist[0])  # matches the solver's fp acceptance floors
        for a, b in zip(hist, hist[1:]):
            assert b <= a + slack, f"trial {trial}: merit rose {a} -> {b}"


def test_solution_invariants_when_optimal():
    rng = np.random.default_rng(51)
    c = random_hermitian(rng, 6)
    sol = solve(lambda_max_problem(c))
    assert sol.status == STATUS_OPTIMAL
    x = sol.block_values["X"]
    assert np.max(np.abs(x - x.conj().T)) < 1e-10
    tr = float(np.real(np.trace(x)))
    assert float(np.linalg.eigvalsh(x)[0]) >= -1e-8 * (1 + abs(tr))
    rep = check_residuals(lambda_max_problem(c), sol)
    assert rep.max_violation <= 1e-6
    assert abs(rep.objective - sol.objective) < 1e-12 * (1 + abs(sol.objective))


def test_check_residuals_signs():
    prob = SdpProblem(
        blocks=[("X", 2)],
        scalars=["t"],
        objective_matrices={"X": np.eye(2)},
        objective_scalars={},
        sense="maximize",
        constraints=[
            Constraint({"X": np.eye(2)}, {}, 1.0, "<=", "ub"),
            Constraint({}, {"t": 1.0}, 2.0, ">=", "lb"),
            Constraint({"X": np.eye(2)}, {"t": 1.0}, 3.0, "==", "eq"),
        ],
    )
    from isacsim.sdp_core import SdpSolution

    sol = SdpSolution(
        block_values={"X": np.eye(2, dtype=complex)},  # tr = 2
        scalar_values={"t": 1.0},
        objective=2.0,
        status=STATUS_OPTIMAL,
        duality_gap=0.0,
        residuals=np.zeros(3),
        iterations=0,
    )
    rep = check_residuals(prob, sol)
    # tr(X)=2 violates ub by 1; t=1 misses lb by 1; eq lhs=3 holds
    assert abs(rep.violations[0] - 1.0) < 1e-12
    assert abs(rep.violations[1] - 1.0) < 1e-12
    assert abs(rep.violations[2]) < 1e-12
    assert abs(rep.max_violation - 0.5) < 1e-12  # 1 / (1 + |rhs=1|)
    assert rep.min_eigenvalues["X"] == pytest.approx(1.0)


def test_validation_rejects_bad_input():
    with pytest.raises(ValidationError):
        SdpProblem([], [], {}, {}, "maximize", []).validate()
    with pytest.raises(ValidationError):
        SdpProblem([("X", 2), ("X", 3)], [], {}, {}, "maximize", []).validate()
    bad = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValidationError):
        SdpProblem(
            [("X", 2)], [], {"X": bad}, {}, "maximize", []
        ).validate()
    with pytest.raises(ValidationError):
        SdpProblem(
            [("X", 2)], [], {"X": np.eye(2)}, {"nope": 1.0}, "maximize", []
        ).validate()
    with pytest.raises(ValidationError):
        SdpProblem(
            [("X", 2)], [], {"X": np.eye(2)}, {}, "maximize",
            [Constraint({"X": np.eye(2)}, {}, 1.0, "=<", "typo")],
        ).validate()


def test_dump_load_round_trip():
    rng = np.random.default_rng(61)
    c = random_hermitian(rng, 3)
    a = random_hermitian(rng, 3)
    prob = SdpProblem(
        blocks=[("X", 3)],
        scalars=["t"],
        objective_matrices={"X": c},
        objective_scalars={"t": -0.5},
        sense="maximize",
        constraints=[
            Constraint({"X": np.eye(3)}, {"t": 2.0}, 1.0, "==", "trace"),
            Constraint({"X": a}, {}, 0.25, "<=", "side"),
        ],
    )
    with tempfile.TemporaryDirectory() as td:
        path = os.path.join(td, "prob.sdpdump")
        dump_problem(prob, path)
        back = load_problem(path)
    assert back.sense == prob.sense
    assert back.blocks == prob.blocks
    assert back.scalars == prob.scalars
    assert np.allclose(back.objective_matrices["X"], c)
    assert back.objective_scalars["t"] == -0.5
    assert len(back.constraints) == 2
    assert back.constraints[0].sense == "==" and back.constraints[0].tag == "trace"
    assert np.allclose(back.constraints[1].matrix_terms["X"], a)
    s1 = solve(prob)
    s2 = solve(back)
    assert abs(s1.objective - s2.objective) < 1e-9 * (1 + abs(s1.objective))


def test_multi_block_coupling():
    # maximize tr(B) subject to tr(A) + tr(B) <= 1 and tr(A) - tr(B) == 0
    # forces tr(A) = tr(B) = 1/2
    prob = SdpProblem(
        blocks=[("A", 2), ("B", 3)],
        scalars=[],
        objective_matrices={"B": np.eye(3)},
        objective_scalars={},
        sense="maximize",
        constraints=[
            Constraint({"A": np.eye(2), "B": np.eye(3)}, {}, 1.0, "<=", "sum"),
            Constraint({"A": np.eye(2), "B": -np.eye(3)}, {}, 0.0, "==", "balance"),
        ],
    )
    sol = solve(prob)
    assert sol.status == STATUS_OPTIMAL
    assert abs(sol.objective - 0.5) < 1e-5
    assert abs(np.real(np.trace(sol.block_values["A"])) - 0.5) < 1e-5


def test_deterministic_repeat():
    rng = np.random.default_rng(71)
    c = random_hermitian(rng, 5)
    s1 = solve(lambda_max_problem(c))
    s2 = solve(lambda_max_problem(c))
    assert s1.objective == s2.objective
    assert s1.iterations == s2.iterations
    assert np.array_equal(s1.block_values["X"], s2.block_values["X"])
