import numpy as np
import pytest
import scipy.linalg

from rank1sense import (
    MeasurementEnsemble,
    RegressionProblem,
    build_design_matrix,
    build_design_matrix_naive,
    condition_number,
    evaluate,
    kappa_factors,
    make_ground_truth,
    sample_ensemble,
    solve_naive,
    solve_sensing_step,
    solve_sketched,
    thin_qr,
)
from rank1sense.errors import (
    DimensionMismatch,
    IllConditioned,
    InvalidParameter,
    NoConvergence,
    RankDeficient,
)
from rank1sense.regression import sketch_rows


def qr_lstsq(M, b):
    Q, R = np.linalg.qr(M)
    return scipy.linalg.solve_triangular(R, Q.T @ b)


def test_design_row_small():
    E = MeasurementEnsemble(np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]]))
    M = build_design_matrix(np.array([[1.0], [0.0]]), E)
    np.testing.assert_array_equal(M, [[3.0, 4.0]])


def test_design_zero_factor():
    E = sample_ensemble(3, 5, 0)
    assert not build_design_matrix(np.zeros((3, 2)), E).any()


def test_design_matches_dense_construction(rng):
    E = sample_ensemble(4, 6, seed=1)
    U = rng.standard_normal((4, 2))
    np.testing.assert_allclose(build_design_matrix(U, E), build_design_matrix_naive(U, E),
                               rtol=1e-13, atol=1e-13)


def test_design_mismatch():
    with pytest.raises(DimensionMismatch):
        build_design_matrix(np.ones((3, 1)), sample_ensemble(4, 2, 0))


def test_structured_products_match_dense(rng):
    E = sample_ensemble(5, 40, seed=2)
    U = rng.standard_normal((5, 2))
    P = RegressionProblem.from_sensing(U, E, rng.standard_normal(40))
    v, r = rng.standard_normal(10), rng.standard_normal(40)
    np.testing.assert_allclose(P.matvec(v), P.M @ v, atol=1e-12)
    np.testing.assert_allclose(P.rmatvec(r), P.M.T @ r, atol=1e-12)


def test_naive_identity_and_consistent(rng):
    b = rng.standard_normal(4)
    np.testing.assert_allclose(solve_naive(RegressionProblem(np.eye(4), b, 2, 2)), b)
    M = rng.standard_normal((30, 6))
    v = rng.standard_normal(6)
    np.testing.assert_allclose(solve_naive(RegressionProblem(M, M @ v, 3, 2)), v, atol=1e-9)


def test_naive_matches_qr(rng):
    M, b = rng.standard_normal((60, 20)), rng.standard_normal(60)
    np.testing.assert_allclose(solve_naive(RegressionProblem(M, b, 10, 2)), qr_lstsq(M, b),
                               rtol=1e-8, atol=1e-10)


def test_naive_singular():
    M = np.ones((10, 2))
    with pytest.raises(IllConditioned):
        solve_naive(RegressionProblem(M, np.ones(10), 2, 1))


def test_sketched_consistent(rng):
    M = rng.standard_normal((400, 20))
    b = M @ rng.standard_normal(20)
    v = solve_sketched(RegressionProblem(M, b, 10, 2), eps=1e-6, seed=1)
    assert np.linalg.norm(M @ v - b) <= 1e-8 * np.linalg.norm(b)


def test_sketched_near_naive_and_deterministic(rng):
    E = sample_ensemble(20, 800, seed=5)
    U, _ = thin_qr(rng.standard_normal((20, 2)))
    P = RegressionProblem.from_sensing(U, E, rng.standard_normal(800))
    v1, info = solve_sketched(P, eps=1e-6, delta=0.01, seed=9, return_info=True)
    v2 = solve_sketched(P, eps=1e-6, delta=0.01, seed=9)
    np.testing.assert_array_equal(v1, v2)
    assert P.residual(v1) <= (1 + 1e-6) * P.residual(solve_naive(P))
    assert info.sketch_rows == sketch_rows(40, 800, 0.01)
    assert info.cond_estimate < 10


def test_sketched_gaussian_sketch(rng):
    M, b = rng.standard_normal((300, 10)), rng.standard_normal(300)
    P = RegressionProblem(M, b, 5, 2)
    v = solve_sketched(P, sketch="gaussian", seed=0)
    assert P.residual(v) <= (1 + 1e-6) * P.residual(qr_lstsq(M, b))


def test_sketched_iteration_cap(rng):
    M, b = rng.standard_normal((300, 10)), rng.standard_normal(300)
    with pytest.raises(NoConvergence):
        solve_sketched(RegressionProblem(M, b, 5, 2), eps=1e-12, max_iter=0)


def test_sketched_parameter_checks(rng):
    P = RegressionProblem(rng.standard_normal((30, 20)), np.ones(30), 10, 2)
    with pytest.raises(InvalidParameter):
        solve_sketched(P)
    with pytest.raises(InvalidParameter):
        solve_sketched(RegressionProblem(np.eye(4), np.ones(4), 2, 2), eps=0.0)


def test_sketch_rows_clamped():
    assert sketch_rows(40, 100, 0.01) == 100
    assert sketch_rows(40, 10**6, 0.01) == int(np.ceil(0.5 * 40 * np.log(40 / 0.01)))
    assert sketch_rows(1, 10**6, 0.9) == 2


def test_condition_number():
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((7, 3)))
    assert condition_number(Q) == pytest.approx(1.0)
    assert condition_number(np.diag([4.0, 1.0])) == pytest.approx(4.0)
    with pytest.raises(RankDeficient):
        condition_number(np.ones((3, 2)))


def test_kappa_factors_components(rng):
    E = sample_ensemble(6, 200, seed=3)
    U, _ = thin_qr(rng.standard_normal((6, 2)))
    kM, kXU, kY = kappa_factors(U, E)
    assert kM == pytest.approx(condition_number(build_design_matrix(U, E)))
    assert kXU == pytest.approx(condition_number(E.X @ U))
    assert kY == pytest.approx(condition_number(E.Y))
    # The row-wise product does not inherit the Kronecker bound; this draw exceeds it.
    assert kM > kXU * kY


def test_step_recovers_closed_form():
    G = make_ground_truth(6, 2, 3.0, seed=1)
    E = sample_ensemble(6, 200, seed=4)
    b = evaluate(G.W, E)
    for method in ("naive", "sketched"):
        V_hat = solve_sensing_step(G.U, E, b, method=method, seed=2)
        np.testing.assert_allclose(V_hat, G.W.T @ G.U, atol=1e-7)


def test_step_zero_measurements(rng):
    E = sample_ensemble(5, 50, seed=4)
    U, _ = thin_qr(rng.standard_normal((5, 2)))
    np.testing.assert_allclose(solve_sensing_step(U, E, np.zeros(50)), 0.0, atol=1e-15)
    with pytest.raises(InvalidParameter):
        solve_sensing_step(U, E, np.zeros(50), method="bogus")
