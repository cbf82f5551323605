import math

import numpy as np
import pytest

from rank1sense import (
    MeasurementEnsemble,
    b_operators,
    build_block_matrices,
    check_all,
    evaluate,
    fourth_moment_check,
    g_operators,
    init_operator,
    make_ground_truth,
    orthogonal_complement,
    sample_ensemble,
    sample_size,
    shrinking_step_report,
    thin_qr,
    z_norm_check,
)
from rank1sense.errors import InvalidParameter, NotOrthogonal, NotUnit, SingularB
from rank1sense.experiments import perturbed_basis
from rank1sense.subspace import dist


def test_init_operator_single_pair():
    E = MeasurementEnsemble(np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]]))
    b = evaluate(np.eye(2), E)
    assert b[0] == 1.0
    np.testing.assert_array_equal(init_operator(E, b), [[1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_array_equal(init_operator(E, np.zeros(1)), 0.0)


def test_init_operator_is_mean_of_weighted_outer_products(rng):
    E = sample_ensemble(4, 7, seed=1)
    b = rng.standard_normal(7)
    expect = sum(b[i] * E.sensing_matrix(i) for i in range(7)) / 7
    np.testing.assert_allclose(init_operator(E, b), expect, atol=1e-14)


def test_b_operators_single_term(rng):
    E = sample_ensemble(3, 1, seed=2)
    u, v = np.eye(3)[0], np.eye(3)[2]
    Bx, By = b_operators(E, u, v)
    x, y = E.X[0], E.Y[0]
    np.testing.assert_allclose(Bx, (y @ v) ** 2 * np.outer(x, x))
    np.testing.assert_allclose(By, (x @ u) ** 2 * np.outer(y, y))


def test_b_operator_vanishes_for_orthogonal_probe(rng):
    v = np.array([0.0, 0.0, 1.0])
    Y = rng.standard_normal((10, 3))
    Y[:, 2] = 0.0
    E = MeasurementEnsemble(rng.standard_normal((10, 3)), Y)
    Bx, _ = b_operators(E, np.eye(3)[0], v)
    assert not Bx.any()


def test_g_operators_single_term_and_checks():
    E = sample_ensemble(3, 1, seed=5)
    e = np.eye(3)
    Gx, Gy = g_operators(E, e[0], e[1], e[1], e[2])
    x, y = E.X[0], E.Y[0]
    np.testing.assert_allclose(Gx, (y @ e[1]) * (y @ e[2]) * np.outer(x, x))
    np.testing.assert_allclose(Gy, (x @ e[0]) * (x @ e[1]) * np.outer(y, y))
    with pytest.raises(NotOrthogonal):
        g_operators(E, e[0], e[1], e[1], e[1])
    with pytest.raises(NotUnit):
        b_operators(E, 2 * e[0], e[1])


def test_sample_size_value_and_scaling():
    assert sample_size(0.1, 0.01, 100, 5) == math.ceil(100 * 125 * math.log(1e4))
    assert sample_size(0.1, 0.01, 100, 5) == 115130
    raw = lambda eps: eps ** -2 * 125 * math.log(1e4)
    assert raw(0.05) == pytest.approx(4 * raw(0.1))
    with pytest.raises(InvalidParameter):
        sample_size(0.0, 0.01, 10, 2)


def test_fourth_moment_scalar():
    emp, dev = fourth_moment_check(1, 1.0, 10**6, seed=1)
    assert emp[0, 0] == pytest.approx(3.0, rel=0.05)
    assert dev <= 0.05


def test_fourth_moment_scaled():
    emp, dev = fourth_moment_check(3, 2.0, 10**6, seed=2)
    np.testing.assert_allclose(np.diag(emp), 80.0, rtol=0.05)
    assert dev <= 0.05


def test_z_norms_match_dense(rng):
    G = make_ground_truth(5, 2, 2.0, seed=3)
    E = sample_ensemble(5, 20, seed=3)
    rep = z_norm_check(G, E)
    for i in range(20):
        x, y = E.X[i], E.Y[i]
        Z = np.outer(x, x) @ G.W @ np.outer(y, y)
        assert rep.norms[i] == pytest.approx(np.linalg.norm(Z, 2), rel=1e-10)
    assert rep.bound == pytest.approx(4 * G.sigma1)


def test_check_all_loose_and_strict():
    G = make_ground_truth(6, 2, 2.0, seed=0)
    Ei, Ep = sample_ensemble(6, 500, 0, 0), sample_ensemble(6, 500, 0, 1)
    assert check_all(G, Ei, Ep, eps=2.0, probes=3).all_passed
    rep = check_all(G, Ei, Ep, eps=0.0)
    assert not any(rep.passed.values())
    assert rep.to_dict()["all_passed"] is False


def test_block_matrices_at_truth():
    G = make_ground_truth(4, 2, 2.0, seed=1)
    E = sample_ensemble(4, 100, seed=1)
    blocks = build_block_matrices(G, G.U, E)
    np.testing.assert_allclose(blocks.D, np.eye(8), atol=1e-12)
    np.testing.assert_allclose(blocks.F, 0.0, atol=1e-10)
    assert blocks.block("B", 0, 1).shape == (4, 4)


def test_block_matrices_singular():
    G = make_ground_truth(4, 2, 2.0, seed=1)
    with pytest.raises(SingularB):
        build_block_matrices(G, G.U, sample_ensemble(4, 5, seed=1))


def test_shrinking_identities(rng):
    G = make_ground_truth(6, 2, 2.0, seed=2)
    U_t = perturbed_basis(G.U, 0.1, rng)
    assert 0 < dist(U_t, G.U) <= 0.1 + 1e-12
    rep = shrinking_step_report(G, U_t, sample_ensemble(6, 600, seed=2), eps=0.1)
    assert rep.f_identity_residual <= 1e-10
    assert rep.rewrite_residual <= 1e-8
    assert rep.bd_minus_c_bound == pytest.approx(0.1 * 2 * rep.dist_U)
    assert set(rep.to_dict()["checks"]) == set(rep.checks)


def test_shrinking_at_truth_vanishes():
    G = make_ground_truth(5, 2, 2.0, seed=3)
    rep = shrinking_step_report(G, G.U, sample_ensemble(5, 400, seed=3))
    assert rep.dist_U <= 1e-12
    assert rep.f_norm / G.sigma1 <= 1e-10


def test_orthogonal_complement(rng):
    Q, _ = thin_qr(rng.standard_normal((7, 3)))
    C = orthogonal_complement(Q)
    assert C.shape == (7, 4)
    np.testing.assert_allclose(np.hstack([Q, C]).T @ np.hstack([Q, C]), np.eye(7), atol=1e-12)
