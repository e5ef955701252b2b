import json

import numpy as np
import pytest

from conftest import identity_space, make_space
from discal.discrepancy import (
    CalibrationDataset,
    DiscrepancyParams,
    ThetaInnerProduct,
    design_matrix,
    evaluate,
    interpolate_min_norm,
)
from discal.errors import RankDeficiencyError, ShapeError


def random_theta(rng, n_u, n_z):
    return DiscrepancyParams(rng.standard_normal(n_u * (n_z + 1)), n_u, n_z)


def test_zero_parameters_give_zero_field():
    space = make_space(9)
    theta = DiscrepancyParams.zeros(9, 9)
    rng = np.random.default_rng(0)
    for _ in range(3):
        z = rng.standard_normal(9)
        np.testing.assert_allclose(evaluate(theta, z, space), 0.0, atol=1e-15)


def test_constant_operator():
    space = make_space(9)
    d = np.linspace(-1, 2, 9)
    theta = DiscrepancyParams.from_blocks(d, np.zeros((9, 9)))
    rng = np.random.default_rng(1)
    for _ in range(3):
        z = rng.standard_normal(9)
        np.testing.assert_allclose(evaluate(theta, z, space), d, atol=1e-15)


def test_evaluate_matches_dense_design_matrix():
    state = make_space(7)
    control = make_space(5)
    rng = np.random.default_rng(2)
    theta = random_theta(rng, 7, 5)
    z = rng.standard_normal(5)
    A = design_matrix(z[None, :], state, control)
    np.testing.assert_allclose(
        evaluate(theta, z, control), A @ theta.values, atol=1e-12
    )


def test_evaluate_bilinearity():
    control = make_space(6)
    rng = np.random.default_rng(3)
    t1 = random_theta(rng, 4, 6)
    t2 = random_theta(rng, 4, 6)
    z = rng.standard_normal(6)
    a, b = 1.7, -0.3
    combo = DiscrepancyParams(a * t1.values + b * t2.values, 4, 6)
    np.testing.assert_allclose(
        evaluate(combo, z, control),
        a * evaluate(t1, z, control) + b * evaluate(t2, z, control),
        atol=1e-12,
    )


def test_evaluate_affine_in_control():
    # The increment from adding z1 does not depend on the base point.
    control = make_space(6)
    rng = np.random.default_rng(4)
    theta = random_theta(rng, 4, 6)
    z1 = rng.standard_normal(6)
    za, zb = rng.standard_normal(6), rng.standard_normal(6)
    inc_a = evaluate(theta, z1 + za, control) - evaluate(theta, za, control)
    inc_b = evaluate(theta, z1 + zb, control) - evaluate(theta, zb, control)
    np.testing.assert_allclose(inc_a, inc_b, atol=1e-12)


def test_evaluate_shape_errors():
    control = make_space(6)
    theta = DiscrepancyParams.zeros(4, 6)
    with pytest.raises(ShapeError):
        evaluate(theta, np.zeros(5), control)
    with pytest.raises(ShapeError):
        evaluate(DiscrepancyParams.zeros(4, 5), np.zeros(6), control)


def test_inner_product_first_basis_vector():
    state = make_space(5)
    control = make_space(4)
    inner = ThetaInnerProduct(state, control)
    e1 = DiscrepancyParams.zeros(5, 4)
    e1.values[0] = 1.0
    assert inner(e1, e1) == pytest.approx(state.mass_s[0, 0], rel=1e-14)


def test_inner_product_symmetry_and_positivity():
    state = make_space(5)
    control = make_space(4)
    inner = ThetaInnerProduct(state, control)
    rng = np.random.default_rng(5)
    for _ in range(5):
        t1 = random_theta(rng, 5, 4)
        t2 = random_theta(rng, 5, 4)
        assert inner(t1, t2) == pytest.approx(inner(t2, t1), rel=1e-12)
        assert inner(t1, t1) > 0


def test_inner_product_block_orthogonality():
    state = make_space(5)
    control = make_space(4)
    inner = ThetaInnerProduct(state, control)
    rng = np.random.default_rng(6)
    offset_only = DiscrepancyParams.from_blocks(
        rng.standard_normal(5), np.zeros((5, 4))
    )
    rows_only = DiscrepancyParams.from_blocks(
        np.zeros(5), rng.standard_normal((5, 4))
    )
    assert inner(offset_only, rows_only) == pytest.approx(0.0, abs=1e-14)


def test_inner_product_matches_dense_weighting():
    state = make_space(5)
    control = make_space(4)
    inner = ThetaInnerProduct(state, control)
    W = inner.dense()
    rng = np.random.default_rng(7)
    for _ in range(5):
        t1 = random_theta(rng, 5, 4)
        t2 = random_theta(rng, 5, 4)
        assert inner(t1, t2) == pytest.approx(
            float(t2.values @ W @ t1.values), rel=1e-12
        )


def test_design_matrix_rank_full():
    state = make_space(5)
    control = make_space(6)
    rng = np.random.default_rng(8)
    Z = rng.standard_normal((3, 6))
    A = design_matrix(Z, state, control)
    assert np.linalg.matrix_rank(A) == 5 * 3


def test_interpolation_two_point_toy():
    # Scalar output, two controls in the plane: the free slope component
    # stays in the null space and the minimum-norm fit zeroes it.
    state = identity_space(1)
    control = identity_space(2)
    Z = np.array([[0.0, 0.0], [1.0, 0.0]])
    D = np.array([[1.0], [2.0]])
    theta, nullity = interpolate_min_norm(Z, D, state, control)
    np.testing.assert_allclose(theta.values, [1.0, 1.0, 0.0], atol=1e-12)
    assert nullity == (2 + 1 - 2) * 1


def test_interpolation_single_zero_datum():
    state = make_space(5)
    control = make_space(6)
    Z = np.ones((1, 6))
    D = np.zeros((1, 5))
    theta, nullity = interpolate_min_norm(Z, D, state, control)
    np.testing.assert_allclose(theta.values, 0.0, atol=1e-14)
    assert nullity == 6 * 5


def test_interpolation_fits_and_matches_pseudo_inverse():
    state = make_space(4)
    control = make_space(3)
    rng = np.random.default_rng(9)
    Z = rng.standard_normal((2, 3))
    D = rng.standard_normal((2, 4))
    theta, nullity = interpolate_min_norm(Z, D, state, control)
    for z, d in zip(Z, D):
        np.testing.assert_allclose(evaluate(theta, z, control), d, atol=1e-10)

    # Weighted pseudo-inverse oracle: change variables by the Cholesky factor
    # of the parameter weighting, take the Euclidean min-norm solution there.
    A = design_matrix(Z, state, control)
    W = ThetaInnerProduct(state, control).dense()
    L = np.linalg.cholesky(W)
    theta_oracle = np.linalg.solve(
        L.T, np.linalg.pinv(A @ np.linalg.inv(L.T)) @ D.ravel()
    )
    np.testing.assert_allclose(theta.values, theta_oracle, atol=1e-9)

    # SVD null space: dimension matches and null-space shifts still fit.
    _, s, Vt = np.linalg.svd(A)
    null = Vt[np.sum(s > 1e-10) :]
    assert null.shape[0] == nullity
    shifted = DiscrepancyParams(theta.values + 0.8 * null[0], 4, 3)
    for z, d in zip(Z, D):
        np.testing.assert_allclose(evaluate(shifted, z, control), d, atol=1e-10)


def test_interpolation_orthogonal_to_null_space():
    state = make_space(4)
    control = make_space(3)
    rng = np.random.default_rng(10)
    Z = rng.standard_normal((2, 3))
    D = rng.standard_normal((2, 4))
    theta, _ = interpolate_min_norm(Z, D, state, control)
    A = design_matrix(Z, state, control)
    W = ThetaInnerProduct(state, control).dense()
    _, s, Vt = np.linalg.svd(A)
    null = Vt[np.sum(s > 1e-10) :]
    np.testing.assert_allclose(null @ (W @ theta.values), 0.0, atol=1e-9)


def test_interpolation_rejects_dependent_controls():
    state = make_space(4)
    control = make_space(3)
    Z = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    D = np.zeros((2, 4))
    with pytest.raises(RankDeficiencyError):
        interpolate_min_norm(Z, D, state, control)


def test_interpolation_rejects_too_many_samples():
    state = make_space(4)
    control = make_space(3)
    rng = np.random.default_rng(11)
    with pytest.raises(RankDeficiencyError):
        interpolate_min_norm(
            rng.standard_normal((4, 3)), rng.standard_normal((4, 4)), state, control
        )


def test_dataset_centering_and_magnitude():
    rng = np.random.default_rng(12)
    Z = rng.standard_normal((2, 6))
    D_raw = rng.standard_normal((2, 5)) + 3.0
    ds = CalibrationDataset.from_raw(Z, D_raw)
    assert ds.dbar == pytest.approx(float(D_raw.mean()), rel=1e-14)
    assert ds.c_delta == pytest.approx(float(np.sqrt(np.mean(D_raw**2))), rel=1e-14)
    np.testing.assert_allclose(ds.D, D_raw - ds.dbar, atol=1e-14)
    np.testing.assert_allclose(ds.d_raw, D_raw, atol=1e-14)
    np.testing.assert_allclose(ds.z_tilde, Z[0], atol=1e-15)


def test_dataset_json_roundtrip():
    rng = np.random.default_rng(13)
    ds = CalibrationDataset.from_raw(
        rng.standard_normal((2, 4)), rng.standard_normal((2, 3))
    )
    doc = json.loads(json.dumps(ds.to_dict()))
    back = CalibrationDataset.from_dict(doc)
    np.testing.assert_allclose(back.Z, ds.Z, atol=0)
    np.testing.assert_allclose(back.D, ds.D, atol=0)
    assert back.dbar == ds.dbar and back.c_delta == ds.c_delta


def transient_spaces():
    from discal.fem import ScenarioConfig, assemble_space

    space = assemble_space(ScenarioConfig(problem="transient-1d", n_space=5, n_time=4))
    return space, space.spatial()


def test_inner_product_transient_matches_dense():
    state, control = transient_spaces()
    inner = ThetaInnerProduct(state, control)
    W = inner.dense()
    rng = np.random.default_rng(20)
    for _ in range(3):
        t1 = random_theta(rng, state.n, control.n)
        t2 = random_theta(rng, state.n, control.n)
        assert inner(t1, t2) == pytest.approx(
            float(t2.values @ W @ t1.values), rel=1e-12
        )


def test_interpolation_on_transient_state_space():
    state, control = transient_spaces()
    rng = np.random.default_rng(21)
    Z = rng.standard_normal((2, control.n))
    D = rng.standard_normal((2, state.n))
    theta, nullity = interpolate_min_norm(Z, D, state, control)
    for z, d in zip(Z, D):
        np.testing.assert_allclose(evaluate(theta, z, control), d, atol=1e-10)
    assert nullity == (control.n + 1 - 2) * state.n
