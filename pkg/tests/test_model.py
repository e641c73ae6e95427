import numpy as np
import pytest

from calibnet.errors import (
    DegenerateGain,
    DimensionMismatch,
    InvalidSize,
    MissingNoiseModel,
)
from calibnet.model import (
    CalibrationParams,
    ForwardSensorModel,
    SensorDataset,
    WeightingSpec,
    assemble_G,
    block_weight_matrix,
    centering_matrix,
    from_inverse_params,
    gram_blocks,
    to_inverse_params,
)

import oracles


def make_dataset(readings, ids=None):
    readings = np.asarray(readings, float)
    ids = ids or tuple(f"s{i+1}" for i in range(readings.shape[1]))
    return SensorDataset(readings=readings, sensor_ids=ids)


def noiseless_dataset(rng, n, m, x=None):
    x = np.linspace(1.0, 9.0, m) if x is None else x
    gains = rng.normal(1.0, 0.2, n)
    offsets = rng.normal(0.0, 2.0, n)
    truth = ForwardSensorModel(gains=gains, offsets=offsets)
    return make_dataset(truth.response(x)), truth


class TestParameterMappings:
    def test_ideal_sensor(self):
        p = to_inverse_params(ForwardSensorModel(gains=[1.0, 1.0], offsets=[0.0, 0.0]))
        assert p.pairs == [(1.0, 0.0), (1.0, 0.0)]

    def test_direct_substitution(self):
        p = to_inverse_params(ForwardSensorModel(gains=[2.0, 1.0], offsets=[4.0, 0.0]))
        assert p.alphas[0] == 0.5 and p.betas[0] == -2.0

    def test_zero_gain_rejected(self):
        with pytest.raises(DegenerateGain):
            ForwardSensorModel(gains=[0.0, 1.0], offsets=[1.0, 0.0])

    def test_inverse_identity_case(self):
        m = from_inverse_params(CalibrationParams(alphas=[1.0, 1.0], betas=[0.0, 0.0]))
        assert np.allclose(m.gains, 1.0) and np.allclose(m.offsets, 0.0)

    def test_inverse_of_example(self):
        m = from_inverse_params(CalibrationParams(alphas=[0.5, 1.0], betas=[-2.0, 0.0]))
        assert m.gains[0] == 2.0 and m.offsets[0] == 4.0

    def test_zero_alpha_rejected(self):
        with pytest.raises(DegenerateGain):
            from_inverse_params(CalibrationParams(alphas=[0.0, 1.0], betas=[1.0, 0.0]))

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            gains = rng.uniform(0.2, 3.0, 6) * rng.choice([-1, 1], 6)
            offsets = rng.normal(0, 10, 6)
            m = ForwardSensorModel(gains=gains, offsets=offsets)
            back = from_inverse_params(to_inverse_params(m))
            assert np.allclose(back.gains, gains, rtol=1e-13)
            assert np.allclose(back.offsets, offsets, rtol=1e-12, atol=1e-12)

    def test_theta_interleaving(self):
        p = CalibrationParams(alphas=[1.0, 3.0], betas=[2.0, 4.0])
        assert p.theta.tolist() == [1.0, 2.0, 3.0, 4.0]
        assert CalibrationParams.from_theta([1.0, 2.0, 3.0, 4.0]).pairs == p.pairs


class TestCenteringMatrix:
    def test_n2(self):
        assert centering_matrix(2).tolist() == [[1.0, -1.0], [-1.0, 1.0]]

    def test_annihilates_ones(self):
        assert np.array_equal(centering_matrix(3) @ np.ones(3), np.zeros(3))

    def test_square_identity_by_explicit_multiplication(self):
        # oracle: multiply the 3x3 matrix entry by entry
        p = centering_matrix(3)
        prod = np.zeros((3, 3))
        for i in range(3):
            for j in range(3):
                prod[i, j] = sum(p[i, k] * p[k, j] for k in range(3))
        assert np.allclose(prod, 3 * p, rtol=1e-12, atol=0)

    def test_too_small(self):
        with pytest.raises(InvalidSize):
            centering_matrix(1)

    def test_properties_random_sizes(self):
        for n in (2, 4, 7, 13):
            p = centering_matrix(n)
            assert np.array_equal(p @ np.ones(n), np.zeros(n))
            assert np.linalg.norm(p @ p - n * p) <= 1e-12 * np.linalg.norm(n * p)


class TestGramBlocks:
    def test_constant_vectors(self):
        g = gram_blocks(make_dataset([[1.0, 1.0], [1.0, 1.0]]))
        assert g.block(0, 1).tolist() == [[2.0, 2.0], [2.0, 2.0]]

    def test_hand_computed(self):
        g = gram_blocks(make_dataset([[1.0, 0.0], [2.0, 1.0], [3.0, 0.0]]))
        assert g.block(0, 1).tolist() == [[2.0, 6.0], [1.0, 3.0]]

    def test_transpose_symmetry(self):
        rng = np.random.default_rng(3)
        g = gram_blocks(make_dataset(rng.normal(size=(7, 4))))
        for i in range(4):
            for j in range(4):
                assert np.array_equal(g.block(j, i), g.block(i, j).T)

    def test_diagonal_positive_definite_for_nonconstant(self):
        rng = np.random.default_rng(4)
        g = gram_blocks(make_dataset(rng.normal(size=(6, 3))))
        for i in range(3):
            assert np.all(np.linalg.eigvalsh(g.block(i, i)) > 0)


class TestBlockWeightMatrix:
    def test_identity_n2(self):
        w = block_weight_matrix(WeightingSpec.identity(), 2)
        assert w.tolist() == [[2.0, -2.0], [-2.0, 2.0]]

    def test_whitened_matches_dense_kronecker_factor(self):
        n, m = 3, 4
        noise_vars = np.array([1.0, 1.0, 1.0])
        alphas = np.array([1.0, 1.0, 1.0])
        omega = block_weight_matrix(WeightingSpec.whitened(noise_vars, alphas), n)
        gamma = oracles.dense_gamma(n, m)
        sigma = oracles.dense_noise_cov(noise_vars, alphas, m)
        k = gamma.T @ np.linalg.pinv(gamma @ sigma @ gamma.T) @ gamma
        assert np.allclose(k, np.kron(omega, np.eye(m)), atol=1e-12)

    def test_whitened_matches_dense_heteroscedastic(self):
        rng = np.random.default_rng(8)
        n, m = 4, 3
        noise_vars = rng.uniform(0.2, 5.0, n)
        alphas = rng.uniform(0.5, 2.0, n)
        omega = block_weight_matrix(WeightingSpec.whitened(noise_vars, alphas), n)
        gamma = oracles.dense_gamma(n, m)
        sigma = oracles.dense_noise_cov(noise_vars, alphas, m)
        k = gamma.T @ np.linalg.pinv(gamma @ sigma @ gamma.T) @ gamma
        assert np.allclose(k, np.kron(omega, np.eye(m)), rtol=1e-9, atol=1e-12)

    def test_annihilates_ones_both_modes(self):
        rng = np.random.default_rng(9)
        for spec in (WeightingSpec.identity(),
                     WeightingSpec.whitened(rng.uniform(0.5, 3, 5), rng.uniform(0.5, 2, 5))):
            w = block_weight_matrix(spec, 5)
            assert np.max(np.abs(w @ np.ones(5))) <= 1e-10 * np.max(np.abs(w))

    def test_missing_noise_model(self):
        with pytest.raises(MissingNoiseModel):
            WeightingSpec(mode="whitened")
        with pytest.raises(MissingNoiseModel):
            WeightingSpec.whitened([1.0, 0.0], [1.0, 1.0])
        with pytest.raises(MissingNoiseModel):
            WeightingSpec.whitened([1.0, 1.0], [1.0, 0.0])


class TestAssembleG:
    def test_noiseless_truth_in_nullspace(self):
        rng = np.random.default_rng(10)
        data, truth = noiseless_dataset(rng, 4, 12)
        g = assemble_G(gram_blocks(data),
                       block_weight_matrix(WeightingSpec.identity(), 4))
        theta = to_inverse_params(truth).theta
        assert np.linalg.norm(g @ theta) <= 1e-11 * np.linalg.norm(g) * np.linalg.norm(theta)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(11)
        y = oracles.random_readings(rng, 3, 4)
        g = assemble_G(gram_blocks(make_dataset(y)),
                       block_weight_matrix(WeightingSpec.identity(), 3))
        dense = oracles.dense_quadratic_form(y)
        assert np.linalg.norm(g - dense) <= 1e-12 * np.linalg.norm(dense)

    def test_matches_dense_oracle_whitened(self):
        rng = np.random.default_rng(12)
        y = oracles.random_readings(rng, 3, 5)
        noise_vars = rng.uniform(0.3, 4.0, 3)
        alphas = rng.uniform(0.5, 1.5, 3)
        g = assemble_G(gram_blocks(make_dataset(y)),
                       block_weight_matrix(WeightingSpec.whitened(noise_vars, alphas), 3))
        dense = oracles.dense_quadratic_form(y, noise_vars, alphas)
        assert np.linalg.norm(g - dense) <= 1e-9 * np.linalg.norm(dense)

    def test_symmetry(self):
        rng = np.random.default_rng(13)
        y = rng.normal(size=(9, 5)) * 4 + 2
        g = assemble_G(gram_blocks(make_dataset(y)),
                       block_weight_matrix(WeightingSpec.identity(), 5))
        assert np.linalg.norm(g - g.T) <= 1e-12 * np.linalg.norm(g)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(14)
        grams = gram_blocks(make_dataset(rng.normal(size=(4, 3))))
        with pytest.raises(DimensionMismatch):
            assemble_G(grams, np.eye(4))

    def test_noiseless_nullity_at_least_two(self):
        # scale/shift ambiguity: both smallest eigenvalues vanish numerically
        rng = np.random.default_rng(15)
        data, _ = noiseless_dataset(rng, 5, 10)
        g = assemble_G(gram_blocks(data),
                       block_weight_matrix(WeightingSpec.identity(), 5))
        w = np.linalg.eigvalsh(g)
        assert abs(w[0]) <= 1e-10 * w[-1]
        assert abs(w[1]) <= 1e-10 * w[-1]


class TestWhiteningProperty:
    def test_whitened_operator_has_unit_singular_values(self):
        # dense small-scale check that W Gamma Sigma^(1/2) is a partial isometry
        rng = np.random.default_rng(16)
        n, m = 3, 4
        noise_vars = rng.uniform(0.5, 3.0, n)
        alphas = rng.uniform(0.6, 1.4, n)
        gamma = oracles.dense_gamma(n, m)
        sigma = oracles.dense_noise_cov(noise_vars, alphas, m)
        cov = gamma @ sigma @ gamma.T
        wtw = np.linalg.pinv(cov)
        w_eig, v_eig = np.linalg.eigh(wtw)
        w_half = (v_eig * np.sqrt(np.clip(w_eig, 0, None))) @ v_eig.T
        s_eig, sv = np.linalg.eigh(sigma)
        sigma_half = (sv * np.sqrt(s_eig)) @ sv.T
        sing = np.linalg.svd(w_half @ gamma @ sigma_half, compute_uv=False)
        assert np.all((sing < 1e-8) | (np.abs(sing - 1.0) < 1e-8))


class TestDatasetInvariants:
    def test_too_few_samples(self):
        with pytest.raises(InvalidSize):
            make_dataset([[1.0, 2.0]])

    def test_too_few_sensors(self):
        with pytest.raises(InvalidSize):
            SensorDataset(readings=np.ones((3, 1)), sensor_ids=("a",))

    def test_non_finite(self):
        with pytest.raises(InvalidSize):
            make_dataset([[1.0, np.nan], [2.0, 3.0]])

    def test_readings_immutable(self):
        d = make_dataset([[1.0, 2.0], [3.0, 4.0]])
        with pytest.raises(ValueError):
            d.readings[0, 0] = 9.0
