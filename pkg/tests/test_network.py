"""Numeric core: forward/backward exactness, softmax, optimizers, checkpoints."""

import math

import numpy as np
import pytest

from faukit import (
    DataError,
    DimensionError,
    DomainError,
    FormatError,
    LayerSpec,
    NumericError,
    backward,
    batch_loss,
    cross_entropy,
    forward,
    init_params,
    load_checkpoint,
    save_checkpoint,
    softmax,
    softmax_xent_grad,
)
from faukit import network
from conftest import assert_params_equal


def identity_net():
    specs = [LayerSpec(7, 7, "none")]
    params = [(np.eye(7), np.zeros(7))]
    return specs, params


def numeric_gradients(params, specs, x, y, h=1e-5):
    """Central-difference oracle over every parameter entry."""
    grads = []
    for W, b in params:
        dW, db = np.zeros_like(W), np.zeros_like(b)
        for arr, darr in ((W, dW), (b, db)):
            flat, dflat = arr.ravel(), darr.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = batch_loss(params, specs, x, y)
                flat[i] = orig - h
                down = batch_loss(params, specs, x, y)
                flat[i] = orig
                dflat[i] = (up - down) / (2.0 * h)
        grads.append((dW, db))
    return grads


def max_rel_err(analytic, numeric):
    """Relative error with a unit floor on the denominator."""
    worst = 0.0
    for (aW, ab), (nW, nb) in zip(analytic, numeric):
        for a, n in ((aW, nW), (ab, nb)):
            denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


class TestSpecs:
    def test_chain_validation(self):
        with pytest.raises(DimensionError):
            network.validate_specs([LayerSpec(4, 3), LayerSpec(5, 7, "none")])

    def test_final_layer_must_be_7_wide(self):
        with pytest.raises(DimensionError):
            network.validate_specs([LayerSpec(4, 5, "none")])

    def test_final_layer_must_be_linear(self):
        with pytest.raises(DomainError):
            network.validate_specs([LayerSpec(4, 7, "relu")])

    def test_chain_specs_builds_relu_hidden(self):
        specs = network.chain_specs(8, (5, 3))
        assert [(s.in_dim, s.out_dim, s.activation) for s in specs] == [
            (8, 5, "relu"),
            (5, 3, "relu"),
            (3, 7, "none"),
        ]


class TestForward:
    def test_identity_network(self):
        specs, params = identity_net()
        x = np.arange(7.0)
        np.testing.assert_array_equal(forward(params, specs, x), x)

    def test_all_zero_parameters(self):
        specs = network.chain_specs(4, (3,))
        params = [(np.zeros((3, 4)), np.zeros(3)), (np.zeros((7, 3)), np.zeros(7))]
        np.testing.assert_array_equal(forward(params, specs, np.ones(4)), np.zeros(7))

    def test_matches_hand_rolled_matrix_oracle(self):
        # independent oracle: explicit loops, no vectorized matmul
        specs = network.chain_specs(4, (3,))
        params = init_params(specs, 123)
        x = np.random.default_rng(5).normal(size=4)

        vec = list(x)
        for (W, b), spec in zip(params, specs):
            out = []
            for r in range(W.shape[0]):
                acc = b[r]
                for c in range(W.shape[1]):
                    acc += W[r, c] * vec[c]
                out.append(max(acc, 0.0) if spec.activation == "relu" else acc)
            vec = out

        np.testing.assert_allclose(forward(params, specs, x), vec, atol=1e-12, rtol=0)

    def test_batch_rows_match_single_calls(self):
        specs = network.chain_specs(5, (4,))
        params = init_params(specs, 7)
        X = np.random.default_rng(8).normal(size=(6, 5))
        batched = forward(params, specs, X)
        for i in range(6):
            np.testing.assert_allclose(batched[i], forward(params, specs, X[i]), atol=1e-12)

    def test_dim_mismatch(self):
        specs, params = identity_net()
        with pytest.raises(DimensionError):
            forward(params, specs, np.zeros(5))


class TestSoftmaxLoss:
    def test_uniform_case(self):
        probs = softmax(np.zeros(7))
        np.testing.assert_allclose(probs, np.full(7, 1.0 / 7.0), atol=1e-15)
        assert cross_entropy(probs, 0) == pytest.approx(math.log(7.0), abs=1e-12)

    def test_normalization(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            probs = softmax(rng.normal(scale=50.0, size=7))
            assert abs(probs.sum() - 1.0) <= 1e-12

    def test_positivity_in_representable_range(self):
        # float64 saturates to exactly 0/1 once logit gaps exceed ~36 ln-units;
        # strict positivity is checked where it is representable
        rng = np.random.default_rng(0)
        for _ in range(200):
            probs = softmax(rng.normal(scale=5.0, size=7))
            assert np.all(probs > 0.0) and np.all(probs < 1.0)

    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        z = rng.normal(size=7)
        for c in (-1000.0, -3.5, 0.0, 17.0, 1e6):
            np.testing.assert_allclose(softmax(z + c), softmax(z), atol=1e-12)

    def test_confident_logits_near_zero_loss(self):
        z = np.array([10.0, 0, 0, 0, 0, 0, 0])
        loss = cross_entropy(softmax(z), 0)
        # independent evaluation: loss = ln(sum exp(z)) - z[0]
        expected = math.log(sum(math.exp(v) for v in z)) - z[0]
        assert loss == pytest.approx(expected, rel=1e-9)
        assert loss < 1e-3

    def test_loss_non_negative(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            probs = softmax(rng.normal(size=7))
            assert cross_entropy(probs, int(rng.integers(7))) >= 0.0

    def test_non_finite_logits_raise(self):
        with pytest.raises(NumericError):
            softmax(np.array([np.nan, 0, 0, 0, 0, 0, 0]))
        with pytest.raises(NumericError):
            softmax(np.array([np.inf, 0, 0, 0, 0, 0, 0]))

    def test_logit_gradient_closed_form(self):
        rng = np.random.default_rng(3)
        z = rng.normal(size=7)
        y = 4
        onehot = np.zeros(7)
        onehot[y] = 1.0
        np.testing.assert_allclose(softmax_xent_grad(z, y), softmax(z) - onehot, atol=1e-15)


class TestBackward:
    def test_matches_finite_differences_on_6_5_7_net(self):
        specs = network.chain_specs(6, (5,))
        params = init_params(specs, 42)
        rng = np.random.default_rng(42)
        x = rng.normal(size=6)
        analytic = backward(params, specs, x, 3)
        numeric = numeric_gradients(params, specs, x, 3)
        assert max_rel_err(analytic, numeric) <= 1e-5

    def test_zero_input_zero_bias_first_layer_grad(self):
        specs = network.chain_specs(4, (3,))
        params = init_params(specs, 0)
        grads = backward(params, specs, np.zeros(4), 2)
        assert not grads[0][0].any()

    def test_last_layer_bias_grad_is_logit_grad(self):
        specs, params = identity_net()
        x = np.random.default_rng(4).normal(size=7)
        grads = backward(params, specs, x, 1)
        np.testing.assert_allclose(grads[0][1], softmax_xent_grad(x, 1), atol=1e-15)

    def test_batch_grad_is_mean_of_singles(self):
        specs = network.chain_specs(5, (4,))
        params = init_params(specs, 6)
        rng = np.random.default_rng(6)
        X = rng.normal(size=(3, 5))
        y = np.array([0, 3, 6])
        batched = backward(params, specs, X, y)
        singles = [backward(params, specs, X[i], y[i]) for i in range(3)]
        for l in range(len(params)):
            np.testing.assert_allclose(
                batched[l][0], np.mean([s[l][0] for s in singles], axis=0), atol=1e-12
            )

    def test_l2_term(self):
        specs, params = identity_net()
        x = np.ones(7)
        plain = backward(params, specs, x, 0)
        reg = backward(params, specs, x, 0, l2_weight=0.1)
        np.testing.assert_allclose(reg[0][0] - plain[0][0], 0.1 * params[0][0], atol=1e-12)
        np.testing.assert_allclose(reg[0][1], plain[0][1], atol=1e-15)

    def test_empty_batch_rejected(self):
        specs, params = identity_net()
        with pytest.raises(DataError):
            backward(params, specs, np.zeros((0, 7)), np.zeros(0, dtype=int))


class TestOptimizers:
    def test_sgd_matches_manual_update(self):
        specs, params = identity_net()
        x = np.random.default_rng(9).normal(size=7)
        grads = backward(params, specs, x, 2)
        expected_W = params[0][0] - 0.1 * grads[0][0]
        network.SGD(params, 0.1).step(params, grads)
        np.testing.assert_allclose(params[0][0], expected_W, atol=1e-15)

    @pytest.mark.parametrize("name", ["sgd", "adam"])
    def test_zero_learning_rate_is_identity(self, name):
        specs = network.chain_specs(4, (3,))
        params = init_params(specs, 11)
        before = [(W.copy(), b.copy()) for W, b in params]
        opt = network.make_optimizer(name, params, 0.0)
        for _ in range(5):
            grads = backward(params, specs, np.ones(4), 1)
            opt.step(params, grads)
        assert_params_equal(params, before)

    def test_small_sgd_step_never_increases_batch_loss(self):
        # 100 seeded random nets and batches, lr small enough that the
        # first-order decrease dominates
        rng = np.random.default_rng(7)
        for _ in range(100):
            n_hidden = int(rng.integers(0, 3))
            dims = [int(rng.integers(2, 11)) for _ in range(n_hidden + 1)]
            specs = network.chain_specs(dims[0], dims[1:])
            params = init_params(specs, int(rng.integers(0, 2**31)))
            X = rng.normal(size=(int(rng.integers(1, 9)), dims[0]))
            y = rng.integers(0, 7, size=X.shape[0])
            before = batch_loss(params, specs, X, y)
            network.SGD(params, 1e-4).step(params, backward(params, specs, X, y))
            assert batch_loss(params, specs, X, y) <= before

    def test_unknown_optimizer(self):
        specs, params = identity_net()
        with pytest.raises(DomainError):
            network.make_optimizer("rmsprop", params, 0.1)

    def test_negative_learning_rate(self):
        specs, params = identity_net()
        with pytest.raises(DomainError):
            network.make_optimizer("sgd", params, -0.1)


class TestCheckpoints:
    def test_round_trip_bit_exact(self, tmp_path):
        specs = network.chain_specs(6, (4, 3))
        params = init_params(specs, 21)
        path = tmp_path / "net.faum"
        save_checkpoint(path, specs, params)
        specs2, params2 = load_checkpoint(path)
        assert specs2 == specs
        assert_params_equal(params, params2)
        x = np.random.default_rng(0).normal(size=6)
        np.testing.assert_array_equal(forward(params, specs, x), forward(params2, specs2, x))

    def test_save_twice_byte_identical(self, tmp_path):
        specs = network.chain_specs(3, ())
        params = init_params(specs, 1)
        a, b = tmp_path / "a.faum", tmp_path / "b.faum"
        save_checkpoint(a, specs, params)
        save_checkpoint(b, specs, params)
        assert a.read_bytes() == b.read_bytes()

    def test_truncated_file_rejected(self, tmp_path):
        specs = network.chain_specs(3, ())
        params = init_params(specs, 2)
        path = tmp_path / "net.faum"
        save_checkpoint(path, specs, params)
        blob = path.read_bytes()
        for cut in (3, 6, 10, len(blob) - 8):
            path.write_bytes(blob[:cut])
            with pytest.raises(FormatError):
                load_checkpoint(path)

    def test_bad_magic_and_trailing_bytes(self, tmp_path):
        specs = network.chain_specs(3, ())
        params = init_params(specs, 3)
        path = tmp_path / "net.faum"
        save_checkpoint(path, specs, params)
        blob = path.read_bytes()
        path.write_bytes(b"BOGUS" + blob[5:])
        with pytest.raises(FormatError, match="magic"):
            load_checkpoint(path)
        path.write_bytes(blob + b"\x00" * 8)
        with pytest.raises(FormatError, match="trailing"):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_checkpoint(tmp_path / "none.faum")
