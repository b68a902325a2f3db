"""Toy network blocks: seeded determinism, conv/SE/GRU oracles, shape contracts."""

import numpy as np
import pytest

from helpers import conv3x3_oracle
from vton.errors import ParameterError, ShapeMismatchError
from vton.nets import (
    Conv2D,
    ConvGRUCell,
    EncoderDecoder,
    FeatureExtractor,
    SEBlock,
    sigmoid,
    uniform_init,
)


class TestInit:
    def test_equal_seeds_are_bitwise_identical(self):
        a = uniform_init(5, "layer.weight", (4, 3, 3, 3), 27)
        b = uniform_init(5, "layer.weight", (4, 3, 3, 3), 27)
        assert a.dtype == np.float32
        np.testing.assert_array_equal(a, b)

    def test_labels_and_seeds_decorrelate_streams(self):
        a = uniform_init(5, "layer.weight", (8,), 9)
        b = uniform_init(5, "other.weight", (8,), 9)
        c = uniform_init(6, "layer.weight", (8,), 9)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_fan_in_bound(self):
        w = uniform_init(0, "w", (1000,), 25)
        assert np.abs(w).max() <= np.sqrt(1 / 25)

    def test_whole_networks_rebuild_identically(self):
        x = np.random.default_rng(0).random((3, 32, 32))
        a = EncoderDecoder(3, 2, seed=9).forward(x)
        b = EncoderDecoder(3, 2, seed=9).forward(x)
        np.testing.assert_array_equal(a, b)


class TestConv2D:
    def test_identity_kernel_reproduces_input(self, rng):
        conv = Conv2D(1, 1, seed=0, label="t")
        conv.weight = np.zeros_like(conv.weight)
        conv.weight[0, 0, 1, 1] = 1.0
        conv.bias = np.zeros_like(conv.bias)
        x = rng.random((1, 6, 7))
        np.testing.assert_allclose(conv.forward(x), x, atol=1e-12)

    def test_stride_two_shape(self, rng):
        conv = Conv2D(2, 5, stride=2, seed=1)
        assert conv.forward(rng.random((2, 8, 8))).shape == (5, 4, 4)
        assert conv.forward(rng.random((2, 7, 9))).shape == (5, 4, 5)

    def test_matches_nested_loop_oracle(self, rng):
        for stride in (1, 2):
            conv = Conv2D(3, 4, stride=stride, seed=3, label=f"s{stride}")
            x = rng.random((3, 6, 5))
            np.testing.assert_allclose(
                conv.forward(x),
                conv3x3_oracle(x, conv.weight, conv.bias, stride),
                atol=1e-9,
            )

    def test_backward_input_is_adjoint_of_forward(self, rng):
        # <conv(x) - conv(0), g> must equal <x, conv_backward(g)>
        for stride in (1, 2):
            conv = Conv2D(2, 3, stride=stride, seed=4, label=f"adj{stride}")
            x = rng.random((2, 6, 7))
            out = conv.forward(x)
            zero_out = conv.forward(np.zeros_like(x))
            g = rng.random(out.shape)
            lhs = float(((out - zero_out) * g).sum())
            rhs = float((x * conv.backward_input(g, 6, 7)).sum())
            assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_channel_mismatch_rejected(self, rng):
        with pytest.raises(ShapeMismatchError):
            Conv2D(3, 2, seed=0).forward(rng.random((2, 4, 4)))

    def test_bad_stride_rejected(self):
        with pytest.raises(ParameterError):
            Conv2D(1, 1, stride=3)


class TestSEBlock:
    def test_passthrough_gates_saturate_to_one(self, rng):
        block = SEBlock.passthrough(6)
        x = rng.random((6, 5, 4))
        np.testing.assert_array_equal(block.forward(x), x)

    def test_zero_channel_stays_zero(self, rng):
        block = SEBlock(4, seed=2)
        x = rng.random((4, 6, 6))
        x[2] = 0.0
        assert not block.forward(x)[2].any()

    def test_matches_pool_affine_sigmoid_oracle(self, rng):
        block = SEBlock(8, reduction=4, seed=5)
        x = rng.random((8, 5, 6))
        pooled = np.array([x[c].mean() for c in range(8)])
        hidden = np.maximum(block.w_squeeze.astype(np.float64) @ pooled + block.b_squeeze, 0.0)
        gates = 1.0 / (1.0 + np.exp(-(block.w_excite.astype(np.float64) @ hidden + block.b_excite)))
        expected = x * gates[:, None, None]
        np.testing.assert_allclose(block.forward(x), expected, atol=1e-9)

    def test_gates_bounded_and_contractive(self, rng):
        for seed in range(5):
            block = SEBlock(8, seed=seed)
            x = rng.random((8, 4, 4)) * 2 - 1
            gates = block.gates(x)
            assert (gates > 0.0).all() and (gates < 1.0).all()
            out = block.forward(x)
            for c in range(8):
                assert np.abs(out[c]).max() <= np.abs(x[c]).max() + 1e-12


class TestConvGRUCell:
    def test_always_update_returns_input(self, rng):
        cell = ConvGRUCell.always_update()
        h = rng.random((2, 6, 5)) * 4 - 2
        x = rng.random((2, 6, 5)) * 4 - 2
        assert np.abs(cell.step(h, x) - x).max() <= 1e-9

    def test_never_update_returns_state(self, rng):
        cell = ConvGRUCell.never_update()
        h = rng.random((2, 6, 5)) * 4 - 2
        x = rng.random((2, 6, 5)) * 4 - 2
        assert np.abs(cell.step(h, x) - h).max() <= 1e-9

    def test_zero_state_zero_input_is_fixed_point(self):
        cell = ConvGRUCell(seed=11)
        zeros = np.zeros((2, 8, 6))
        np.testing.assert_array_equal(cell.step(zeros, zeros), zeros)

    def test_matches_equation_oracle(self, rng):
        cell = ConvGRUCell(seed=6)
        h = rng.random((2, 5, 4))
        x = rng.random((2, 5, 4))
        pair = np.concatenate([h, x])
        z = sigmoid(conv3x3_oracle(pair, cell.conv_update.weight, cell.conv_update.bias, 1))
        r = sigmoid(conv3x3_oracle(pair, cell.conv_reset.weight, cell.conv_reset.bias, 1))
        cand = np.tanh(
            conv3x3_oracle(
                np.concatenate([r * h, x]), cell.conv_cand.weight, cell.conv_cand.bias, 1
            )
        )
        expected = (1 - z) * h + z * cand
        np.testing.assert_allclose(cell.step(h, x), expected, atol=1e-9)

    def test_output_is_convex_combination(self, rng):
        cell = ConvGRUCell(seed=8)
        for _ in range(5):
            h = rng.random((2, 6, 6)) * 6 - 3
            x = rng.random((2, 6, 6)) * 6 - 3
            pair = np.concatenate([h, x])
            r = sigmoid(cell.conv_reset.forward(pair))
            cand = np.tanh(cell.conv_cand.forward(np.concatenate([r * h, x])))
            out = cell.step(h, x)
            lo = np.minimum(h, cand) - 1e-9
            hi = np.maximum(h, cand) + 1e-9
            assert (out >= lo).all() and (out <= hi).all()

    def test_shape_mismatch_rejected(self, rng):
        cell = ConvGRUCell(seed=0)
        with pytest.raises(ShapeMismatchError):
            cell.step(rng.random((2, 4, 4)), rng.random((2, 5, 4)))


class TestEncoderDecoder:
    def test_divisibility_error_names_padded_size(self, rng):
        net = EncoderDecoder(3, 7, seed=0)
        with pytest.raises(ShapeMismatchError, match="64x64"):
            net.forward(rng.random((3, 64, 48)))

    def test_output_shape_and_channels(self, rng):
        net = EncoderDecoder(3, 7, seed=0)
        out = net.forward(rng.random((3, 96, 64)))
        assert out.shape == (7, 96, 64)

    @pytest.mark.parametrize("h,w", [(32, 32), (64, 96), (128, 32)])
    def test_shape_contract_over_random_sizes(self, rng, h, w):
        net = EncoderDecoder(4, 2, seed=1)
        out, feats = net.forward_features(rng.random((4, h, w)))
        assert out.shape == (2, h, w)
        assert [f.shape[1:] for f in feats] == [
            (h // 16, w // 16), (h // 8, w // 8), (h // 4, w // 4), (h // 2, w // 2), (h, w)
        ]

    def test_se_variant_runs(self, rng):
        net = EncoderDecoder(3, 7, seed=0, use_se=True)
        assert net.forward(rng.random((3, 32, 32))).shape == (7, 32, 32)
        assert any(name.endswith("se.w_excite") for name in net.parameters())


class TestFeatureExtractor:
    def test_deterministic_features(self, rng):
        x = rng.random((3, 32, 32))
        a = FeatureExtractor(seed=3).features(x)
        b = FeatureExtractor(seed=3).features(x)
        for fa, fb in zip(a, b):
            np.testing.assert_array_equal(fa, fb)

    def test_level_strides(self, rng):
        levels = FeatureExtractor(seed=0).features(rng.random((3, 48, 32)))
        assert [f.shape[1:] for f in levels] == [(48, 32), (24, 16), (12, 8), (6, 4), (3, 2)]
        assert [f.shape[0] for f in levels] == [8, 16, 32, 32, 32]

    def test_single_pixel_sensitivity(self, rng):
        extractor = FeatureExtractor(seed=1)
        x = rng.random((3, 32, 32))
        y = x.copy()
        y[1, 13, 20] += 0.25
        fa = extractor.features(x)
        fb = extractor.features(y)
        assert np.abs(fa[0] - fb[0]).max() > 0.0

    def test_rejects_non_rgb_input(self, rng):
        with pytest.raises(ShapeMismatchError):
            FeatureExtractor(seed=0).features(rng.random((4, 32, 32)))
