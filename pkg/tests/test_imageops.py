"""Raster primitive contracts, each checked against a scalar-loop oracle."""

import numpy as np
import pytest

from helpers import (
    bilinear_oracle,
    blur_oracle,
    correlate3_replicate_oracle,
    gaussian_kernel_oracle,
    resize_oracle,
)
from vton.errors import ParameterError, ShapeMismatchError
from vton.imageops import (
    SOBEL_X,
    SOBEL_Y,
    bilinear_sample,
    extract_patches,
    gaussian_blur,
    l1_mean,
    reassemble_patches,
    resize_bilinear,
    sobel_gradients,
)


class TestBilinearSample:
    def test_integer_coordinates_are_exact_lookup(self, rng):
        img = rng.random((3, 6, 5))
        assert np.array_equal(bilinear_sample(img, 2, 3), img[:, 3, 2])
        for _ in range(20):
            x = int(rng.integers(0, 5))
            y = int(rng.integers(0, 6))
            assert np.array_equal(bilinear_sample(img, x, y), img[:, y, x])

    def test_midpoint_between_zero_and_one(self):
        img = np.array([[[0.0, 1.0]]])
        assert bilinear_sample(img, 0.5, 0.0) == pytest.approx(0.5)

    def test_outside_raster_returns_zero_vector(self, rng):
        img = rng.random((3, 4, 4)) + 1.0
        assert np.array_equal(bilinear_sample(img, -5.0, 0.0), np.zeros(3))
        assert np.array_equal(bilinear_sample(img, 0.0, 7.5), np.zeros(3))
        # even fractionally outside: the contract is a hard cutoff
        assert np.array_equal(bilinear_sample(img, -0.25, 1.0), np.zeros(3))

    def test_matches_pointwise_oracle(self, rng):
        img = rng.random((2, 7, 9))
        for _ in range(50):
            x = rng.uniform(-2, 10)
            y = rng.uniform(-2, 8)
            np.testing.assert_allclose(
                bilinear_sample(img, x, y), bilinear_oracle(img, x, y), atol=1e-12
            )


class TestResizeBilinear:
    def test_constant_image_stays_constant(self, rng):
        img = np.full((3, 5, 4), 0.37)
        out = resize_bilinear(img, 11, 13)
        np.testing.assert_allclose(out, 0.37, atol=1e-12)

    def test_same_size_is_identity(self, rng):
        img = rng.random((3, 6, 8))
        assert np.abs(resize_bilinear(img, 6, 8) - img).max() == 0.0

    def test_ramp_upscale_matches_per_pixel_oracle(self):
        img = np.arange(4, dtype=np.float64).reshape(1, 2, 2)
        out = resize_bilinear(img, 4, 4)
        np.testing.assert_allclose(out, resize_oracle(img, 4, 4), atol=1e-12)

    def test_random_resizes_match_oracle(self, rng):
        img = rng.random((2, 5, 7))
        for nh, nw in [(3, 4), (9, 2), (10, 14), (5, 7)]:
            np.testing.assert_allclose(
                resize_bilinear(img, nh, nw), resize_oracle(img, nh, nw), atol=1e-12
            )

    def test_preserves_value_bounds(self, rng):
        for _ in range(10):
            img = rng.random((3, 6, 5)) * 4 - 2
            out = resize_bilinear(img, int(rng.integers(1, 16)), int(rng.integers(1, 16)))
            assert out.min() >= img.min() - 1e-12
            assert out.max() <= img.max() + 1e-12

    def test_rejects_degenerate_target(self, rng):
        with pytest.raises(ParameterError):
            resize_bilinear(rng.random((1, 4, 4)), 0, 3)


class TestSobel:
    def test_constant_image_has_zero_gradients(self):
        out = sobel_gradients(np.full((2, 5, 5), 0.6))
        np.testing.assert_allclose(out, 0.0, atol=1e-12)

    def test_horizontal_ramp(self):
        img = np.tile(np.arange(6, dtype=np.float64), (5, 1))[None]
        out = sobel_gradients(img)
        # interior columns see the full [-1 0 1]x[1 2 1] response
        np.testing.assert_allclose(out[0][:, 1:-1], 8.0, atol=1e-12)
        np.testing.assert_allclose(out[1], 0.0, atol=1e-12)

    def test_vertical_ramp(self):
        img = np.tile(np.arange(7, dtype=np.float64)[:, None], (1, 4))[None]
        out = sobel_gradients(img)
        np.testing.assert_allclose(out[1][1:-1, :], 8.0, atol=1e-12)
        np.testing.assert_allclose(out[0], 0.0, atol=1e-12)

    def test_matches_loop_oracle(self, rng):
        img = rng.random((2, 6, 7))
        out = sobel_gradients(img)
        for c in range(2):
            np.testing.assert_allclose(
                out[2 * c], correlate3_replicate_oracle(img[c], SOBEL_X), atol=1e-9
            )
            np.testing.assert_allclose(
                out[2 * c + 1], correlate3_replicate_oracle(img[c], SOBEL_Y), atol=1e-9
            )

    def test_linearity(self, rng):
        a = rng.random((1, 5, 6))
        b = rng.random((1, 5, 6))
        lhs = sobel_gradients(2.5 * a - 0.7 * b)
        rhs = 2.5 * sobel_gradients(a) - 0.7 * sobel_gradients(b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_too_small_raster_is_rejected(self, rng):
        with pytest.raises(ShapeMismatchError):
            sobel_gradients(rng.random((1, 2, 5)))


class TestGaussianBlur:
    def test_constant_image_unchanged(self):
        img = np.full((3, 8, 6), 0.25)
        np.testing.assert_allclose(gaussian_blur(img, 1.7), 0.25, atol=1e-9)

    def test_impulse_response_is_kernel_outer_product(self):
        img = np.zeros((1, 21, 21))
        img[0, 10, 10] = 1.0
        out = gaussian_blur(img, 1.0)
        kernel = gaussian_kernel_oracle(1.0)
        expected = np.zeros((21, 21))
        expected[10 - 3 : 10 + 4, 10 - 3 : 10 + 4] = np.outer(kernel, kernel)
        np.testing.assert_allclose(out[0], expected, atol=1e-12)
        assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_tiny_sigma_is_identity(self, rng):
        img = rng.random((3, 6, 6))
        np.testing.assert_allclose(gaussian_blur(img, 0.1), img, atol=1e-6)

    def test_matches_tabulated_kernel_oracle(self, rng):
        img = rng.random((2, 7, 6))
        np.testing.assert_allclose(gaussian_blur(img, 0.8), blur_oracle(img, 0.8), atol=1e-9)

    def test_mean_shift_stays_small(self, rng):
        # replicate padding keeps the global mean nearly unchanged
        img = rng.random((1, 64, 48))
        for sigma in (1.0, 2.0, 3.0):
            out = gaussian_blur(img, sigma)
            assert abs(out.mean() - img.mean()) / img.mean() < 0.02

    def test_rejects_nonpositive_sigma(self, rng):
        with pytest.raises(ParameterError):
            gaussian_blur(rng.random((1, 4, 4)), 0.0)


class TestPatches:
    def test_scale_one_is_identity(self, rng):
        img = rng.random((5, 6))
        ps = extract_patches(img, 1)
        assert ps.patches.shape == (1, 5, 6)
        np.testing.assert_array_equal(ps.patches[0], img)

    def test_documented_4x4_grid(self):
        img = np.arange(16, dtype=np.float64).reshape(4, 4)
        ps = extract_patches(img, 2)
        expected = [
            [[0, 1], [4, 5]],
            [[2, 3], [6, 7]],
            [[8, 9], [12, 13]],
            [[10, 11], [14, 15]],
        ]
        np.testing.assert_array_equal(ps.patches, np.array(expected, dtype=np.float64))

    def test_round_trip_exact(self, rng):
        for h, w, s in [(8, 8, 2), (9, 7, 3), (10, 6, 4), (5, 5, 5)]:
            img = rng.random((h, w))
            ps = extract_patches(img, s)
            np.testing.assert_array_equal(reassemble_patches(ps, h, w), img)

    def test_zero_padding_on_ragged_grid(self):
        img = np.ones((5, 5))
        ps = extract_patches(img, 2)  # tiles are 3x3, bottom/right padded
        assert ps.patches.shape == (4, 3, 3)
        assert ps.patches[3, 2, 2] == 0.0  # padded corner
        np.testing.assert_array_equal(reassemble_patches(ps, 5, 5), img)

    def test_oversized_scale_is_rejected(self, rng):
        with pytest.raises(ParameterError):
            extract_patches(rng.random((4, 9)), 5)


class TestL1Mean:
    def test_identical_arrays_give_zero(self, rng):
        a = rng.random((3, 4, 5))
        assert l1_mean(a, a) == 0.0

    def test_zeros_vs_ones_gives_one(self):
        assert l1_mean(np.zeros((2, 3)), np.ones((2, 3))) == 1.0

    def test_matches_scalar_loop_oracle(self, rng):
        a = rng.random((2, 5, 4))
        b = rng.random((2, 5, 4))
        acc = 0.0
        for idx in np.ndindex(a.shape):
            acc += abs(a[idx] - b[idx])
        assert l1_mean(a, b) == pytest.approx(acc / a.size, abs=1e-12)

    def test_shape_mismatch_is_rejected(self, rng):
        with pytest.raises(ShapeMismatchError):
            l1_mean(rng.random((2, 3)), rng.random((3, 2)))
