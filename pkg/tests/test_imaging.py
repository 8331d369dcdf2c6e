import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from salpres.errors import DomainError, ImageTypeError
from salpres.imaging import (
    BINOMIAL_KERNEL,
    RasterImage,
    ResizePolicy,
    binomial_blur,
    downsample_to_height,
    gamma_compress,
    gamma_expand,
    hc_to_lg,
    resize_bicubic,
    srgb_to_luminance,
)

from conftest import image_from

# Reference value for gamma_expand(0.5), evaluated independently from the
# closed form ((0.5 + 0.055) / 1.055) ** 2.4 with a high-precision calculator.
GAMMA_HALF = 0.21404114048223255

# Independent loop-based Catmull-Rom resampler output for the 4x4 ramp
# (r*4 + c)/15 halved to 2x2 (replicate edges, half-pixel centers).
RAMP_HALVED = np.array(
    [
        [0.14583333333333334, 0.2875],
        [0.7125, 0.8541666666666666],
    ]
)


class TestGamma:
    def test_endpoints_exact(self):
        assert gamma_expand(0.0) == 0.0
        assert gamma_expand(1.0) == 1.0
        assert gamma_compress(0.0) == 0.0
        # 1.055*1 - 0.055 is one ulp shy of 1.0 in binary; the 8-bit
        # quantizer still lands on code 255, so don't demand exactness.
        assert abs(gamma_compress(1.0) - 1.0) <= 2e-16

    def test_half(self):
        assert abs(gamma_expand(0.5) - GAMMA_HALF) < 1e-4

    def test_half_roundtrip(self):
        assert abs(gamma_compress(GAMMA_HALF) - 0.5) < 1e-4

    def test_breakpoint_continuity(self):
        lo = gamma_expand(0.04045 - 1e-12)
        hi = gamma_expand(0.04045 + 1e-12)
        assert abs(hi - lo) < 1e-6

    def test_roundtrip_grid(self):
        x = np.linspace(0.0, 1.0, 10_000)
        err = np.abs(gamma_compress(gamma_expand(x)) - x)
        assert err.max() <= 1e-6

    def test_scalar_in_scalar_out(self):
        assert isinstance(gamma_expand(0.3), float)
        assert isinstance(gamma_compress(0.3), float)

    @pytest.mark.parametrize("bad", [-0.1, 1.1])
    def test_domain_errors(self, bad):
        with pytest.raises(DomainError):
            gamma_expand(bad)
        with pytest.raises(DomainError):
            gamma_compress(bad)

    def test_array_domain_error(self):
        with pytest.raises(DomainError):
            gamma_expand(np.array([0.2, 1.5]))

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=200, deadline=None)
    def test_roundtrip_property(self, x):
        assert abs(gamma_compress(gamma_expand(x)) - x) <= 1e-6

    def test_monotone(self):
        x = np.linspace(0.0, 1.0, 2001)
        assert np.all(np.diff(gamma_expand(x)) > 0)
        assert np.all(np.diff(gamma_compress(x)) > 0)


class TestLuminance:
    def test_white_exact(self):
        img = image_from(np.ones((2, 2, 3)), encoding="srgb-gamma")
        out = srgb_to_luminance(img)
        assert out.channels == 1
        assert out.encoding == "linear"
        assert np.all(out.data == 1.0)

    def test_green_exact(self):
        px = np.zeros((1, 1, 3))
        px[..., 1] = 1.0
        out = srgb_to_luminance(image_from(px, encoding="srgb-gamma"))
        assert out.data[0, 0] == 0.7152

    def test_black(self):
        out = srgb_to_luminance(image_from(np.zeros((3, 4, 3)), encoding="srgb-gamma"))
        assert np.all(out.data == 0.0)

    def test_achromatic_equals_gamma_expand(self):
        v = np.linspace(0.0, 1.0, 97)
        img = image_from(np.repeat(v.reshape(1, -1, 1), 3, axis=2), encoding="srgb-gamma")
        out = srgb_to_luminance(img)
        assert np.abs(out.data[0] - gamma_expand(v)).max() < 1e-12

    def test_dims_preserved(self, rng):
        img = image_from(rng.random((7, 11, 3)), encoding="srgb-gamma")
        out = srgb_to_luminance(img)
        assert (out.width, out.height) == (11, 7)

    def test_rejects_single_channel(self):
        with pytest.raises(ImageTypeError):
            srgb_to_luminance(image_from(np.zeros((4, 4)), encoding="srgb-gamma"))

    def test_rejects_linear_input(self):
        with pytest.raises(ImageTypeError):
            srgb_to_luminance(image_from(np.zeros((4, 4, 3)), encoding="linear"))


class TestBinomialBlur:
    def test_kernel_sum(self):
        # The 25 weights, written out, add up to 54.
        k = [
            [1, 1, 1, 1, 1],
            [1, 4, 4, 4, 1],
            [1, 4, 6, 4, 1],
            [1, 4, 4, 4, 1],
            [1, 1, 1, 1, 1],
        ]
        assert sum(sum(row) for row in k) == 54
        assert np.array_equal(BINOMIAL_KERNEL, np.array(k, dtype=np.float64))

    def test_constant_preserved(self):
        img = image_from(np.full((9, 13), 0.37))
        out = binomial_blur(img)
        assert np.abs(out.data - 0.37).max() < 1e-12

    def test_impulse_reproduces_kernel(self):
        vals = np.zeros((11, 11))
        vals[5, 5] = 1.0
        out = binomial_blur(image_from(vals)).data
        expect = np.zeros((11, 11))
        expect[3:8, 3:8] = BINOMIAL_KERNEL / 54.0
        assert np.abs(out - expect).max() < 1e-15

    def test_global_mean_near_preserved(self, rng):
        vals = rng.random((40, 60))
        out = binomial_blur(image_from(vals)).data
        assert abs(out.mean() - vals.mean()) < 1e-3

    def test_range(self, rng):
        out = binomial_blur(image_from(rng.random((16, 16)))).data
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_rejects_color(self, rng):
        with pytest.raises(ImageTypeError):
            binomial_blur(image_from(rng.random((4, 4, 3))))

    def test_tiny_images(self):
        # 1x1 and 1xN stay well-defined under replicate padding.
        assert binomial_blur(image_from([[0.5]])).data[0, 0] == pytest.approx(0.5, abs=1e-12)
        row = image_from(np.linspace(0.2, 0.8, 7).reshape(1, 7))
        assert binomial_blur(row).data.shape == (1, 7)


class TestResizeBicubic:
    def test_identity_same_dims(self, rng):
        img = image_from(rng.random((13, 17)))
        out = resize_bicubic(img, 17, 13)
        assert np.array_equal(out.data, img.data)

    def test_constant_any_size(self):
        img = image_from(np.full((5, 7), 0.43))
        out = resize_bicubic(img, 4, 3)
        assert out.data.shape == (3, 4)
        assert np.abs(out.data - 0.43).max() < 1e-12

    def test_ramp_halved_matches_reference(self):
        ramp = np.array([[(r * 4 + c) / 15.0 for c in range(4)] for r in range(4)])
        out = resize_bicubic(image_from(ramp), 2, 2)
        assert np.abs(out.data - RAMP_HALVED).max() < 1e-4

    def test_color_matches_per_channel(self, rng):
        arr = rng.random((12, 10, 3))
        out = resize_bicubic(image_from(arr), 5, 6).data
        for c in range(3):
            chan = resize_bicubic(image_from(arr[..., c]), 5, 6).data
            assert np.abs(out[..., c] - chan).max() < 1e-12

    def test_zero_dims_error(self, rng):
        img = image_from(rng.random((4, 4)))
        with pytest.raises(DomainError):
            resize_bicubic(img, 0, 4)
        with pytest.raises(DomainError):
            resize_bicubic(img, 4, 0)

    def test_upscale_range_clamped(self):
        # Catmull-Rom overshoots near hard edges; output must stay in [0, 1].
        vals = np.zeros((8, 8))
        vals[:, 4:] = 1.0
        out = resize_bicubic(image_from(vals), 32, 32).data
        assert out.min() >= 0.0 and out.max() <= 1.0


class TestDownsampleToHeight:
    def test_fullhd_preserve(self):
        img = image_from(np.zeros((1080, 1920)))
        out = downsample_to_height(img, ResizePolicy())
        assert (out.width, out.height) == (114, 64)

    def test_fullhd_fixed_width(self):
        img = image_from(np.zeros((1080, 1920)))
        out = downsample_to_height(img, ResizePolicy(aspect_mode="fixed-width", width=120))
        assert (out.width, out.height) == (120, 64)

    def test_square_power_of_two(self):
        img = image_from(np.zeros((128, 128)))
        out = downsample_to_height(img)
        assert (out.width, out.height) == (64, 64)

    def test_idempotent_at_target(self, rng):
        img = image_from(rng.random((64, 91)))
        out = downsample_to_height(img, ResizePolicy())
        assert np.abs(out.data - img.data).max() <= 1e-6

    def test_too_short_error(self):
        with pytest.raises(DomainError):
            downsample_to_height(image_from(np.zeros((63, 80))))

    def test_checkerboard_antialiased(self):
        yy, xx = np.indices((128, 128))
        board = ((yy + xx) % 2).astype(np.float64)
        out = downsample_to_height(image_from(board))
        assert out.data.std() < 0.05

    def test_policy_output_sizes(self):
        pol = ResizePolicy()
        assert pol.output_size(1920, 1080) == (114, 64)
        assert pol.output_size(1280, 1024) == (80, 64)
        assert ResizePolicy(aspect_mode="fixed-width", width=120).output_size(1280, 1024) == (120, 64)

    def test_policy_validation(self):
        with pytest.raises(DomainError):
            ResizePolicy(target_height=0)
        with pytest.raises(DomainError):
            ResizePolicy(aspect_mode="fixed-width")
        with pytest.raises(DomainError):
            ResizePolicy(aspect_mode="stretch")
        with pytest.raises(DomainError):
            ResizePolicy(width=50)

    def test_rejects_color(self, rng):
        with pytest.raises(ImageTypeError):
            downsample_to_height(image_from(rng.random((128, 128, 3))))


class TestHcToLg:
    def test_white_fullhd(self):
        img = image_from(np.ones((1080, 1920, 3)), encoding="srgb-gamma")
        out = hc_to_lg(img)
        assert (out.width, out.height) == (114, 64)
        assert out.encoding == "linear"
        assert np.abs(out.data - 1.0).max() < 1e-9

    def test_achromatic_commutes_with_grayscale_first(self, rng):
        v = rng.random((160, 200))
        color = image_from(np.repeat(v[..., None], 3, axis=2), encoding="srgb-gamma")
        pol = ResizePolicy(target_height=40)
        a = hc_to_lg(color, pol).data
        b = downsample_to_height(image_from(gamma_expand(v)), pol).data
        assert np.abs(a - b).max() <= 1e-5

    def test_range(self, rng):
        img = image_from(rng.random((140, 100, 3)), encoding="srgb-gamma")
        out = hc_to_lg(img, ResizePolicy(target_height=32))
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0


class TestRasterImage:
    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            RasterImage(width=3, height=2, channels=1, data=np.zeros((3, 3)))

    def test_out_of_range_rejected(self):
        with pytest.raises(DomainError):
            image_from(np.array([[1.5]]))
        with pytest.raises(DomainError):
            image_from(np.array([[-0.1]]))

    def test_bad_channel_count(self):
        with pytest.raises(ImageTypeError):
            image_from(np.zeros((4, 4, 2)))

    def test_bad_encoding(self):
        with pytest.raises(DomainError):
            image_from(np.zeros((2, 2)), encoding="rec2020")
