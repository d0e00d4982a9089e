import io

import numpy as np
import PIL.Image
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rriqa.color import (
    ColorImage,
    ColorSpace,
    analysis_planes,
    convert,
    decode_image,
    hsv_to_rgb,
    rgb_to_cielab,
    rgb_to_hsv,
    rgb_to_ycrcb,
)
from rriqa.errors import ContractError, DecodeError

# gray mid-tone CIELAB luminance, frozen from an independent scalar
# evaluation of the sRGB -> XYZ -> Lab reference formulas
GRAY_05_L = 53.38896474111431


def one_pixel(r, g, b):
    return ColorImage(ColorSpace.RGB, np.array([[[r, g, b]]], dtype=float))


def png_bytes(mode, size, color):
    buf = io.BytesIO()
    PIL.Image.new(mode, size, color).save(buf, "PNG")
    return buf.getvalue()


class TestDecode:
    def test_red_pixel(self):
        img = decode_image(png_bytes("RGB", (1, 1), (255, 0, 0)))
        assert img.space is ColorSpace.RGB
        np.testing.assert_array_equal(img.data[0, 0], [1.0, 0.0, 0.0])

    def test_gray_replicated(self):
        img = decode_image(png_bytes("L", (2, 2), 128))
        assert img.data.shape == (2, 2, 3)
        np.testing.assert_allclose(img.data, 128 / 255)

    def test_bmp_supported(self):
        buf = io.BytesIO()
        PIL.Image.new("RGB", (3, 2), (10, 20, 30)).save(buf, "BMP")
        img = decode_image(buf.getvalue())
        assert (img.width, img.height) == (3, 2)
        np.testing.assert_allclose(img.data[0, 0], np.array([10, 20, 30]) / 255)

    def test_corrupt_header(self):
        with pytest.raises(DecodeError):
            decode_image(b"\x89PNG\r\n\x1a\nnot-actually-a-png")

    def test_truncated_stream(self):
        raw = png_bytes("RGB", (32, 32), (1, 2, 3))
        with pytest.raises(DecodeError):
            decode_image(raw[: len(raw) // 2])


class TestHsv:
    def test_pure_red(self):
        out = rgb_to_hsv(one_pixel(1, 0, 0)).data[0, 0]
        np.testing.assert_allclose(out, [0.0, 1.0, 1.0])

    def test_gray_axis(self):
        out = rgb_to_hsv(one_pixel(0.5, 0.5, 0.5)).data[0, 0]
        np.testing.assert_allclose(out, [0.0, 0.0, 0.5])

    def test_cyan(self):
        # hexcone formula by hand: max=G tie-broken to G branch, C=1,
        # H = 60 * ((B - R)/C + 2) = 180
        out = rgb_to_hsv(one_pixel(0, 1, 1)).data[0, 0]
        np.testing.assert_allclose(out, [180.0, 1.0, 1.0])

    def test_wrong_space_rejected(self):
        hsv = rgb_to_hsv(one_pixel(0.2, 0.4, 0.6))
        with pytest.raises(ContractError):
            rgb_to_hsv(hsv)

    def test_round_trip(self, rng):
        img = ColorImage(ColorSpace.RGB, rng.uniform(0, 1, (24, 16, 3)))
        back = hsv_to_rgb(rgb_to_hsv(img))
        np.testing.assert_allclose(back.data, img.data, atol=1e-4)

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=50)
    def test_achromatic_has_zero_saturation(self, gray):
        out = rgb_to_hsv(one_pixel(gray, gray, gray)).data[0, 0]
        assert out[0] == 0.0
        assert out[1] == 0.0

    def test_hue_range(self, rng):
        img = ColorImage(ColorSpace.RGB, rng.uniform(0, 1, (32, 32, 3)))
        hue = rgb_to_hsv(img).data[..., 0]
        assert hue.min() >= 0.0
        assert hue.max() < 360.0


class TestYCrCb:
    def test_white(self):
        np.testing.assert_allclose(rgb_to_ycrcb(one_pixel(1, 1, 1)).data[0, 0],
                                   [1.0, 0.5, 0.5], atol=1e-12)

    def test_black(self):
        np.testing.assert_allclose(rgb_to_ycrcb(one_pixel(0, 0, 0)).data[0, 0],
                                   [0.0, 0.5, 0.5])

    def test_red_matrix_evaluation(self):
        out = rgb_to_ycrcb(one_pixel(1, 0, 0)).data[0, 0]
        np.testing.assert_allclose(
            out, [0.299, 0.5 + 0.701 * 0.713, 0.5 - 0.299 * 0.564], atol=1e-12)

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=50)
    def test_achromatic_has_centered_chroma(self, gray):
        out = rgb_to_ycrcb(one_pixel(gray, gray, gray)).data[0, 0]
        np.testing.assert_allclose(out[1:], [0.5, 0.5], atol=1e-12)

    def test_wrong_space_rejected(self):
        with pytest.raises(ContractError):
            rgb_to_ycrcb(rgb_to_hsv(one_pixel(0.1, 0.2, 0.3)))


class TestCielab:
    def test_white_point(self):
        out = rgb_to_cielab(one_pixel(1, 1, 1)).data[0, 0]
        assert out[0] == pytest.approx(100.0, abs=1e-4)
        assert abs(out[1]) < 0.01
        assert abs(out[2]) < 0.01

    def test_black(self):
        np.testing.assert_allclose(rgb_to_cielab(one_pixel(0, 0, 0)).data[0, 0],
                                   [0.0, 0.0, 0.0], atol=1e-12)

    def test_mid_gray(self):
        out = rgb_to_cielab(one_pixel(0.5, 0.5, 0.5)).data[0, 0]
        assert out[0] == pytest.approx(GRAY_05_L, abs=1e-9)
        assert abs(out[1]) < 0.01
        assert abs(out[2]) < 0.01

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=50)
    def test_achromatic_stays_neutral(self, gray):
        out = rgb_to_cielab(one_pixel(gray, gray, gray)).data[0, 0]
        assert abs(out[1]) < 0.01
        assert abs(out[2]) < 0.01
        assert 0.0 <= out[0] <= 100.0 + 1e-9

    def test_wrong_space_rejected(self):
        with pytest.raises(ContractError):
            rgb_to_cielab(rgb_to_ycrcb(one_pixel(0.1, 0.2, 0.3)))


class TestConversionStructure:
    @pytest.mark.parametrize("space", list(ColorSpace))
    def test_pixelwise_commutes_with_permutation(self, space, rng):
        img = ColorImage(ColorSpace.RGB, rng.uniform(0, 1, (8, 8, 3)))
        perm = rng.permutation(64)
        converted_then_permuted = convert(img, space).data.reshape(64, 3)[perm]
        permuted = ColorImage(ColorSpace.RGB, img.data.reshape(64, 3)[perm].reshape(8, 8, 3))
        permuted_then_converted = convert(permuted, space).data.reshape(64, 3)
        np.testing.assert_allclose(converted_then_permuted, permuted_then_converted,
                                   atol=1e-12)

    def test_convert_identity(self, rng):
        img = ColorImage(ColorSpace.RGB, rng.uniform(0, 1, (4, 4, 3)))
        assert convert(img, ColorSpace.RGB) is img

    def test_analysis_planes_rescales_hue(self, rng):
        img = ColorImage(ColorSpace.RGB, rng.uniform(0, 1, (8, 8, 3)))
        hsv = convert(img, ColorSpace.HSV)
        planes = analysis_planes(hsv)
        np.testing.assert_allclose(planes[..., 0], hsv.data[..., 0] / 360.0)
        np.testing.assert_array_equal(planes[..., 1:], hsv.data[..., 1:])
        # original image untouched
        assert planes is not hsv.data

    def test_analysis_planes_passthrough(self, rng):
        img = ColorImage(ColorSpace.RGB, rng.uniform(0, 1, (8, 8, 3)))
        assert analysis_planes(img) is img.data
