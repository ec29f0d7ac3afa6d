import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pccc.errors import EmptyMaskError, SingularMatrixError, ValidationError, ZeroVectorError
from pccc.imaging import (
    NEUTRAL,
    angular_error,
    apply_awb,
    label_illuminant,
    linear_to_srgb,
    make_illuminant,
    normalize,
    remove_tuning,
    srgb_to_linear,
)

unit = st.floats(0.0, 1.0, allow_nan=False)
positive3 = arrays(np.float64, 3, elements=st.floats(1e-3, 10.0))


def px(*v):
    return np.array(v, dtype=float).reshape(1, 1, 3)


class TestSrgb:
    def test_fixed_points(self):
        assert srgb_to_linear(px(0, 0, 0)).max() == 0.0
        assert np.all(srgb_to_linear(px(1, 1, 1)) == 1.0)

    def test_half(self):
        # ((0.5 + 0.055) / 1.055) ** 2.4, evaluated by hand
        assert srgb_to_linear(px(0.5, 0.5, 0.5))[0, 0, 0] == pytest.approx(0.21404, abs=5e-6)

    def test_linear_toe(self):
        assert srgb_to_linear(px(0.04, 0.02, 0.0))[0, 0, 0] == pytest.approx(0.04 / 12.92)

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            srgb_to_linear(px(1.2, 0, 0))

    def test_breakpoint_round_trip(self):
        x = px(0.04045, 0.04045, 0.04045)
        np.testing.assert_allclose(linear_to_srgb(srgb_to_linear(x)), x, atol=1e-15)

    @given(arrays(np.float64, (4, 4, 3), elements=unit))
    def test_monotone_and_inverse(self, img):
        lin = srgb_to_linear(img)
        assert np.all((lin >= 0) & (lin <= 1))
        np.testing.assert_allclose(linear_to_srgb(lin), img, atol=1e-12)

    @given(unit, unit)
    def test_monotone(self, a, b):
        la, lb = srgb_to_linear(px(a, a, a))[0, 0, 0], srgb_to_linear(px(b, b, b))[0, 0, 0]
        assert (la <= lb) == (a <= b) or la == lb


class TestTuning:
    def test_identity(self, rng):
        img = rng.uniform(size=(5, 4, 3))
        np.testing.assert_array_equal(remove_tuning(img, np.eye(3)), img)

    def test_diag(self):
        out = remove_tuning(px(2, 1, 1), np.diag([2.0, 1.0, 1.0]))
        np.testing.assert_allclose(out[0, 0], [1, 1, 1])

    def test_singular(self):
        m = np.eye(3)
        m[1] = 0
        with pytest.raises(SingularMatrixError):
            remove_tuning(px(1, 1, 1), m)

    def test_negative_clamped(self):
        m = np.array([[1.0, 0.5, 0], [0, 1, 0], [0, 0, 1]])
        out = remove_tuning(px(0.1, 1, 1), m)
        assert out.min() == 0.0

    @given(arrays(np.float64, (3, 3), elements=st.floats(-0.2, 0.2)))
    def test_round_trip(self, noise):
        m = np.eye(3) + noise
        rng = np.random.default_rng(0)
        sensor = rng.uniform(0.1, 1, size=(3, 3, 3))
        tuned = sensor @ m.T
        if tuned.min() < 0:
            return
        np.testing.assert_allclose(remove_tuning(tuned, m), sensor, atol=1e-9)


class TestLabel:
    def test_colour_patch(self):
        img = np.tile([0.2, 0.4, 0.4], (4, 4, 1))
        mask = np.zeros((4, 4), bool)
        mask[1:3, 1:3] = True
        np.testing.assert_allclose(label_illuminant(img, mask), [1 / 3, 2 / 3, 2 / 3])

    def test_achromatic(self):
        img = np.full((3, 3, 3), 0.37)
        np.testing.assert_allclose(label_illuminant(img, np.ones((3, 3), bool)), NEUTRAL)

    def test_empty_mask(self):
        with pytest.raises(EmptyMaskError):
            label_illuminant(np.ones((3, 3, 3)), np.zeros((3, 3), bool))

    def test_median(self):
        img = np.tile([0.2, 0.4, 0.4], (3, 1, 1))
        img[0, 0] = [5, 0, 0]  # outlier
        e = label_illuminant(img, np.ones((3, 1), bool), statistic="median")
        np.testing.assert_allclose(e, [1 / 3, 2 / 3, 2 / 3])

    @given(positive3)
    def test_unit_norm(self, c):
        e = label_illuminant(np.tile(c, (2, 2, 1)), np.ones((2, 2), bool))
        assert np.linalg.norm(e) == pytest.approx(1.0)


class TestAwb:
    def test_neutral(self, rng):
        img = rng.uniform(size=(4, 4, 3))
        np.testing.assert_allclose(apply_awb(img, NEUTRAL), img, rtol=1e-15)

    def test_red_cast(self):
        out = apply_awb(px(2, 1, 1), normalize([2, 1, 1]))
        np.testing.assert_allclose(out[0, 0], [1, 1, 1])

    def test_zero_component(self):
        with pytest.raises(ZeroVectorError):
            apply_awb(px(1, 1, 1), np.array([0.0, 0.7, 0.7]))

    @given(positive3, positive3)
    def test_cast_removed(self, surface, light):
        e = make_illuminant(light)
        out = apply_awb(np.tile(e * 0.5, (2, 2, 1)), e)
        # a grey surface under e renders grey
        assert angular_error(out[0, 0], NEUTRAL) < 1e-6


class TestAngularError:
    def test_identical(self):
        assert angular_error([0.3, 0.5, 0.2], [0.3, 0.5, 0.2]) == 0.0

    def test_orthogonal(self):
        assert angular_error([1, 0, 0], [0, 1, 0]) == pytest.approx(90.0)

    def test_diagonal(self):
        assert angular_error(NEUTRAL, [1, 0, 0]) == pytest.approx(54.7356, abs=5e-5)

    @given(positive3, positive3, st.floats(0.1, 10))
    def test_symmetric_scale_invariant(self, a, b, s):
        e = angular_error(a, b)
        assert e == pytest.approx(angular_error(b, a))
        assert e == pytest.approx(angular_error(s * a, b), abs=1e-9)
        assert 0 <= e <= 180


class TestMakeIlluminant:
    def test_normalizes(self):
        np.testing.assert_allclose(make_illuminant([2, 1, 1]), np.array([2, 1, 1]) / np.sqrt(6))

    @pytest.mark.parametrize("bad", [[0, 0, 0], [1, -1, 1], [1, 1], [np.nan, 1, 1]])
    def test_rejects(self, bad):
        with pytest.raises(ValidationError):
            make_illuminant(bad)


@given(positive3, positive3, positive3)
def test_triangle_inequality(a, b, c):
    assert angular_error(a, c) <= angular_error(a, b) + angular_error(b, c) + 1e-6


def test_awb_makes_neutral_patch_neutral():
    from pccc.bench.synth import random_scene, synth_generate

    for i in range(5):
        img, depth, gt = synth_generate(random_scene(np.random.default_rng(i), "achromatic"))
        out = apply_awb(img, gt)
        assert angular_error(label_illuminant(out, depth > 0), NEUTRAL) < 1e-4
