import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from proctorpipe import BBox, CHEATING, ImageBuffer, NOT_CHEATING, NormalizationSpec
from proctorpipe.classify import (
    IMAGENET_NORM,
    ROI_SHAPE,
    classify,
    crop,
    expand_box,
    preprocess_roi,
    softmax2,
)
from proctorpipe.errors import EmptyAfterClamp, ShapeMismatch

from conftest import make_image


class TestCrop:
    def test_interior_box(self):
        out = crop(make_image(100, 100, seed=1), BBox(10, 10, 60, 60))
        assert (out.width, out.height) == (50, 50)

    def test_clamped_box(self):
        img = make_image(100, 100, seed=2)
        out = crop(img, BBox(-10, -10, 50, 50))
        assert (out.width, out.height) == (50, 50)
        assert np.array_equal(out.pixels, img.pixels[0:50, 0:50])

    def test_fully_outside_raises(self):
        with pytest.raises(EmptyAfterClamp):
            crop(make_image(100, 100), BBox(200, 200, 300, 300))

    def test_crop_contains_expected_pixels(self):
        img = make_image(100, 100, seed=3)
        out = crop(img, BBox(20, 30, 40, 70))
        assert np.array_equal(out.pixels, img.pixels[30:70, 20:40])


class TestExpandBox:
    def test_zero_factor_is_identity(self):
        box = BBox(10, 10, 20, 20)
        assert expand_box(box, 0.0, 100, 100) == box

    def test_expansion_clamped(self):
        grown = expand_box(BBox(10, 10, 20, 20), 0.5, 100, 100)
        assert grown == BBox(5, 5, 25, 25)
        edge = expand_box(BBox(0, 0, 10, 10), 1.0, 100, 100)
        assert edge == BBox(0, 0, 20, 20)


class TestPreprocessRoi:
    def test_output_shape_any_input(self):
        for w, h in ((5, 7), (224, 224), (640, 480)):
            roi = preprocess_roi(make_image(w, h, seed=4))
            assert roi.shape == ROI_SHAPE
            assert roi.dtype == np.float32

    def test_normalization_fixed_point(self):
        # channel values equal to 255 * mean give an all-zero tensor
        spec = NormalizationSpec(mean=(0.4, 0.5, 0.6), std=(0.2, 0.2, 0.2))
        px = np.empty((10, 10, 3), dtype=np.uint8)
        px[..., 0], px[..., 1], px[..., 2] = 102, 128, 153  # 255 * (0.4, ~0.5, 0.6)
        roi = preprocess_roi(ImageBuffer(px), NormalizationSpec(
            mean=(102 / 255, 128 / 255, 153 / 255), std=(0.2, 0.2, 0.2)
        ))
        np.testing.assert_allclose(roi, 0.0, atol=1e-6)

    def test_all_white_red_channel_value(self):
        roi = preprocess_roi(make_image(32, 32, value=255), IMAGENET_NORM)
        expected = (1.0 - 0.485) / 0.229  # = 2.2489...
        np.testing.assert_allclose(roi[0, 0], expected, rtol=1e-4)
        assert roi[0, 0, 0, 0] == pytest.approx(2.2489, abs=1e-4)

    def test_channel_order_is_rgb(self):
        px = np.zeros((8, 8, 3), dtype=np.uint8)
        px[..., 0] = 255  # red only
        roi = preprocess_roi(ImageBuffer(px), IMAGENET_NORM)
        assert roi[0, 0].mean() > 0  # red channel positive after normalization
        assert roi[0, 1].mean() < 0
        assert roi[0, 2].mean() < 0


class TestNormalizationSpec:
    def test_rejects_nonpositive_std(self):
        with pytest.raises(ValueError):
            NormalizationSpec(std=(0.0, 0.2, 0.2))

    def test_defaults_are_imagenet(self):
        assert IMAGENET_NORM.mean == (0.485, 0.456, 0.406)
        assert IMAGENET_NORM.std == (0.229, 0.224, 0.225)


def fake_classifier_session(logits):
    """Stand-in session whose backend returns fixed logits."""
    from proctorpipe.runtime import ModelSession

    n_logits = len(logits)
    session = ModelSession(
        graph_path="<fake>",
        input_spec={"input": (1, 3, 224, 224)},
        output_spec={"logits": (1, n_logits)},
    )

    class _Fixed:
        def __init__(self, values):
            self.values = np.asarray(values, dtype=np.float32).reshape(1, -1)

        def run(self, feeds):
            return {"logits": self.values}

    session._backend = _Fixed(logits)
    return session


ZERO_ROI = np.zeros(ROI_SHAPE, dtype=np.float32)


class TestClassify:
    def test_tie_resolves_to_cheating(self):
        verdict = classify(ZERO_ROI, fake_classifier_session([0.0, 0.0]), 0.5)
        assert verdict.prob_cheating == pytest.approx(0.5)
        assert verdict.label == CHEATING

    def test_softmax_arithmetic(self):
        verdict = classify(ZERO_ROI, fake_classifier_session([2.0, 4.0]), 0.5)
        assert verdict.prob_cheating == pytest.approx(1 / (1 + math.exp(-2)), rel=1e-6)
        assert verdict.prob_cheating == pytest.approx(0.8808, abs=1e-4)
        assert verdict.label == CHEATING

    def test_confident_not_cheating(self):
        verdict = classify(ZERO_ROI, fake_classifier_session([5.0, -5.0]), 0.5)
        assert verdict.prob_cheating == pytest.approx(4.54e-5, rel=1e-2)
        assert verdict.label == NOT_CHEATING

    def test_threshold_is_configurable(self):
        session = fake_classifier_session([0.0, 1.0])  # prob_cheating ~ 0.731
        assert classify(ZERO_ROI, session, 0.9).label == NOT_CHEATING
        assert classify(ZERO_ROI, session, 0.5).label == CHEATING

    def test_bad_roi_shape_rejected(self):
        with pytest.raises(ShapeMismatch):
            classify(np.zeros((1, 3, 128, 128), np.float32), fake_classifier_session([0, 0]))

    def test_bad_logit_count_rejected(self):
        with pytest.raises(ShapeMismatch):
            classify(ZERO_ROI, fake_classifier_session([1.0, 2.0, 3.0]))

    def test_verdict_carries_bbox(self):
        box = BBox(5, 6, 7, 8)
        verdict = classify(ZERO_ROI, fake_classifier_session([0, 1]), bbox=box)
        assert verdict.bbox == box

    def test_toy_model_end_to_end(self, toy_classifier, classifier_manifest):
        gain = classifier_manifest["behavior"]["gain"]
        # all-black image: normalized mean is negative -> not_cheating
        dark = preprocess_roi(make_image(50, 50, value=0))
        verdict = classify(dark, toy_classifier)
        assert verdict.label == NOT_CHEATING
        expected = 1 / (1 + math.exp(-2 * gain * float(dark.mean())))
        assert verdict.prob_cheating == pytest.approx(expected, rel=1e-4)
        # all-white image: positive normalized mean -> cheating
        bright = preprocess_roi(make_image(50, 50, value=255))
        assert classify(bright, toy_classifier).label == CHEATING


class TestSoftmaxProperties:
    @given(a=st.floats(-50, 50), b=st.floats(-50, 50))
    def test_sums_to_one(self, a, b):
        p0, p1 = softmax2(a, b)
        assert abs(p0 + p1 - 1.0) < 1e-6

    @given(a=st.floats(-50, 50), b=st.floats(-50, 50), shift=st.floats(-100, 100))
    def test_shift_invariance(self, a, b, shift):
        p = softmax2(a, b)
        q = softmax2(a + shift, b + shift)
        assert p[0] == pytest.approx(q[0], abs=1e-6)
        assert p[1] == pytest.approx(q[1], abs=1e-6)

    def test_monotone_in_cheating_logit(self):
        fixed = 1.0
        probs = [softmax2(fixed, x)[1] for x in np.linspace(-10, 10, 41)]
        assert all(b > a for a, b in zip(probs, probs[1:]))
