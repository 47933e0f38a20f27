import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from proctorpipe import BBox, CHEATING, ClassLabel, Detection, ImageBuffer, NOT_CHEATING, iou


class TestImageBuffer:
    def test_valid_image(self):
        img = ImageBuffer(np.zeros((4, 6, 3), dtype=np.uint8))
        assert img.width == 6
        assert img.height == 4
        assert img.channels == 3

    def test_rejects_wrong_channel_count(self):
        with pytest.raises(ValueError):
            ImageBuffer(np.zeros((4, 6, 1), dtype=np.uint8))

    def test_rejects_wrong_dtype(self):
        with pytest.raises(ValueError):
            ImageBuffer(np.zeros((4, 6, 3), dtype=np.float32))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            ImageBuffer(np.zeros((0, 6, 3), dtype=np.uint8))

    def test_pixels_are_immutable(self):
        img = ImageBuffer(np.zeros((2, 2, 3), dtype=np.uint8))
        with pytest.raises(ValueError):
            img.pixels[0, 0, 0] = 1


class TestBBox:
    def test_valid(self):
        box = BBox(1.0, 2.0, 3.0, 5.0)
        assert box.width == 2.0
        assert box.height == 3.0
        assert box.area == 6.0

    @pytest.mark.parametrize("coords", [(0, 0, 0, 10), (0, 0, 10, 0), (5, 5, 5, 5), (3, 1, 2, 4)])
    def test_rejects_degenerate(self, coords):
        with pytest.raises(ValueError):
            BBox(*coords)

    def test_clamped_inside(self):
        assert BBox(1, 1, 4, 4).clamped(10, 10) == BBox(1, 1, 4, 4)

    def test_clamped_partial(self):
        assert BBox(-5, -5, 4, 4).clamped(10, 10) == BBox(0, 0, 4, 4)

    def test_clamped_outside_is_none(self):
        assert BBox(20, 20, 30, 30).clamped(10, 10) is None


class TestIou:
    def test_identical(self):
        box = BBox(0, 0, 10, 10)
        assert iou(box, box) == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)) == 0.0

    def test_half_overlap(self):
        # intersection 50, union 150
        assert iou(BBox(0, 0, 10, 10), BBox(5, 0, 15, 10)) == pytest.approx(1 / 3)

    def test_touching_edges_is_zero(self):
        assert iou(BBox(0, 0, 10, 10), BBox(10, 0, 20, 10)) == 0.0

    @given(
        st.tuples(*[st.floats(-100, 100) for _ in range(4)]),
        st.tuples(*[st.floats(-100, 100) for _ in range(4)]),
    )
    def test_symmetric_and_bounded(self, a_raw, b_raw):
        def to_box(raw):
            x1, y1, dx, dy = raw
            return BBox(x1, y1, x1 + abs(dx) + 0.1, y1 + abs(dy) + 0.1)

        a, b = to_box(a_raw), to_box(b_raw)
        ab = iou(a, b)
        assert ab == iou(b, a)  # exact symmetry
        assert 0.0 <= ab <= 1.0

    def test_integer_grid_matches_cell_counting(self):
        # independent oracle: count unit cells covered by each box
        rng = np.random.default_rng(7)
        for _ in range(200):
            ax1, ay1 = rng.integers(0, 20, 2)
            bx1, by1 = rng.integers(0, 20, 2)
            a = BBox(ax1, ay1, ax1 + rng.integers(1, 15), ay1 + rng.integers(1, 15))
            b = BBox(bx1, by1, bx1 + rng.integers(1, 15), by1 + rng.integers(1, 15))
            cells_a = {(x, y) for x in range(int(a.x1), int(a.x2)) for y in range(int(a.y1), int(a.y2))}
            cells_b = {(x, y) for x in range(int(b.x1), int(b.x2)) for y in range(int(b.y1), int(b.y2))}
            expected = len(cells_a & cells_b) / len(cells_a | cells_b)
            assert iou(a, b) == pytest.approx(expected)


class TestDetection:
    def test_score_bounds(self):
        box = BBox(0, 0, 1, 1)
        Detection(box, 0, "person", 0.0)
        Detection(box, 0, "person", 1.0)
        with pytest.raises(ValueError):
            Detection(box, 0, "person", 1.5)


class TestClassLabel:
    def test_pairing(self):
        assert ClassLabel(1).name == "cheating"
        assert ClassLabel(0).name == "not_cheating"
        assert CHEATING.id == 1
        assert NOT_CHEATING.id == 0

    def test_rejects_mismatched_name(self):
        with pytest.raises(ValueError):
            ClassLabel(1, "not_cheating")

    def test_rejects_bad_id(self):
        with pytest.raises(ValueError):
            ClassLabel(2)

    def test_from_name(self):
        assert ClassLabel.from_name("cheating") == CHEATING
        with pytest.raises(ValueError):
            ClassLabel.from_name("Cheating")
