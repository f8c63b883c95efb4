import math

import pytest

from egostory.core import geometry
from egostory.schemas import Rect


def box(x, y, w, h):
    return Rect(x=x, y=y, w=w, h=h)


def test_iou_identical_boxes():
    assert geometry.iou(box(0, 0, 10, 10), box(0, 0, 10, 10)) == 1.0


def test_iou_of_a_box_with_itself_is_exactly_one():
    face = box(454.42, 12.43, 110, 110)
    assert geometry.iou(face, face) == 1.0
    assert geometry.iou(face, box(454.42, 12.43, 110, 110)) == 1.0
    assert geometry.max_iou(face, [box(0, 0, 5, 5), face]) == 1.0
    assert geometry.iou(box(3, 3, 0, 0), box(3, 3, 0, 0)) == 0.0


def test_overlap_never_exceeds_one():
    for i in range(200):
        a = box(0.1 * i + 0.37, 0.07 * i + 1.13, 33.3 + i, 17.9 + i)
        shifted = box(a.x + 1e-9, a.y, a.w, a.h)
        assert 0.0 <= geometry.iou(a, shifted) <= 1.0


def test_iou_half_shifted_box():
    assert geometry.iou(box(0, 0, 10, 10), box(5, 0, 10, 10)) == pytest.approx(1 / 3)


def test_iou_left_half():
    assert geometry.iou(box(0, 0, 5, 10), box(0, 0, 10, 10)) == pytest.approx(0.5)


def test_iou_disjoint_and_touching():
    assert geometry.iou(box(0, 0, 10, 10), box(50, 50, 10, 10)) == 0.0
    # [x, x + w) spans: boxes sharing an edge do not overlap
    assert geometry.iou(box(0, 0, 10, 10), box(10, 0, 10, 10)) == 0.0


def test_max_iou_without_candidates():
    assert geometry.max_iou(box(0, 0, 10, 10), []) == 0.0


def test_frame_measures():
    assert geometry.frame_center(320, 480) == (160.0, 240.0)
    assert geometry.frame_diagonal(320, 480) == pytest.approx(576.89, abs=0.01)
    assert geometry.nearest_distance((10, 0), [(0, 0), (100, 0)]) == 10.0
    assert geometry.distance((0, 0), (3, 4)) == 5.0


def test_containment():
    assert geometry.rect_in_frame(box(0, 0, 640, 480), 640, 480)
    assert not geometry.rect_in_frame(box(600, 0, 110, 10), 640, 480)
    assert not geometry.rect_in_frame(box(0, 0, 0, 10), 640, 480)
    assert geometry.point_in_rect((5, 5), box(0, 0, 10, 10))
    assert not geometry.point_in_frame((-1, 5), 640, 480)
    assert math.isclose(geometry.rect_area(box(0, 0, 4, 2.5)), 10.0)


def test_frame_excludes_its_far_edges():
    assert geometry.point_in_frame((0, 0), 640, 480)
    assert geometry.point_in_frame((639.99, 479.99), 640, 480)
    assert not geometry.point_in_frame((640, 5), 640, 480)
    assert not geometry.point_in_frame((5, 480), 640, 480)
