import json

import pytest

import rvgcore


def test_box_overlap():
    assert rvgcore.iou([0, 0, 1, 1], [0.5, 0, 1.5, 1]) == pytest.approx(1 / 3)
    assert rvgcore.giou([0, 0, 1, 1], [1, 1, 2, 2]) == -0.5


def test_nms_keeps_best_of_duplicates():
    boxes = [[0.1, 0.1, 0.4, 0.4], [0.1, 0.1, 0.4, 0.4], [0.6, 0.6, 0.9, 0.9]]
    assert rvgcore.nms(boxes, [0.3, 0.9, 0.5]) == [1, 2]
    with pytest.raises(rvgcore.InvalidArgument):
        rvgcore.nms(boxes, [0.1])


def test_cost_model():
    assert rvgcore.total_overhead(3, 300) == 18.093
    parts = dict(rvgcore.component_breakdown(2, 10))
    assert parts["tracking"] == pytest.approx(0.36)
    assert rvgcore.recommend_tsf("fast_motion,short_simple") == "enable_if_accuracy_critical"


def test_cli_round_trip():
    code, out, _ = rvgcore.cli(["cost", "estimate", "--targets", "1", "--frames", "300"])
    assert code == 0
    assert json.loads(out)["total"] == 6.093
    code, _, err = rvgcore.cli([])
    assert code == 1 and err
