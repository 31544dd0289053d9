import math

import pytest

import detfuse as df


def test_box_and_iou():
    a = df.Box(0, 0, 10, 10)
    b = df.Box(0, 0, 10, 9)
    assert df.area(a) == 100.0
    assert df.iou(a, b) == pytest.approx(0.9)
    assert a.as_tuple() == (0.0, 0.0, 10.0, 10.0)
    with pytest.raises(df.ContractError):
        df.Box(5, 0, 1, 1)


def test_merge_boxes_weighting_and_support():
    dets = [
        df.Detection(df.Box(0, 0, 10, 10), 1, 0.8, 0, "img"),
        df.Detection(df.Box(1, 1, 11, 11), 1, 0.2, 1, "img"),
        df.Detection(df.Box(50, 50, 60, 60), 1, 0.9, 2, "img"),
    ]
    out = df.merge_boxes(dets)
    assert len(out) == 2
    assert out[0].prob == pytest.approx(0.9)
    assert out[0].support == 1
    assert out[1].box.x1 == pytest.approx(0.2)
    assert out[1].support == 2
    assert out[1].prob == pytest.approx(0.4)
    plain = df.merge_boxes(dets, plain_max=True)
    assert [c.prob for c in plain] == pytest.approx([0.9, 0.8])
    with pytest.raises(df.DegenerateWeightsError):
        df.summarize([df.Detection(df.Box(0, 0, 1, 1), 0, 0.0)])


def test_average_precision_worked_example():
    curve = df.build_pr_curve(0, [True, False, True], 2)
    assert df.average_precision(curve, 10).ap == pytest.approx(13 / 15, abs=1e-12)
    assert df.mean_ap([df.APResult(0, 1.0), df.APResult(1, 0.0)]) == 0.5
    assert df.precision_recall(3, 1, 0) == (0.75, 1.0)


def test_evaluate_dataset_perfect_and_synthetic():
    gts = df.make_fixture(images=4, classes=3, boxes_per_image=3, seed=1)
    preds = [df.Detection(g.box, g.class_id, 1.0, 0, g.image_id) for g in gts]
    rep = df.evaluate_dataset(preds, gts)
    assert rep.map == 1.0
    assert rep.detection_rate == 1.0

    noise = df.NoiseModel()
    noise.jitter_sigma = 3.0
    noise.fp_rate = 1.0
    noise.seed = 11
    models = df.generate_ensemble(gts, noise, 3)
    assert len(models) == 3
    assert all(d.model_id == i for i, m in enumerate(models) for d in m)
    assert 0.0 <= df.evaluate_dataset(models[0], gts).map <= 1.0
    single = df.generate_model_detections(gts, noise, 0)
    assert single == models[0]
    m = df.match_detections([df.Detection(gts[0].box, gts[0].class_id, 0.5, 0, gts[0].image_id)], [gts[0]])
    assert m.outcomes[0].verdict == df.Verdict.TP


def test_yolo_loss_examples():
    t = df.CellBoxTarget(0.2, 0.1, 0.3, 0.4, True, 0.7, 1)
    p = df.CellBoxPrediction(0.5, 0.5, 0.3, 0.4, 0.7, [0.0, 1.0])
    loss = df.yolo_loss([[p]], [[t]])
    assert loss.err_center == pytest.approx(0.25)
    assert loss.total == pytest.approx(1.25)
    q = df.CellBoxPrediction(0.3, 0.3, 0.2, 0.2, 0.4, [0.5, 0.5])
    assert df.yolo_loss([[q]], [[df.CellBoxTarget()]]).err_conf == pytest.approx(0.08)


def test_detection_file_round_trip(tmp_path):
    dets = [df.Detection(df.Box(1.25, 2, 30, 40.5), 3, 0.123456789, 2, "a")]
    path = tmp_path / "d.jsonl"
    df.write_detection_file(str(path), dets)
    back = df.read_detection_file(str(path))
    assert back == dets
    path.write_text('{"image_id":"a"}\n')
    with pytest.raises(df.ParseError):
        df.read_detection_file(str(path))


def test_version():
    assert isinstance(df.__version__, str) and df.__version__
    assert math.isfinite(df.iou(df.Box(0, 0, 1, 1), df.Box(2, 2, 3, 3)))
