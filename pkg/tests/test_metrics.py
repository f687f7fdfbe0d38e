import json

import numpy as np
import pytest

from skelgnn.errors import (
    DegenerateConfiguration,
    EmptyDataset,
    IoFailure,
    ShapeMismatch,
)
from skelgnn.metrics import (
    DEFAULT_AUC_THRESHOLDS,
    EvalReport,
    auc,
    error_histogram,
    hard_pose_comparison,
    hard_pose_report,
    hardest_count,
    hardest_indices,
    hardest_p_mean,
    histogram_table,
    mpjpe,
    pa_mpjpe,
    pck,
    per_sample_mpjpe,
    per_sample_pa_mpjpe,
    procrustes_align,
    procrustes_transform,
    root_relative,
)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def test_mpjpe(rng):
    gt = rng.normal(size=(17, 3))
    assert mpjpe(gt, gt) == 0.0
    assert mpjpe(gt + np.array([3.0, 4.0, 0.0]), gt) == pytest.approx(5.0, abs=1e-12)
    pred = rng.normal(size=(17, 3))
    brute = sum(
        np.sqrt(sum((pred[j, k] - gt[j, k]) ** 2 for k in range(3))) for j in range(17)
    )
    assert mpjpe(pred, gt) == pytest.approx(brute / 17, abs=1e-12)
    assert mpjpe(gt + 7.0, gt, root=0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ShapeMismatch):
        mpjpe(pred, gt[:16])


def test_root_relative(rng):
    poses = rng.normal(size=(4, 17, 3))
    rel = root_relative(poses, 2)
    np.testing.assert_array_equal(rel[:, 2], np.zeros((4, 3)))
    np.testing.assert_allclose(rel[:, 5], poses[:, 5] - poses[:, 2])


def test_procrustes_recovers_similarity(rng):
    for _ in range(20):
        pred = rng.normal(size=(17, 3)) * 100.0
        s, r = rng.uniform(0.5, 2.0), random_rotation(rng)
        t = rng.normal(size=3) * 50.0
        gt = s * pred @ r.T + t
        assert pa_mpjpe(pred, gt) <= 1e-9
        s_hat, r_hat, t_hat = procrustes_transform(pred, gt)
        assert s_hat == pytest.approx(s, rel=1e-10)
        np.testing.assert_allclose(r_hat, r, atol=1e-10)
        np.testing.assert_allclose(t_hat, t, atol=1e-8)


def test_procrustes_identity_and_reflection(rng):
    gt = rng.normal(size=(17, 3))
    np.testing.assert_allclose(procrustes_align(gt, gt), gt, rtol=0, atol=1e-12)
    mirrored = gt * np.array([-1.0, 1.0, 1.0])
    _, r, _ = procrustes_transform(mirrored, gt)
    assert np.linalg.det(r) == pytest.approx(1.0)
    assert pa_mpjpe(mirrored, gt) > 1e-3


def test_alignment_never_increases_squared_error(rng):
    for _ in range(50):
        gt = rng.normal(size=(17, 3))
        pred = gt + 0.3 * rng.normal(size=(17, 3))
        aligned = procrustes_align(pred, gt)
        assert ((aligned - gt) ** 2).sum() <= ((pred - gt) ** 2).sum() + 1e-12


def test_procrustes_degenerate():
    with pytest.raises(DegenerateConfiguration):
        procrustes_align(np.zeros((2, 3)), np.ones((2, 3)))
    with pytest.raises(DegenerateConfiguration):
        procrustes_align(np.arange(15.0).reshape(5, 3), np.ones((5, 3)))
    line = np.outer(np.arange(5.0), [1.0, 2.0, 3.0])
    with pytest.raises(DegenerateConfiguration):
        procrustes_align(line, line + 1.0)


def test_procrustes_collapsed_prediction(rng):
    for _ in range(5):
        gt = rng.normal(size=(17, 3)) * 100.0
        pred = np.tile(rng.normal(size=3), (17, 1))
        s, r, t = procrustes_transform(pred, gt)
        assert s == 0.0
        np.testing.assert_array_equal(r, np.eye(3))
        np.testing.assert_allclose(procrustes_align(pred, gt), np.tile(t, (17, 1)))
        centred = np.linalg.norm(gt - gt.mean(axis=0), axis=1).mean()
        assert pa_mpjpe(pred, gt) == pytest.approx(centred)
        assert np.isfinite(per_sample_pa_mpjpe(pred[None], gt[None])).all()


def test_per_sample_metrics(rng):
    gts = rng.normal(size=(6, 17, 3))
    preds = gts + rng.normal(size=(6, 17, 3))
    per = per_sample_mpjpe(preds, gts)
    assert per.shape == (6,)
    assert per[2] == pytest.approx(mpjpe(preds[2], gts[2]))
    pa = per_sample_pa_mpjpe(preds, gts)
    assert pa[4] == pytest.approx(pa_mpjpe(preds[4], gts[4]))
    shifted = per_sample_mpjpe(preds + 1.0, gts, root=0)
    np.testing.assert_allclose(shifted, per_sample_mpjpe(preds, gts, root=0))


def test_pck():
    assert pck(np.zeros(10), 150.0) == 1.0
    assert pck(np.full(10, 300.0), 150.0) == 0.0
    assert pck([10.0, 200.0, 20.0, 300.0], 150.0) == 0.5
    assert pck([150.0], 150.0) == 0.0


def test_auc():
    assert DEFAULT_AUC_THRESHOLDS[0] == 5.0 and DEFAULT_AUC_THRESHOLDS[-1] == 150.0
    assert len(DEFAULT_AUC_THRESHOLDS) == 30
    assert auc(np.zeros(5)) == 1.0
    assert auc(np.full(5, 151.0)) == 0.0
    assert auc([75.0]) == 0.5
    assert auc([1.0, 200.0]) == 0.5
    assert auc([12.0], thresholds=[10.0, 20.0, 30.0, 40.0]) == 0.75


def test_error_histogram():
    edges, counts = error_histogram([0.0, 9.99, 10.0, 25.0], 10.0)
    assert edges.tolist() == [0.0, 10.0, 20.0, 30.0]
    assert counts.tolist() == [2, 1, 1]
    edges, counts = error_histogram([30.0], 10.0)
    assert counts.tolist() == [0, 0, 0, 1]
    with pytest.raises(EmptyDataset):
        error_histogram([], 10.0)


def test_hardest_poses():
    errors = np.arange(1.0, 101.0)
    assert hardest_count(100, 0.05) == 5
    assert hardest_count(10, 0.01) == 1
    assert hardest_count(3, 2.0) == 3
    assert sorted(hardest_indices(errors, 0.05).tolist()) == [95, 96, 97, 98, 99]
    assert hardest_p_mean(errors, 0.05) == 98.0
    assert hardest_p_mean(errors, 1.0) == 50.5
    assert hardest_p_mean(np.full(40, 7.5), 0.1) == 7.5
    assert hardest_indices([3.0, 5.0, 5.0, 1.0], 0.5).tolist() == [1, 2]
    assert hardest_indices([5.0, 1.0, 5.0], 0.34).tolist() == [0]


def test_hard_pose_report():
    errors = np.arange(1.0, 101.0)
    report = hard_pose_report(errors, 25.0, [0.05, 0.1])
    assert report.counts == [24, 25, 25, 25, 1]
    assert report.num_samples == 100
    assert report.hardest_p_mean == {0.05: 98.0, 0.1: 95.5}


def test_hard_pose_comparison(rng):
    ref = rng.uniform(0, 100, size=50)
    errors = {"ref": ref, "same": ref * 2.0, "reversed": 100.0 - ref}
    out = hard_pose_comparison(errors, "ref", [0.1])
    assert out["ref"][0.1]["overlap"] == 1.0
    assert out["same"][0.1]["overlap"] == 1.0
    assert out["same"][0.1]["hardest_mean"] == pytest.approx(
        2.0 * out["ref"][0.1]["hardest_mean"]
    )
    assert out["reversed"][0.1]["overlap"] == 0.0
    assert (
        out["reversed"][0.1]["mean_on_reference_hardest"]
        < out["reversed"][0.1]["hardest_mean"]
    )


def test_histogram_table():
    text = histogram_table([0.0, 10.0, 20.0, 30.0], [2, 1, 1])
    assert text == "# bin_start count\n0 2\n10 1\n20 1\n"


def make_report():
    return EvalReport(
        num_samples=3,
        mpjpe_mean=40.0,
        pa_mpjpe_mean=30.0,
        pck=0.9,
        auc=0.6,
        pck_threshold=150.0,
        bin_edges=[0.0, 10.0, 20.0],
        counts=[1, 2],
        hardest_p_mean={0.1: 45.0, 0.05: 50.0},
        per_action={"walk": 35.0, "sit": 45.0},
    )


def test_eval_report(tmp_path):
    report = make_report()
    doc = report.to_dict()
    assert list(doc["per_action"]) == ["sit", "walk"]
    assert doc["hardest_p_mean"] == {"0.05": 50.0, "0.1": 45.0}
    assert doc["error_histogram"] == {"bin_edges": [0.0, 10.0, 20.0], "counts": [1, 2]}
    assert "PCK@150" in report.summary()
    path, hist = tmp_path / "out" / "report.json", tmp_path / "out" / "hist.txt"
    report.save(str(path), str(hist))
    assert json.loads(path.read_text()) == json.loads(report.to_json())
    assert hist.read_text() == "# bin_start count\n0 1\n10 2\n"
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    with pytest.raises(IoFailure):
        report.save(str(blocker / "report.json"))
