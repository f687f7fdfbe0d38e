import numpy as np
import pytest

from skelgnn.errors import ConfigInvalid, EmptyDataset
from skelgnn.metrics import per_sample_mpjpe
from skelgnn.models import build_model
from skelgnn.plotting import error_histogram_plot, hardest_poses_plot
from skelgnn.tools import (
    AblationRow,
    MetricsConfig,
    TrainConfig,
    evaluate,
    flip_arrays,
    flip_inputs,
    format_ablation_table,
    model_inputs,
    predict,
    run_ablation,
    sample_errors,
    study_variants,
)


@pytest.fixture
def model(small_config, topo):
    return build_model(small_config(), topo)


def test_model_inputs(small_config, topo, small_dataset, model):
    x, y = model_inputs(model, small_dataset)
    assert x.shape == (24, 17, 2) and y.shape == (24, 17, 3)
    temporal = build_model(small_config(temporal_frames=5), topo)
    windows, _ = model_inputs(temporal, small_dataset)
    assert windows.shape == (24, 2, 5, 17)
    np.testing.assert_array_equal(windows[3, :, 2].T, x[3])


def test_predict_batches_and_flip(model, topo, small_dataset):
    x, _ = model_inputs(model, small_dataset)
    whole = predict(model, x)
    np.testing.assert_allclose(predict(model, x, batch_size=5), whole, atol=1e-12)
    averaged = predict(model, x, flip_average=True)
    np.testing.assert_allclose(
        predict(model, flip_inputs(x, topo), flip_average=True),
        flip_arrays(averaged, topo),
        rtol=0,
        atol=1e-12,
    )


def test_sample_errors(rng):
    gts = rng.normal(size=(11, 17, 3)) * 100.0
    preds = gts + rng.normal(size=(11, 17, 3)) * 10.0
    single = sample_errors(preds, gts, root=0, workers=1)
    split = sample_errors(preds, gts, root=0, workers=2)
    for key in ("mpjpe", "pa_mpjpe", "joint"):
        np.testing.assert_array_equal(single[key], split[key])
    np.testing.assert_allclose(single["mpjpe"], per_sample_mpjpe(preds, gts, 0))
    assert single["joint"].shape == (11, 17)
    raw = sample_errors(preds, gts, root=None)
    np.testing.assert_allclose(raw["mpjpe"], per_sample_mpjpe(preds, gts))


def test_evaluate_report(model, small_dataset):
    metrics = MetricsConfig(bin_width=25.0, percentiles=(0.5, 0.1))
    report, errors = evaluate(model, small_dataset, metrics)
    assert report.num_samples == 24
    assert sum(report.counts) == 24
    assert report.flip_test
    assert report.mpjpe_mean == pytest.approx(errors["mpjpe"].mean())
    assert 0.0 <= report.pck <= 1.0 and 0.0 <= report.auc <= 1.0
    assert set(report.per_action) == {"sway", "reach", "twist"}
    assert report.hardest_p_mean[0.1] >= report.hardest_p_mean[0.5]
    assert report.hardest_p_mean[0.5] >= report.mpjpe_mean
    assert errors["predictions"].shape == (24, 17, 3)
    plain, _ = evaluate(model, small_dataset, metrics, flip_average=False)
    assert not plain.flip_test
    with pytest.raises(EmptyDataset):
        evaluate(model, [], metrics)


def test_evaluate_is_independent_of_workers(model, small_dataset):
    one, _ = evaluate(model, small_dataset, MetricsConfig(workers=1))
    two, _ = evaluate(model, small_dataset, MetricsConfig(workers=2))
    assert one.to_dict() == two.to_dict()


def test_study_variants(small_config, topo):
    base = small_config()
    squeeze = study_variants("squeeze", base, topo)
    assert [c.squeeze_ratio for _, c in squeeze] == [1.0, 0.5, 0.25, 0.125, 0.0625]
    hops = study_variants("hops", base, topo)
    assert len(hops) == 7
    label, lcn = hops[-1]
    assert label == "LCN,L=3" and lcn.graph_mode == "static_lcn" and lcn.l_hop == 3
    fusion = dict(study_variants("fusion", base, topo))
    assert fusion["sum"].fusion == "sum" and not fusion["no hop awareness"].hop_aware
    graph = dict(study_variants("graph", base, topo))
    assert graph["M (dense)"].base_init == "dense"
    assert graph["M + alpha O"].graph_variant == "combined"
    assert all(c.graph_mode == "hcsf_dynamic" for c in graph.values())
    with pytest.raises(ConfigInvalid):
        study_variants("dropout", base, topo)


def test_format_ablation_table():
    rows = [
        AblationRow("base", 100, [10.0, 12.0], np.arange(1.0, 21.0)),
        AblationRow("variant", 90, [11.0], np.arange(20.0, 0.0, -1.0)),
        AblationRow("untested", 80, [9.0]),
    ]
    lines = format_ablation_table(rows, (0.1,)).splitlines()
    header = ["variant", "params", "MPJPE", "hardest", "10%", "overlap"]
    assert lines[0].split() == header
    assert lines[1].split() == ["base", "100", "11.000", "(1.000)", "19.500", "1.00"]
    assert lines[2].split() == ["variant", "90", "11.000", "(0.000)", "19.500", "0.00"]
    assert lines[3].split()[-2:] == ["-", "-"]


def test_run_ablation(small_config, topo, small_dataset):
    training = TrainConfig(epochs=1, batch_size=16, flip_augment=False)
    rows = run_ablation(
        "fusion",
        small_config(),
        topo,
        small_dataset[:16],
        small_dataset[16:],
        training,
        MetricsConfig(flip_test=False),
        seeds=(0, 1),
    )
    assert [r.label for r in rows][:2] == ["concat", "sum"]
    assert all(len(r.test_mpjpe) == 2 for r in rows)
    assert all(r.sample_errors.shape == (8,) for r in rows)
    assert rows[0].num_parameters > 0
    assert "non-hierarchical" in format_ablation_table(rows)


def test_plots(tmp_path):
    hist = tmp_path / "hist.png"
    error_histogram_plot(str(hist), [0.0, 10.0, 20.0], [3, 5])
    assert hist.stat().st_size > 0
    hardest = tmp_path / "hardest.png"
    hardest_poses_plot(
        str(hardest), {"a": {0.1: 50.0, 0.05: 60.0}, "b": {0.1: 45.0, 0.05: 52.0}}
    )
    assert hardest.stat().st_size > 0
    with pytest.raises(AssertionError):
        error_histogram_plot(str(hist), [0.0, 10.0], [3, 5])
