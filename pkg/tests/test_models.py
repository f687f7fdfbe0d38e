import io
import json

import numpy as np
import pytest

from skelgnn.autodiff import finite_diff_check
from skelgnn.errors import (
    ConfigInvalid,
    IoFailure,
    ShapeConflict,
    ShapeMismatch,
    VersionMismatch,
)
from skelgnn.layers import GcnLayer, HcsfLayer, LcnLayer, TemporalConvLayer
from skelgnn.models import (
    FORMAT_VERSION,
    ModelConfig,
    build_model,
    load_checkpoint,
    match_channels,
    parameter_count,
    save_checkpoint,
)
from skelgnn.tools.loss import l1_loss

COUNT_VARIANTS = [
    dict(graph_mode="static_gcn"),
    dict(graph_mode="static_lcn"),
    dict(graph_mode="hcsf_static"),
    dict(graph_mode="hcsf_static", l_hop=3, hop_aware=False),
    dict(graph_mode="hcsf_static", l_hop=3, long_range_cumulative=True),
    dict(graph_mode="hcsf_static", shared_fuse_proj=True),
    dict(graph_mode="hcsf_static", fusion="sum", squeeze_ratio=1.0),
    dict(graph_mode="hcsf_static", l_hop=3, schedule_literal_eq6=True),
    dict(graph_mode="hcsf_static", s_hop=2, l_hop=2),
    dict(graph_mode="hcsf_dynamic"),
    dict(graph_mode="hcsf_dynamic", freeze_alpha=True),
    dict(graph_mode="hcsf_dynamic", graph_variant="m_only"),
    dict(graph_mode="hcsf_dynamic", graph_variant="o_only"),
    dict(graph_mode="hcsf_dynamic", graph_variant="m_plus_o"),
    dict(graph_mode="hcsf_dynamic", graph_variant="m_only", base_init="dense"),
    dict(graph_mode="hcsf_dynamic", graph_variant="m_only", mask_base=False),
    dict(graph_mode="hcsf_dynamic", share_offsets=True, embed_dim=5),
    dict(graph_mode="hcsf_dynamic_temporal", temporal_frames=5),
    dict(graph_mode="hcsf_static", temporal_frames=3),
]


def single_frame_input(rng, batch=4):
    return rng.uniform(-1.0, 1.0, size=(batch, 17, 2))


@pytest.mark.parametrize("mode", ["static_gcn", "static_lcn", "hcsf_static"])
def test_single_frame_shapes(mode, small_config, topo, rng):
    model = build_model(small_config(graph_mode=mode), topo)
    x = single_frame_input(rng)
    assert model.predict(x).shape == (4, 17, 3)
    assert model.predict(x[0]).shape == (17, 3)
    np.testing.assert_allclose(model.predict(x[0]), model.predict(x)[0], atol=1e-10)
    with pytest.raises(ShapeMismatch):
        model.predict(np.zeros((4, 16, 2)))


def test_layer_kinds(small_config, topo):
    expected = {
        "static_gcn": GcnLayer,
        "static_lcn": LcnLayer,
        "hcsf_static": HcsfLayer,
        "hcsf_dynamic": HcsfLayer,
    }
    for mode, kind in expected.items():
        model = build_model(small_config(graph_mode=mode, layers_per_block=3), topo)
        layers = model.layers()
        assert len(layers) == 1 + 3 + 1
        assert all(isinstance(layer, kind) for layer in layers[:-1])
    dynamic = build_model(small_config(graph_mode="hcsf_dynamic"), topo)
    assert dynamic.input_layer.is_dynamic


def test_temporal_model_regresses_centre_frame(small_config, topo, rng):
    config = small_config(
        graph_mode="hcsf_dynamic_temporal", temporal_frames=9, temporal_kernel=3
    )
    model = build_model(config, topo)
    assert isinstance(model.blocks[0].stages[1][0], TemporalConvLayer)
    x = rng.uniform(-1.0, 1.0, size=(2, 2, 9, 17))
    out = model.predict(x)
    assert out.shape == (2, 17, 3)
    np.testing.assert_allclose(model.predict(x[1]), out[1], atol=1e-10)
    with pytest.raises(ShapeMismatch):
        model.predict(rng.uniform(size=(2, 2, 7, 17)))


def test_build_is_deterministic(small_config, topo, rng):
    x = single_frame_input(rng)
    config = small_config(graph_mode="hcsf_dynamic", dropout_p=0.25)
    first, second = build_model(config, topo), build_model(config, topo)
    np.testing.assert_array_equal(first.predict(x), second.predict(x))
    np.testing.assert_array_equal(
        first.forward(x, training=True).data, second.forward(x, training=True).data
    )
    other = build_model(small_config(graph_mode="hcsf_dynamic", seed=1), topo)
    assert not np.array_equal(first.predict(x), other.predict(x))


def test_eval_mode_is_repeatable(small_config, topo, rng):
    model = build_model(small_config(dropout_p=0.5), topo)
    x = single_frame_input(rng)
    np.testing.assert_array_equal(model.predict(x), model.predict(x))


@pytest.mark.parametrize("fields", COUNT_VARIANTS)
def test_parameter_count_matches_registry(fields, small_config, topo):
    config = small_config(**fields)
    model = build_model(config, topo)
    assert parameter_count(config, topo) == model.num_parameters
    names = [p.name for p in model.parameters()]
    assert len(names) == len(set(names)) == len(model.named_parameters())


def test_config_validation(topo):
    bad = [
        dict(graph_mode="attention"),
        dict(s_hop=3, l_hop=2),
        dict(l_hop=9),
        dict(squeeze_ratio=0.0),
        dict(dropout_p=1.0),
        dict(temporal_kernel=2),
        dict(graph_mode="hcsf_dynamic_temporal"),
        dict(temporal_frames=3, temporal_kernel=5),
        dict(fusion="max"),
        dict(channels=0),
    ]
    for fields in bad:
        with pytest.raises(ConfigInvalid):
            ModelConfig(**fields).validate(topo)
    ModelConfig(l_hop=8).validate(topo)
    with pytest.raises(ConfigInvalid):
        ModelConfig.from_dict({"channels": 8, "width": 3})
    assert ModelConfig.from_dict({"channels": 8}).channels == 8
    assert ModelConfig.from_dict(ModelConfig().to_dict()) == ModelConfig()


def test_checkpoint_round_trip(small_config, topo, rng, tmp_path):
    model = build_model(small_config(graph_mode="hcsf_dynamic"), topo)
    x = single_frame_input(rng)
    model.forward(x, training=True)
    for g in model.input_layer.graph_modules:
        g.alpha.data = np.array(0.3)
    path = tmp_path / "ckpt" / "model.json"
    save_checkpoint(model, str(path))
    loaded = load_checkpoint(str(path))
    assert loaded.config == model.config
    assert loaded.topo == topo
    for name, p in model.named_parameters().items():
        np.testing.assert_array_equal(loaded.named_parameters()[name].data, p.data)
    for name, b in model.buffers().items():
        np.testing.assert_array_equal(loaded.buffers()[name], b)
    assert np.abs(model.input_bn.running_mean).sum() > 0
    np.testing.assert_array_equal(loaded.predict(x), model.predict(x))


def test_checkpoint_errors(small_config, topo, tmp_path):
    model = build_model(small_config(), topo)
    path = tmp_path / "model.json"
    save_checkpoint(model, str(path))
    with pytest.raises(ShapeConflict):
        load_checkpoint(str(path), small_config(channels=4), topo)
    with pytest.raises(ShapeConflict):
        load_checkpoint(str(path), small_config(blocks=2), topo)
    doc = json.loads(path.read_text())
    assert doc["format_version"] == FORMAT_VERSION
    doc["format_version"] = FORMAT_VERSION + 1
    newer = tmp_path / "newer.json"
    newer.write_text(json.dumps(doc))
    with pytest.raises(VersionMismatch):
        load_checkpoint(str(newer))
    with pytest.raises(IoFailure):
        load_checkpoint(str(tmp_path / "missing.json"))
    garbage = tmp_path / "garbage.json"
    garbage.write_text("not json")
    with pytest.raises(IoFailure):
        load_checkpoint(str(garbage))


def test_ablated_residual_branch_skips_blocks(small_config, topo, rng):
    x = single_frame_input(rng)
    ablated = build_model(small_config(blocks=2, ablate_residual_branch=True), topo)
    no_blocks = build_model(small_config(blocks=0), topo)
    np.testing.assert_array_equal(ablated.predict(x), no_blocks.predict(x))
    full = build_model(small_config(blocks=2), topo)
    assert not np.array_equal(full.predict(x), no_blocks.predict(x))


def test_frozen_alpha_model_equals_static_model(small_config, topo, rng):
    x = single_frame_input(rng)
    frozen = build_model(
        small_config(graph_mode="hcsf_dynamic", freeze_alpha=True), topo
    )
    static = build_model(small_config(graph_mode="hcsf_static"), topo)
    for layer, twin in zip(frozen.layers()[:-1], static.layers()[:-1]):
        for (_, bank), (_, other) in zip(layer.params.banks(), twin.params.banks()):
            np.testing.assert_array_equal(bank.weights.data, other.weights.data)
    np.testing.assert_allclose(frozen.predict(x), static.predict(x), atol=1e-10)


def test_match_channels(small_config, topo):
    config = small_config(channels=12)
    budget = parameter_count(config, topo)
    assert match_channels(small_config(channels=1), topo, budget).channels == 12
    assert match_channels(config, topo, 1).channels == 1


def test_model_loss_gradient(small_config, topo, rng):
    config = small_config(
        graph_mode="hcsf_dynamic", leaky_alpha=1.0, output_scale=1.0, seed=2
    )
    model = build_model(config, topo)
    for g in model.input_layer.graph_modules:
        g.alpha.data = np.array(0.5)
    x = single_frame_input(rng, batch=8)
    out = model.forward(x, training=True).data
    signs = np.where(np.arange(8) < 3, -1.0, 1.0)[:, None, None]
    target = out + signs * rng.uniform(1.0, 2.0, size=out.shape)
    err = finite_diff_check(
        lambda: l1_loss(model.forward(x, training=True), target),
        model.parameters(),
        max_coords=8,
    )
    assert err < 1e-4


def test_write_config(small_config, topo):
    model = build_model(small_config(), topo)
    out = io.StringIO()
    model.write_config(out)
    lines = out.getvalue().splitlines()
    assert lines[0].startswith("{'channels': 8")
    assert lines[1].startswith("input: ")
    assert lines[-1].startswith("output: ")
