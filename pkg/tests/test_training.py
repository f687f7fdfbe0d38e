import json
import os
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from skelgnn.autodiff import Parameter
from skelgnn.buffers import PoseBuffer
from skelgnn.data import denormalize_2d, normalize_2d
from skelgnn.errors import EmptyDataset, ShapeMismatch
from skelgnn.metrics import root_relative
from skelgnn.models import build_model, load_checkpoint
from skelgnn.samplers import EpochSampler
from skelgnn.tools import (
    OptimState,
    TrainConfig,
    adam_step,
    fit,
    flip_arrays,
    flip_inputs,
    flip_sample,
    l1_loss,
    lr_at,
    read_log,
    timing,
    timing_reset,
    train_log,
    write_run_config,
)


def test_lr_schedule():
    cfg = TrainConfig(lr0=0.01, lr_decay=0.5)
    assert lr_at(0, cfg) == 0.01
    assert lr_at(2, cfg) == pytest.approx(0.0025)


def test_adam_matches_reference_updates(rng):
    p = Parameter(rng.normal(size=(3, 2)), name="w")
    start = p.data.copy()
    state = OptimState([p], lr=0.1)
    grads = [rng.normal(size=(3, 2)) for _ in range(3)]
    m, v = np.zeros((3, 2)), np.zeros((3, 2))
    expected = start.copy()
    for t, g in enumerate(grads, start=1):
        adam_step([p], [g], state, 0.1 / t)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        m_hat, v_hat = m / (1 - 0.9**t), v / (1 - 0.999**t)
        expected = expected - (0.1 / t) * m_hat / (np.sqrt(v_hat) + 1e-8)
        np.testing.assert_allclose(p.data, expected, rtol=0, atol=1e-12)
    assert state.step_count == 3
    assert state.lr == pytest.approx(0.1 / 3)
    np.testing.assert_allclose(state.first_moments["w"], m, atol=1e-12)
    np.testing.assert_allclose(state.second_moments["w"], v, atol=1e-12)


def test_importing_optimizer_keeps_jax_precision():
    env = {k: v for k, v in os.environ.items() if k != "JAX_ENABLE_X64"}
    code = (
        "import jax.numpy as jnp, numpy as np\n"
        "from skelgnn.autodiff import Parameter\n"
        "from skelgnn.tools.optim import OptimState\n"
        "print(jnp.zeros(1).dtype)\n"
        "state = OptimState([Parameter(np.zeros(2), name='w')])\n"
        "print(jnp.zeros(1).dtype, state.first_moments['w'].dtype)\n"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        cwd=os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
        env=env,
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.split() == ["float32", "float64", "float64"]


def test_adam_first_step_moves_by_lr():
    p = Parameter(np.zeros(2), name="b")
    state = OptimState([p])
    adam_step([p], [np.array([1.0, -2.0])], state, 0.05)
    np.testing.assert_allclose(p.data, [-0.05, 0.05], atol=1e-9)


def test_adam_missing_gradient_and_errors(rng):
    a = Parameter(rng.normal(size=3), name="a")
    b = Parameter(rng.normal(size=2), name="b")
    before = b.data.copy()
    state = OptimState([a, b])
    a.grad = np.ones(3)
    adam_step([a, b], None, state, 0.01)
    np.testing.assert_array_equal(b.data, before)
    with pytest.raises(ShapeMismatch):
        adam_step([a, b], [np.ones(3), np.ones(3)], state, 0.01)
    with pytest.raises(ShapeMismatch):
        adam_step([b, a], [np.ones(2), np.ones(3)], state, 0.01)


def test_l1_loss():
    pred, gt = np.array([[1.0, -1.0], [2.0, 0.0]]), np.zeros((2, 2))
    assert l1_loss(pred, gt).item() == pytest.approx(1.0)
    assert l1_loss(gt, gt).item() == 0.0
    with pytest.raises(ShapeMismatch):
        l1_loss(pred, np.zeros((2, 3)))


def test_flip(topo, rng, small_dataset):
    poses = rng.normal(size=(5, 17, 3))
    np.testing.assert_array_equal(flip_arrays(flip_arrays(poses, topo), topo), poses)
    flipped = flip_arrays(poses, topo)
    left, right = topo.joint_index("left_hip"), topo.joint_index("right_hip")
    np.testing.assert_array_equal(flipped[:, right, 0], -poses[:, left, 0])
    np.testing.assert_array_equal(flipped[:, right, 1:], poses[:, left, 1:])
    pelvis = topo.joint_index("pelvis")
    np.testing.assert_array_equal(flipped[:, pelvis, 0], -poses[:, pelvis, 0])
    windows = rng.normal(size=(2, 2, 5, 17))
    np.testing.assert_array_equal(
        flip_inputs(windows, topo)[:, :, 3],
        flip_inputs(windows[:, :, 3].transpose(0, 2, 1), topo).transpose(0, 2, 1),
    )
    sample = flip_sample(small_dataset[0], topo)
    assert sample.seq_id == small_dataset[0].seq_id


def test_flip_sample_on_centred_samples(topo, small_dataset):
    left, right = topo.joint_index("left_wrist"), topo.joint_index("right_wrist")
    for raw in small_dataset[:6]:
        width, _ = raw.image_size
        centred = replace(
            raw,
            joints_2d=normalize_2d(raw.joints_2d, raw.image_size),
            joints_3d=root_relative(raw.joints_3d, topo.root),
        )
        sample = flip_sample(centred, topo)
        pixels = denormalize_2d(sample.joints_2d, raw.image_size)
        np.testing.assert_allclose(
            pixels[right],
            [width - raw.joints_2d[left, 0], raw.joints_2d[left, 1]],
            rtol=0,
            atol=1e-9,
        )
        np.testing.assert_array_equal(sample.joints_3d[topo.root], np.zeros(3))
        twice = flip_sample(sample, topo)
        np.testing.assert_array_equal(twice.joints_2d, centred.joints_2d)
        np.testing.assert_array_equal(twice.joints_3d, centred.joints_3d)


def test_epoch_sampler():
    chunks = EpochSampler(seed=1).epoch_indices(10, 3)
    assert [len(c) for c in chunks] == [3, 3, 4]
    assert sorted(np.concatenate(chunks).tolist()) == list(range(10))
    kept = EpochSampler(seed=1, merge_singletons=False).epoch_indices(10, 3)
    assert [len(c) for c in kept] == [3, 3, 3, 1]
    again = EpochSampler(seed=1).epoch_indices(10, 3)
    assert all(np.array_equal(a, b) for a, b in zip(chunks, again))
    assert [len(c) for c in EpochSampler(seed=0).epoch_indices(1, 4)] == [1]
    rows = {"x": np.arange(7.0)}
    batches = list(EpochSampler(seed=0).epoch(rows, 3))
    assert [b["x"].size for b in batches] == [3, 4]
    assert sorted(np.concatenate([b["x"] for b in batches]).tolist()) == list(
        range(7)
    )


def test_pose_buffer():
    buffer = PoseBuffer(6, EpochSampler(seed=0))
    buffer.insert({"inputs": np.zeros((4, 17, 2)), "targets": np.zeros((4, 17, 3))})
    buffer.insert({"inputs": np.ones((2, 17, 2)), "targets": np.ones((2, 17, 3))})
    assert buffer.current_size == 6
    batches = list(buffer.epoch(4))
    assert [b["inputs"].shape[0] for b in batches] == [4, 2]
    assert sum(b["targets"].sum() for b in batches) == 2 * 17 * 3
    assert sorted(b["inputs"].shape[0] for b in buffer.epoch(3)) == [3, 3]
    with pytest.raises(AssertionError):
        buffer.insert({"inputs": np.zeros((1, 17, 2)), "targets": np.zeros((1, 17, 3))})


def test_timing():
    timing_reset()
    assert timing() == (0.0, 0.0)
    interval, total = timing()
    assert interval >= 0.0 and total >= 0.0


def test_train_log(tmp_path, capsys):
    record = train_log(0, 12.0, 0.5, 40.0, 0.001, str(tmp_path))
    train_log(1, 10.0, 0.4, None, 0.00095, str(tmp_path))
    assert record == {"epoch": 0, "loss": 0.5, "mpjpe": 40.0, "lr": 0.001}
    assert "[epoch    0]" in capsys.readouterr().err
    logged = read_log(str(tmp_path))
    assert logged[0] == record
    assert logged[1]["mpjpe"] is None


def test_write_run_config(tmp_path, small_config, topo):
    model = build_model(small_config(), topo)
    write_run_config(str(tmp_path), {"training": {"epochs": 3}, "note": "x"}, model)
    text = (tmp_path / "config.txt").read_text()
    assert text.startswith("created: ")
    assert "training:\nepochs: 3" in text
    assert "model layers:" in text and "output: " in text


def test_fit_writes_run_directory(tmp_path, small_config, topo, small_dataset):
    model = build_model(small_config(), topo)
    seen = []
    cfg = TrainConfig(epochs=3, batch_size=16, lr0=0.01, save_every=2)
    log = fit(
        model,
        small_dataset,
        cfg,
        [lambda epoch, record, m: seen.append(epoch)],
        save_dir=str(tmp_path),
    )
    assert seen == [0, 1, 2]
    assert [r["epoch"] for r in log] == [0, 1, 2]
    assert [r["lr"] for r in log] == [lr_at(e, cfg) for e in range(3)]
    assert read_log(str(tmp_path)) == json.loads(json.dumps(log))
    for name in ("config.txt", "log.jsonl", "model.json", "best_model.json"):
        assert os.path.isfile(tmp_path / name)
    restored = load_checkpoint(str(tmp_path / "model.json"))
    x = np.stack([s.joints_2d for s in small_dataset[:3]]) / 500.0 - 1.0
    np.testing.assert_array_equal(restored.predict(x), model.predict(x))


def test_fit_is_deterministic(small_config, topo, small_dataset):
    cfg = TrainConfig(epochs=2, batch_size=8, lr0=0.01)
    first = fit(build_model(small_config(), topo), small_dataset, cfg)
    second = fit(build_model(small_config(), topo), small_dataset, cfg)
    assert first == second


def test_fit_empty_dataset(small_config, topo):
    with pytest.raises(EmptyDataset):
        fit(build_model(small_config(), topo), [], TrainConfig(epochs=1))
