# Licensed under the BSD 3-Clause License.

import os
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from skelgnn.autodiff import backward
from skelgnn.buffers import PoseBuffer
from skelgnn.data import PoseSample
from skelgnn.errors import EmptyDataset
from skelgnn.metrics import per_sample_mpjpe
from skelgnn.models import Model, save_checkpoint
from skelgnn.samplers import EpochSampler
from skelgnn.tools.augment import flip_arrays, flip_inputs
from skelgnn.tools.config import TrainConfig
from skelgnn.tools.eval import model_inputs, predict
from skelgnn.tools.logging import train_log, train_log_reset, write_run_config
from skelgnn.tools.loss import l1_loss
from skelgnn.tools.optim import OptimState, adam_step, lr_at
from skelgnn.tools.timing import timing, timing_reset

CHECKPOINT_FILE = "model.json"
BEST_CHECKPOINT_FILE = "best_model.json"

Callback = Callable[[int, Dict[str, Any], Model], None]


def fit(
    model: Model,
    dataset: Sequence[PoseSample],
    cfg: TrainConfig,
    callbacks: Sequence[Callback] = (),
    *,
    eval_dataset: Optional[Sequence[PoseSample]] = None,
    save_dir: Optional[str] = None,
    normalize: bool = True,
    run_info: Optional[Dict[str, Any]] = None,
) -> List[Dict[str, Any]]:
    """
    The main training loop.

    Every epoch visits the training set once in seeded random order with
    mini-batches of L1 loss and Adam steps at the epoch's learning rate, then
    evaluates the model and logs one record.

    Args:
        model: the model, trained in place.
        dataset: training samples with 3D targets.
        cfg: the training configuration. With cfg.flip_augment, a mirrored copy
            of every training sample is added and predictions used for the
            per-epoch evaluation are flip-averaged.
        callbacks: functions called as callback(epoch, record, model) after
            every epoch.
        eval_dataset: samples for the per-epoch MPJPE (the training samples,
            without augmentation, when None).
        save_dir (str): the directory receiving config.txt, log.jsonl, the
            latest checkpoint <save_dir>/model.json (every cfg.save_every
            epochs and after the last one) and the checkpoint with the best
            evaluation MPJPE so far, <save_dir>/best_model.json.
        normalize (bool): whether 2D inputs are mapped from pixels to [-1, 1].
        run_info: extra sections echoed into config.txt.

    Returns:
        the list of epoch records (epoch, loss, mpjpe, lr).
    """
    if len(dataset) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    cfg.validate()
    train_log_reset()
    timing_reset()
    if save_dir is not None:
        sections = dict(run_info or {})
        sections["training"] = cfg.to_dict()
        write_run_config(save_dir, sections, model)

    x, y = model_inputs(model, dataset, normalize)
    if cfg.flip_augment:
        x = np.concatenate([x, flip_inputs(x, model.topo)])
        y = np.concatenate([y, flip_arrays(y, model.topo)])
    buffer = PoseBuffer(x.shape[0], EpochSampler(seed=cfg.seed))
    buffer.insert({"inputs": x, "targets": y})
    eval_x, eval_y = model_inputs(model, eval_dataset or dataset, normalize)

    params = model.parameters()
    state = OptimState(params, cfg.lr0, cfg.beta1, cfg.beta2, cfg.eps)
    best_score = np.inf
    log = []
    timing()
    for epoch in range(cfg.epochs):
        lr = lr_at(epoch, cfg)
        total, count = 0.0, 0
        for batch in buffer.epoch(cfg.batch_size):
            model.zero_grad()
            pred = model.forward(batch["inputs"], training=True)
            loss = l1_loss(pred, batch["targets"])
            backward(loss)
            adam_step(params, None, state, lr)
            rows = batch["targets"].shape[0]
            total += float(loss.data) * rows
            count += rows
        preds = predict(model, eval_x, flip_average=cfg.flip_augment)
        score = float(per_sample_mpjpe(preds, eval_y, model.topo.root).mean())
        interval_time, _ = timing()
        record = train_log(epoch, interval_time, total / count, score, lr, save_dir)
        log.append(record)
        if save_dir is not None:
            s_dir = os.path.expanduser(save_dir)
            if (epoch + 1) % cfg.save_every == 0 or epoch == cfg.epochs - 1:
                save_checkpoint(model, os.path.join(s_dir, CHECKPOINT_FILE))
            if score < best_score:
                save_checkpoint(model, os.path.join(s_dir, BEST_CHECKPOINT_FILE))
        best_score = min(best_score, score)
        for callback in callbacks:
            callback(epoch, record, model)
    return log
