# Licensed under the BSD 3-Clause License.

"""Training log.

A dedicated non-propagating logger: progress lines go to the console at
WARNING level, and when a run directory is given, one JSON record per epoch
goes to log.jsonl at INFO level. config.txt receives the only timestamp of a
run.
"""

import datetime
import json
import logging
import os
from typing import Any, Dict, Optional

global_first_train_log_done = None
global_train_logger = None

LOG_FILE = "log.jsonl"
CONFIG_FILE = "config.txt"


class LevelFilter(logging.Filter):
    def __init__(self, level):
        super().__init__()
        self.__level = level

    def filter(self, logrecord):
        return logrecord.levelno == self.__level


def train_log_reset():
    global global_first_train_log_done, global_train_logger
    if global_train_logger is not None:
        for handler in global_train_logger.handlers[:]:
            global_train_logger.removeHandler(handler)
            handler.close()
    global_first_train_log_done = None
    global_train_logger = None


def write_run_config(save_dir: str, sections: Dict[str, Any], model: Any = None):
    """config.txt: creation time, every config section, then the model's own
    layer-by-layer config echo."""
    s_dir = os.path.expanduser(save_dir)
    os.makedirs(s_dir, exist_ok=True)
    with open(os.path.join(s_dir, CONFIG_FILE), "w") as f:
        print(f"created: {datetime.datetime.now().isoformat()}", file=f)
        for section, content in sections.items():
            print(f"\n{section}:", file=f)
            if isinstance(content, dict):
                for key, elt in content.items():
                    print(f"{key}: {elt}", file=f)
            else:
                print(content, file=f)
        if model is not None:
            print("\nmodel layers:", file=f)
            model.write_config(f)


def _setup(save_dir: Optional[str]):
    global global_first_train_log_done, global_train_logger
    global_first_train_log_done = True
    global_train_logger = logging.getLogger("train_log")
    global_train_logger.setLevel(logging.DEBUG)
    global_train_logger.propagate = False
    ch = logging.StreamHandler()
    ch.setLevel(logging.WARNING)
    ch.setFormatter(logging.Formatter("%(message)s"))
    global_train_logger.addHandler(ch)
    if save_dir:
        s_dir = os.path.expanduser(save_dir)
        os.makedirs(s_dir, exist_ok=True)
        fh = logging.FileHandler(os.path.join(s_dir, LOG_FILE), mode="w")
        fh.setLevel(logging.INFO)
        fh.addFilter(LevelFilter(logging.INFO))
        fh.setFormatter(logging.Formatter("%(message)s"))
        global_train_logger.addHandler(fh)


def train_log(
    epoch: int,
    elapsed_time: float,
    loss: float,
    mpjpe: Optional[float],
    lr: float,
    save_dir: Optional[str] = None,
) -> Dict[str, Any]:
    """Logs one epoch and returns its record."""
    if global_first_train_log_done is None:
        _setup(save_dir)
    message_string = (
        f"[epoch {epoch:4}] [training time (ms) += {elapsed_time:<10.0f}] "
        f"[loss: {loss:<12.4f}] "
    )
    if mpjpe is not None:
        message_string += f"[mpjpe: {mpjpe:<10.3f}] "
    message_string += f"[lr: {lr:.3e}]"
    record = {"epoch": epoch, "loss": loss, "mpjpe": mpjpe, "lr": lr}
    global_train_logger.warning(message_string)
    if save_dir:
        global_train_logger.info(json.dumps(record))
    return record


def read_log(save_dir: str):
    with open(os.path.join(os.path.expanduser(save_dir), LOG_FILE)) as f:
        return [json.loads(line) for line in f if line.strip()]
