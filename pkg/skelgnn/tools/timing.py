# Licensed under the BSD 3-Clause License.

import time

global_timing_last = None
global_timing_start = None


def timing_reset():
    global global_timing_last, global_timing_start
    global_timing_last = None
    global_timing_start = None


def timing():
    """Returns (milliseconds since the previous call, seconds since the first
    call). The first call after a reset returns (0.0, 0.0)."""
    global global_timing_last, global_timing_start
    now = time.perf_counter()
    if global_timing_last is None or global_timing_start is None:
        global_timing_start = now
        global_timing_last = now
        return 0.0, 0.0
    interval_ms = (now - global_timing_last) * 1000.0
    total_s = now - global_timing_start
    global_timing_last = now
    return interval_ms, total_s
