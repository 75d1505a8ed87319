"""
Turns raw metrics lines into windowed per-stage loss series for plotting.
"""
import logging
from collections import deque

import numpy as np
from PySide6.QtCore import QObject, QTimer, Signal, Slot

logger = logging.getLogger(__name__)


def parse_metrics_line(line):
    """(step, stage, loss, lr) from a "step<TAB>stage<TAB>loss<TAB>lr" line."""
    parts = line.strip().split("\t")
    if len(parts) != 4:
        raise ValueError(f"expected 4 tab-separated fields, got {len(parts)}")
    return int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])


class LossCurveProcessor(QObject):
    curves_ready = Signal(object)  # stage -> (steps array, loss array)
    latest_lr = Signal(float)

    def __init__(self, parent=None, window_size=500, emit_interval=100):
        super().__init__(parent)
        self.window_size = window_size
        self.steps = {}  # stage -> deque of steps
        self.losses = {}  # stage -> deque of losses
        self._incoming = deque(maxlen=10000)

        self._process_timer = QTimer(self)
        self._process_timer.setInterval(emit_interval)
        self._process_timer.timeout.connect(self.process_pending)
        self._process_timer.start()

    @Slot(list)
    def add_lines(self, lines):
        self._incoming.extend(lines)

    def _stage_buffers(self, stage):
        if stage not in self.steps:
            self.steps[stage] = deque(maxlen=self.window_size)
            self.losses[stage] = deque(maxlen=self.window_size)
        return self.steps[stage], self.losses[stage]

    @Slot()
    def process_pending(self):
        lines = list(self._incoming)
        self._incoming.clear()
        if not lines:
            return
        lr = None
        for line in lines:
            try:
                step, stage, loss, lr = parse_metrics_line(line)
            except ValueError as e:
                logger.warning("[LossCurveProcessor] skipped line %r: %s", line, e)
                continue
            steps, losses = self._stage_buffers(stage)
            steps.append(step)
            losses.append(loss)
        if lr is not None:
            self.latest_lr.emit(lr)
        self.curves_ready.emit(self.curves())

    def curves(self):
        return {stage: (np.array(self.steps[stage]), np.array(self.losses[stage])) for stage in sorted(self.steps)}

    @Slot(int)
    def set_window_size(self, size):
        if size > 0 and size != self.window_size:
            self.window_size = size
            for stage in self.steps:
                self.steps[stage] = deque(self.steps[stage], maxlen=size)
                self.losses[stage] = deque(self.losses[stage], maxlen=size)
            self.curves_ready.emit(self.curves())
