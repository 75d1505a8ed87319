"""
Metrics log follower.

Runs in a separate thread and polls a growing metrics log file.
Emits complete lines in batches; a partial trailing line waits for its newline.
"""
import logging
import os

from PySide6.QtCore import QObject, QTimer, Signal, Slot

logger = logging.getLogger(__name__)


class MetricsTailWorker(QObject):
    lines_received = Signal(list)  # batch of complete lines
    follow_status = Signal(bool, str)
    line_count_updated = Signal(int)

    def __init__(self, parent=None, poll_interval=200, emit_interval=100):
        super().__init__(parent)
        self._path = None
        self._offset = 0
        self._is_following = False
        self._poll_interval = poll_interval
        self._emit_interval = emit_interval

        # timers are created in start_following() so they live in the worker thread
        self._poll_timer = None
        self._emit_timer = None
        self._line_buffer = ""  # incomplete trailing line
        self._pending = []
        self.lines_read_count = 0

    @Slot(str)
    def start_following(self, path):
        if self._is_following:
            return
        self._path = path
        self._offset = 0
        self._line_buffer = ""
        self._is_following = True

        self._poll_timer = QTimer(self)
        self._poll_timer.setInterval(self._poll_interval)
        self._poll_timer.timeout.connect(self.poll)
        self._poll_timer.start()

        self._emit_timer = QTimer(self)
        self._emit_timer.setInterval(self._emit_interval)
        self._emit_timer.timeout.connect(self._emit_pending)
        self._emit_timer.start()

        logger.info("[MetricsTailWorker] following %s", path)
        self.follow_status.emit(True, f"Following {path}.")

    @Slot()
    def stop_following(self):
        self._is_following = False
        for timer in (self._poll_timer, self._emit_timer):
            if timer is not None and timer.isActive():
                timer.stop()
        self._emit_pending()
        self.follow_status.emit(False, "Stopped.")

    @Slot()
    def poll(self):
        """Read whatever was appended since the last poll."""
        if not self._is_following or self._path is None:
            return
        try:
            size = os.path.getsize(self._path)
        except OSError:
            return  # not created yet
        if size < self._offset:
            logger.warning("[MetricsTailWorker] %s shrank, reading from the start", self._path)
            self._offset = 0
            self._line_buffer = ""
        if size == self._offset:
            return
        try:
            with open(self._path, "rb") as handle:
                handle.seek(self._offset)
                chunk = handle.read(size - self._offset)
        except OSError as e:
            self.follow_status.emit(False, f"Read error: {e}")
            self.stop_following()
            return
        self._offset += len(chunk)
        self._line_buffer += chunk.decode("utf-8", errors="ignore")

        lines = self._line_buffer.split("\n")
        self._line_buffer = lines.pop()
        for line in lines:
            line = line.strip()
            if line:
                self._pending.append(line)
                self.lines_read_count += 1
        self.line_count_updated.emit(self.lines_read_count)

    @Slot()
    def _emit_pending(self):
        if self._pending:
            self.lines_received.emit(self._pending)
            self._pending = []

    def stop(self):
        """Stop polling before the thread quits."""
        self.stop_following()
