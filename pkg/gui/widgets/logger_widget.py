"""
Scrolling view of the most recent metrics lines.
"""
from collections import deque

from PySide6.QtWidgets import QPlainTextEdit
from PySide6.QtCore import Slot


class LoggerWidget(QPlainTextEdit):
    def __init__(self, parent=None, max_lines=200):
        super().__init__(parent)
        self.setReadOnly(True)
        self.log_buffer = deque(maxlen=max_lines)
        self.max_lines = max_lines

    @Slot(list)
    def log_lines(self, lines):
        # display refresh is driven by a timer in the window
        self.log_buffer.extend(line.replace("\t", "  ") for line in lines)

    @Slot()
    def update_display(self):
        self.setPlainText("\n".join(self.log_buffer))
        self.verticalScrollBar().setValue(self.verticalScrollBar().maximum())

    @Slot(int)
    def set_max_lines(self, max_lines):
        if max_lines > 0 and max_lines != self.max_lines:
            self.max_lines = max_lines
            self.log_buffer = deque(self.log_buffer, maxlen=max_lines)
            self.update_display()
