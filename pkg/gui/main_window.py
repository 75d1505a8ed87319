"""
Training monitor window.

- Follows a metrics log on a worker thread.
- Turns lines into per-stage loss curves on a second thread.
- Shows the curves next to the raw log tail.
"""
import logging
import sys

from PySide6.QtWidgets import (
    QApplication, QMainWindow, QWidget, QVBoxLayout, QHBoxLayout, QGridLayout,
    QGroupBox, QLabel, QPushButton, QSpinBox
)
from PySide6.QtCore import QThread, QTimer, Signal, Slot

from gui.widgets.logger_widget import LoggerWidget
from gui.widgets.plot_widget import PlotWidget
from metrics_stream.curve_processor import LossCurveProcessor
from metrics_stream.tail_worker import MetricsTailWorker

logger = logging.getLogger(__name__)


class MonitorWindow(QMainWindow):
    request_follow = Signal(str)
    request_stop = Signal()

    def __init__(self, metrics_path, parent=None):
        super().__init__(parent)
        self.metrics_path = str(metrics_path)
        self.setWindowTitle(f"Training monitor: {self.metrics_path}")
        self.resize(1100, 700)

        central_widget = QWidget()
        self.setCentralWidget(central_widget)
        main_layout = QVBoxLayout(central_widget)

        # --- Curve processor thread ---
        self.processor_thread = QThread()
        self.curve_processor = LossCurveProcessor(window_size=500)
        self.curve_processor.moveToThread(self.processor_thread)
        self.processor_thread.start()

        # --- Widgets ---
        self.plot_widget = PlotWidget()
        self.logger_widget = LoggerWidget(max_lines=200)

        self.logger_display_timer = QTimer(self)
        self.logger_display_timer.setInterval(250)
        self.logger_display_timer.timeout.connect(self.logger_widget.update_display)
        self.logger_display_timer.start()

        self._create_control_panel()

        plot_logger_layout = QHBoxLayout()
        plot_logger_layout.addWidget(self.plot_widget, 7)
        plot_logger_layout.addWidget(self.logger_widget, 3)
        main_layout.addWidget(self.control_panel)
        main_layout.addLayout(plot_logger_layout)

        self.lines_seen = 0
        self._setup_tail_worker()

    def _create_control_panel(self):
        self.control_panel = QGroupBox("Monitor")
        layout = QHBoxLayout()

        follow_group = QGroupBox("Log")
        follow_layout = QGridLayout()
        self.follow_button = QPushButton("Follow")
        self.stop_button = QPushButton("Stop")
        self.stop_button.setEnabled(False)
        self.lines_label = QLabel("Lines: 0")
        follow_layout.addWidget(QLabel(self.metrics_path), 0, 0, 1, 2)
        follow_layout.addWidget(self.follow_button, 1, 0)
        follow_layout.addWidget(self.stop_button, 1, 1)
        follow_layout.addWidget(self.lines_label, 2, 0, 1, 2)
        follow_group.setLayout(follow_layout)

        plot_group = QGroupBox("Plotting")
        plot_layout = QGridLayout()
        self.window_size_spinbox = QSpinBox()
        self.window_size_spinbox.setRange(10, 100000)
        self.window_size_spinbox.setValue(500)
        self.window_size_spinbox.setSuffix(" points")
        self.log_lines_spinbox = QSpinBox()
        self.log_lines_spinbox.setRange(10, 5000)
        self.log_lines_spinbox.setValue(200)
        self.log_lines_spinbox.setSuffix(" lines")
        plot_layout.addWidget(QLabel("Window Size:"), 0, 0)
        plot_layout.addWidget(self.window_size_spinbox, 0, 1)
        plot_layout.addWidget(QLabel("Log Tail:"), 1, 0)
        plot_layout.addWidget(self.log_lines_spinbox, 1, 1)
        plot_group.setLayout(plot_layout)

        layout.addWidget(follow_group)
        layout.addWidget(plot_group)
        layout.addStretch()
        self.control_panel.setLayout(layout)

    def _setup_tail_worker(self):
        self.thread = QThread()
        self.worker = MetricsTailWorker()
        self.worker.moveToThread(self.thread)

        self.worker.follow_status.connect(self.on_follow_status_changed)
        self.worker.line_count_updated.connect(self._update_line_count)
        self.worker.lines_received.connect(self.curve_processor.add_lines)
        self.worker.lines_received.connect(self.logger_widget.log_lines)
        self.curve_processor.curves_ready.connect(self.plot_widget.update_curves)
        self.curve_processor.latest_lr.connect(self.plot_widget.show_learning_rate)

        self.request_follow.connect(self.worker.start_following)
        self.request_stop.connect(self.worker.stop_following)
        self.follow_button.clicked.connect(self.follow)
        self.stop_button.clicked.connect(self.request_stop)
        self.window_size_spinbox.valueChanged.connect(self.curve_processor.set_window_size)
        self.log_lines_spinbox.valueChanged.connect(self.logger_widget.set_max_lines)

        self.thread.start()

    @Slot()
    def follow(self):
        self.request_follow.emit(self.metrics_path)

    @Slot(bool, str)
    def on_follow_status_changed(self, following, message):
        self.statusBar().showMessage(message, 3000)
        self.follow_button.setEnabled(not following)
        self.stop_button.setEnabled(following)

    @Slot(int)
    def _update_line_count(self, count):
        self.lines_seen = count
        self.lines_label.setText(f"Lines: {count}")

    def closeEvent(self, event):
        self.request_stop.emit()
        self.thread.quit()
        self.thread.wait(5000)
        self.processor_thread.quit()
        self.processor_thread.wait(5000)
        super().closeEvent(event)


def launch_monitor(metrics_path):
    """Open the monitor on `metrics_path` and block until it is closed."""
    app = QApplication.instance() or QApplication(sys.argv[:1])
    window = MonitorWindow(metrics_path)
    window.show()
    window.follow()
    logger.info("monitor started on %s", metrics_path)
    return app.exec()
