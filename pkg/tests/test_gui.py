import numpy as np
import pytest

pytest.importorskip("PySide6")
pytest.importorskip("pyqtgraph")

from PySide6.QtWidgets import QApplication  # noqa: E402

from gui.main_window import MonitorWindow  # noqa: E402
from gui.widgets.logger_widget import LoggerWidget  # noqa: E402
from gui.widgets.plot_widget import PlotWidget  # noqa: E402


@pytest.fixture(scope="module")
def app():
    return QApplication.instance() or QApplication([])


def test_plot_widget_adds_a_line_per_stage(app):
    widget = PlotWidget()
    widget.update_curves({1: (np.array([1, 2]), np.array([3.0, 2.0]))})
    widget.update_curves({1: (np.array([1, 2, 3]), np.array([3.0, 2.0, 1.5])), 2: (np.array([4]), np.array([1.0]))})
    assert sorted(widget.lines) == [1, 2]
    xs, ys = widget.lines[1].getData()
    assert list(ys) == [3.0, 2.0, 1.5]
    widget.show_learning_rate(0.00025)
    assert widget.lr_label.text() == "lr: 2.500e-04"


def test_logger_widget_keeps_last_lines(app):
    widget = LoggerWidget(max_lines=2)
    widget.log_lines(["1\t1\t3.0\t0.1", "2\t1\t2.0\t0.1", "3\t1\t1.0\t0.1"])
    widget.update_display()
    assert widget.toPlainText().splitlines() == ["2  1  2.0  0.1", "3  1  1.0  0.1"]
    widget.set_max_lines(1)
    assert widget.toPlainText() == "3  1  1.0  0.1"


def test_monitor_window_opens_and_closes(app, tmp_path):
    window = MonitorWindow(tmp_path / "metrics.tsv")
    assert window.stop_button.isEnabled() is False
    window.on_follow_status_changed(True, "Following.")
    assert window.stop_button.isEnabled()
    window.close()
    assert not window.thread.isRunning()
    assert not window.processor_thread.isRunning()


def test_log_tail_spinbox_limits_the_logger(app, tmp_path):
    window = MonitorWindow(tmp_path / "metrics.tsv")
    window.logger_widget.log_lines([f"{k}\t1\t1.0\t0.1" for k in range(30)])
    window.log_lines_spinbox.setValue(10)
    assert window.logger_widget.max_lines == 10
    assert len(window.logger_widget.toPlainText().splitlines()) == 10
    window.close()
