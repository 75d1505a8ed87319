"""
Live loss-curve widget using pyqtgraph, one line per training stage.
"""
from PySide6.QtWidgets import QWidget, QVBoxLayout, QLabel
from PySide6.QtCore import Slot
import pyqtgraph as pg


class PlotWidget(QWidget):
    def __init__(self, parent=None):
        super().__init__(parent)
        self.lines = {}  # stage -> PlotDataItem
        self.colors = ['c', 'm', 'y', 'g', 'r', 'b', 'w']

        self.plot_widget = pg.PlotWidget()
        self.plot_widget.showGrid(x=True, y=True)
        self.plot_widget.getPlotItem().enableAutoRange(axis='y')
        self.plot_widget.setLabel('left', 'Loss')
        self.plot_widget.setLabel('bottom', 'Step')
        self.legend = self.plot_widget.addLegend()

        self.lr_label = QLabel("lr: -")

        layout = QVBoxLayout()
        layout.addWidget(self.plot_widget)
        layout.addWidget(self.lr_label)
        self.setLayout(layout)

    def _add_stage_line(self, stage):
        pen = pg.mkPen(color=self.colors[(stage - 1) % len(self.colors)], width=2)
        self.lines[stage] = self.plot_widget.plot([], [], pen=pen, name=f"stage {stage}")

    @Slot(object)
    def update_curves(self, curves):
        """curves: stage -> (steps, losses)."""
        for stage, (steps, losses) in curves.items():
            if stage not in self.lines:
                self._add_stage_line(stage)
            self.lines[stage].setData(steps, losses)

    @Slot(float)
    def show_learning_rate(self, lr):
        self.lr_label.setText(f"lr: {lr:.3e}")
