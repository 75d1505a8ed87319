"""
Append-only training metrics: one "step<TAB>stage<TAB>loss<TAB>lr" line per logging interval.
"""
from __future__ import annotations

import pandas as pd

COLUMNS = ["step", "stage", "loss", "lr"]


class MetricsLog:
    def __init__(self, path, append=False):
        self.path = path
        self._file = open(path, "a" if append else "w", encoding="utf-8")

    def write(self, step, stage, loss, lr):
        self._file.write(f"{step}\t{stage}\t{loss:.6f}\t{lr:.8g}\n")
        self._file.flush()  # followed live by the monitor

    def close(self):
        if not self._file.closed:
            self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_metrics(path) -> pd.DataFrame:
    return pd.read_csv(path, sep="\t", names=COLUMNS, header=None,
                       dtype={"step": "int64", "stage": "int64", "loss": "float64", "lr": "float64"})
