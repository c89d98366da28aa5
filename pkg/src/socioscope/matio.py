"""CSV helpers for class-indexed matrices and small tables.

All pipeline outputs are flat CSV/JSON so downstream renderers and
external tools need no custom parser. Matrices carry a header row and a
label column of class indices; missing entries are written as empty
fields and read back as NaN.
"""

from __future__ import annotations

import csv
import math

import numpy as np


def write_matrix_csv(path, matrix: np.ndarray, labels=None, corner: str = "class") -> None:
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    labels = list(labels) if labels is not None else list(range(1, n + 1))
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([corner] + [str(x) for x in labels])
        for i, row in enumerate(m):
            w.writerow([labels[i]] + ["" if math.isnan(x) else repr(float(x)) for x in row])


def read_matrix_csv(path) -> tuple[np.ndarray, list[str]]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    labels = rows[0][1:]
    data = [[float(x) if x else math.nan for x in r[1:]] for r in rows[1:]]
    return np.array(data), labels


def write_table_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
