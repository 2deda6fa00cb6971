"""Plain-text point-cloud files.

Format (UTF-8, LF line endings): a header line ``d n version`` followed by
``n`` lines of ``d`` whitespace-separated decimal reals.  Rows must have
unit norm within 1e-6; loading rejects the file otherwise, naming the first
offending row.  Values are written with 17 significant digits, so a
save/load round trip reproduces the doubles bit for bit.
"""

from __future__ import annotations

import numpy as np

__all__ = ["CLOUDFILE_VERSION", "CloudFileError", "save_cloud", "load_cloud"]

CLOUDFILE_VERSION = 1
_NORM_TOL = 1e-6


class CloudFileError(ValueError):
    """Malformed cloud file (bad header, row count, or non-unit rows)."""


def save_cloud(path, points):
    """Write an (n, d) array of unit vectors to ``path``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{d} {n} {CLOUDFILE_VERSION}\n")
        for row in points:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_cloud(path):
    """Read a cloud file and return its (n, d) array.

    Raises
    ------
    CloudFileError
        On malformed headers, wrong row counts or widths, unparsable
        numbers, or rows whose norm deviates from 1 by more than 1e-6
        (the message names the offending 1-based row).
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise CloudFileError(f"{path}: header must be 'd n version'")
        try:
            d, n, version = (int(tok) for tok in header)
        except ValueError:
            raise CloudFileError(f"{path}: non-integer header fields") from None
        if version != CLOUDFILE_VERSION:
            raise CloudFileError(f"{path}: unsupported format version {version}")
        if d < 2 or n < 1:
            raise CloudFileError(f"{path}: invalid dimensions d={d} n={n}")
        rows = []
        for i in range(n):
            line = fh.readline()
            if not line:
                raise CloudFileError(f"{path}: expected {n} rows, found {i}")
            try:
                row = [float(tok) for tok in line.split()]
            except ValueError:
                raise CloudFileError(f"{path}: row {i + 1}: unparsable value") from None
            if len(row) != d:
                raise CloudFileError(
                    f"{path}: row {i + 1}: expected {d} values, found {len(row)}"
                )
            rows.append(row)
    points = np.asarray(rows, dtype=float)
    norms = np.linalg.norm(points, axis=1)
    bad = np.abs(norms - 1.0) > _NORM_TOL
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise CloudFileError(
            f"{path}: row {idx + 1}: norm {norms[idx]:.8f} deviates from 1 "
            f"by more than {_NORM_TOL:g}"
        )
    return points
