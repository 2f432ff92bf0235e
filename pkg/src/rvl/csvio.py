"""CSV emission and reading helpers.

Numbers are printed with 17 significant digits so that doubles
round-trip exactly; line endings are always LF so byte-level
comparisons between runs are meaningful.
"""

import csv
import io

import numpy as np


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def render_csv(header, rows):
    """Render a trace to CSV text (header + one line per step)."""
    rows = list(rows)
    if not rows:
        raise ValueError("refusing to emit an empty trace")
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_text(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def read_csv_columns(source):
    """Read a CSV produced by this package into {column: float array}.

    ``source`` may be a path or CSV text.  Used by the round-trip checks
    that recompute every summary scalar from the emitted file alone.
    """
    if "\n" in str(source):
        fh = io.StringIO(source)
        reader = csv.reader(fh)
        rows = list(reader)
    else:
        with open(source, newline="") as fh:
            rows = list(csv.reader(fh))
    header = rows[0]
    cols = {name: [] for name in header}
    for row in rows[1:]:
        for name, value in zip(header, row):
            if value in ("true", "false"):
                cols[name].append(1.0 if value == "true" else 0.0)
            else:
                cols[name].append(float(value))
    return {name: np.asarray(vals) for name, vals in cols.items()}


def dump_stream_csv(stream, horizon):
    """Replayable dump of a regression stream: t, features, target, disturbance."""
    xs, ys = stream.emit_block(1, horizon)
    d = ys - xs @ stream.theta_star
    n = xs.shape[1]
    header = ["t"] + [f"x{i}" for i in range(n)] + ["y", "d"]
    rows = []
    for t in range(horizon):
        rows.append([t + 1, *xs[t], ys[t], d[t]])
    return render_csv(header, rows)


class ReplayFeatures:
    """Feature generator that plays back a dumped stream's features."""

    def __init__(self, xs):
        self.xs = np.asarray(xs, dtype=float)
        self.dim = self.xs.shape[1]

    @property
    def x_max(self):
        return float(np.max(np.sqrt(np.sum(self.xs * self.xs, axis=1))))

    def block(self, t_start, count):
        return self.xs[t_start - 1: t_start - 1 + count].copy()


def load_stream_csv(source):
    """Rebuild (features array, targets, disturbances) from a stream dump."""
    cols = read_csv_columns(source)
    n = sum(1 for name in cols if name.startswith("x"))
    xs = np.stack([cols[f"x{i}"] for i in range(n)], axis=1)
    return xs, cols["y"], cols["d"]
