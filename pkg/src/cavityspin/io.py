"""Byte-stable serialization of results, timelines and run manifests."""
from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .stream import Timeline

SIG_DIGITS = 9

EVENT_HEADER = ("t_ns", "detector", "origin")
WINDOW_HEADER = ("t0_ns", "window_end_ns", "n_events_in_window")
TRAJECTORY_HEADER = ("t_entry", "x0", "z0", "vx", "vz", "phase")
TABLE_HEADERS = {
    "fig3e_profile.csv": ("t_us", "rate_per_s"),
    "fig4b.csv": ("pulse", "beta2_hat", "sigma"),
    "fig5.csv": ("power_uW", "n_minus", "n_plus"),
    "design.csv": ("delta_hz", "sn"),
    "g2.csv": ("lag_ns", "g2", "pairs"),
}


def fmt(x):
    """Fixed text for a number: integers verbatim, floats at 9 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{SIG_DIGITS}g}"


def to_plain(obj, digits=SIG_DIGITS):
    """JSON-ready copy of ``obj`` with floats rounded to ``digits`` significant digits.

    Non-finite floats become strings since JSON has no literal for them.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name), digits) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_plain(v, digits) for k, v in obj.items()}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return [to_plain(v, digits) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [to_plain(v, digits) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return fmt(x)
        return float(f"{x:.{digits}g}") if digits else x
    return obj


def dumps_json(obj):
    return json.dumps(to_plain(obj), sort_keys=True, indent=2) + "\n"


def result_document(subcommand, seed, config, result):
    """Result with the fully resolved config echoed next to it.

    The config echo keeps full float precision so it reloads exactly.
    """
    return {
        "subcommand": subcommand,
        "seed": int(seed),
        "config": config.to_dict(),
        "result": to_plain(result),
    }


def _write_text(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_json(doc, path):
    text = json.dumps({k: (v if k == "config" else to_plain(v)) for k, v in doc.items()},
                      sort_keys=True, indent=2) + "\n"
    _write_text(path, text)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def write_csv(header, rows, path):
    _write_text(path, csv_text(header, rows))


def write_results(result, fmt_name, path, header=None):
    """Write a result as JSON (any document) or CSV (``header`` plus row iterable).

    Raises
    ------
    OSError
        On any IO failure; the CLI maps this to exit code 4.
    """
    if fmt_name == "json":
        write_json(result if isinstance(result, dict) else {"result": result}, path)
    elif fmt_name == "csv":
        name = os.path.basename(path)
        header = header or TABLE_HEADERS[name]
        write_csv(header, result, path)
    else:
        raise ValueError(f"unknown format {fmt_name!r}")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# -- timelines ---------------------------------------------------------------------

def write_events(tl: Timeline, path):
    rows = zip(tl.t_ns.tolist(), tl.detector.tolist(), tl.origin.tolist())
    write_csv(EVENT_HEADER, rows, path)


def read_events(path):
    """Load an event CSV; rows are sorted by (t_ns, detector) on load."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != EVENT_HEADER:
            raise ValueError(f"{path}: expected header {','.join(EVENT_HEADER)}")
        data = np.array([[int(v) for v in row] for row in reader if row], dtype=np.int64)
    if data.size == 0:
        return Timeline.empty()
    order = np.lexsort((data[:, 2], data[:, 1], data[:, 0]))
    data = data[order]
    return Timeline(data[:, 0], data[:, 1], data[:, 2])


def window_rows(timeline, coincidences):
    t = timeline.t_ns
    for co in coincidences:
        n = int(np.searchsorted(t, co.window_end, "left") - np.searchsorted(t, co.t0, "left"))
        yield co.t0, co.window_end, n


def write_windows(timeline, coincidences, path):
    write_csv(WINDOW_HEADER, window_rows(timeline, coincidences), path)


def write_trajectories(batch, path):
    cols = [getattr(batch, name) for name in TRAJECTORY_HEADER]
    write_csv(TRAJECTORY_HEADER, zip(*(c.tolist() for c in cols)), path)


# -- manifest --------------------------------------------------------------------

@dataclass
class RunManifest:
    config_hash: str
    seed: int
    version: str
    subcommand: str
    outputs: list = field(default_factory=list)
    wall_time_s: float = 0.0
    started: float = field(default_factory=time.perf_counter, repr=False)

    @classmethod
    def start(cls, config, seed, subcommand):
        return cls(config.digest(), int(seed), __version__, subcommand)

    def add(self, path):
        self.outputs.append(os.fspath(path))
        return path

    def finish(self, out_dir):
        """Write ``manifest.json``; kept apart from results since wall time varies."""
        self.wall_time_s = time.perf_counter() - self.started
        doc = {k: v for k, v in dataclasses.asdict(self).items() if k != "started"}
        path = os.path.join(out_dir, "manifest.json")
        _write_text(path, json.dumps(to_plain(doc), sort_keys=True, indent=2) + "\n")
        return path
