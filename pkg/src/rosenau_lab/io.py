"""Configuration parsing, RSNU snapshots and CSV ledgers."""
from __future__ import annotations

import csv
import difflib
import io as _io
import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    ConfigError,
    SnapshotFormatError,
    SnapshotMagicError,
    SnapshotTruncatedError,
    SnapshotVersionError,
)
from .grid import Field, GridSpec, make_grid
from .solver import ModelParams, Trajectory, Variant, gaussian, mollified_riemann

__all__ = [
    "RunConfig",
    "parse_config",
    "parse_sweep_config",
    "load_config",
    "config_to_json",
    "write_snapshot",
    "read_snapshot",
    "save_snapshot",
    "load_snapshot",
    "export_ledger_csv",
    "read_csv",
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
    "TRAJECTORY_COLUMNS",
    "REPORT_COLUMNS",
]

SNAPSHOT_MAGIC = b"RSNU"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIQdd")

TRAJECTORY_COLUMNS = ("t", "l2", "l4", "linf", "h1_semi", "h2_semi", "energy", "dissipation")
REPORT_COLUMNS = ("eps", "beta", "n", "dt", "err_l1", "err_l2", "err_l3",
                  "entropy_residual", "monitor_max", "wall_s")


# --------------------------------------------------------------------------
# configuration

def _strict_keys(obj, allowed, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where or 'document'}: expected an object")
    for key in obj:
        if key not in allowed:
            near = difflib.get_close_matches(str(key), list(allowed), n=1, cutoff=0.0)
            hint = f"; nearest known key is {near[0]!r}" if near else ""
            raise ConfigError(f"unknown key {where}{key!r}{hint}")


def _num(obj, key, where, default=None, positive=False, nonneg=False, required=False):
    if key not in obj or obj[key] is None:
        if required:
            raise ConfigError(f"{where}{key} is required")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}{key} must be a finite number")
    if positive and not v > 0:
        raise ConfigError(f"{where}{key} must be positive")
    if nonneg and v < 0:
        raise ConfigError(f"{where}{key} must be nonnegative")
    return float(v)


def _int(obj, key, where, default=None, minimum=None, required=False):
    if key not in obj or obj[key] is None:
        if required:
            raise ConfigError(f"{where}{key} is required")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}{key} must be an integer")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{where}{key} must be at least {minimum}")
    return v


def _loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


_INITIAL_KEYS = {
    "gaussian": ("kind", "amplitude", "center", "sigma"),
    "riemann": ("kind", "ul", "ur", "width", "margin"),
}


@dataclass(frozen=True)
class RunConfig:
    """One dispersive run. ``initial`` is a normalized mapping whose
    ``kind`` is ``gaussian`` or ``riemann``; a riemann width of None means eps."""

    variant: Variant
    eps: float
    beta: float
    half_length: float
    n_points: int
    t_end: float
    initial: dict = field(default_factory=lambda: {"kind": "gaussian", "amplitude": 1.0,
                                                   "center": 0.0, "sigma": 1.0})
    dt: Optional[float] = None
    safety: float = 0.5
    stride: int = 1
    c0: float = 1.0

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.variant, self.eps, self.beta)

    @property
    def grid(self) -> GridSpec:
        return make_grid(self.half_length, self.n_points)

    def initial_field(self) -> Field:
        ini, g = self.initial, self.grid
        if ini["kind"] == "gaussian":
            return gaussian(g, ini["amplitude"], ini["center"], ini["sigma"])
        width = ini["width"] if ini["width"] is not None else self.eps
        return mollified_riemann(ini["ul"], ini["ur"], width, g, ini["margin"])

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "eps": self.eps,
            "beta": self.beta,
            "grid": {"half_length": self.half_length, "n_points": self.n_points},
            "t_end": self.t_end,
            "initial": dict(self.initial),
            "time_step": {"dt": self.dt, "safety": self.safety},
            "output": {"stride": self.stride},
            "c0": self.c0,
        }


def _parse_initial(obj, eps) -> dict:
    where = "initial."
    if not isinstance(obj, dict):
        raise ConfigError("initial: expected an object")
    kind = obj.get("kind", "gaussian")
    if kind not in _INITIAL_KEYS:
        raise ConfigError(f"initial.kind must be one of {sorted(_INITIAL_KEYS)}, got {kind!r}")
    _strict_keys(obj, _INITIAL_KEYS[kind], where)
    if kind == "gaussian":
        return {"kind": kind,
                "amplitude": _num(obj, "amplitude", where, 1.0),
                "center": _num(obj, "center", where, 0.0),
                "sigma": _num(obj, "sigma", where, 1.0, positive=True)}
    out = {"kind": kind,
           "ul": _num(obj, "ul", where, required=True),
           "ur": _num(obj, "ur", where, required=True),
           "width": _num(obj, "width", where, None, positive=True),
           "margin": _num(obj, "margin", where, None, positive=True)}
    if out["width"] is None and not eps > 0:
        raise ConfigError("initial.width is required when eps is 0")
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration document (JSON)."""
    doc = _loads(text)
    top = ("variant", "eps", "beta", "grid", "t_end", "initial", "time_step", "output", "c0")
    _strict_keys(doc, top, "")
    if "variant" not in doc:
        raise ConfigError("variant is required")
    try:
        variant = Variant.parse(doc["variant"])
    except (ValueError, ConfigError):
        raise ConfigError(f"variant must be 'rkv-rlw' or 'r-rlw', got {doc['variant']!r}") from None
    eps = _num(doc, "eps", "", required=True)
    if eps < 0:
        raise ConfigError("eps must be positive or zero")
    beta = _num(doc, "beta", "", required=True, positive=True)
    grid = doc.get("grid")
    if grid is None:
        raise ConfigError("grid is required")
    _strict_keys(grid, ("half_length", "n_points"), "grid.")
    L = _num(grid, "half_length", "grid.", required=True, positive=True)
    n = _int(grid, "n_points", "grid.", required=True, minimum=8)
    if n % 2:
        raise ConfigError("grid.n_points must be even")
    t_end = _num(doc, "t_end", "", required=True, positive=True)
    initial = _parse_initial(doc.get("initial", {"kind": "gaussian"}), eps)
    ts = doc.get("time_step", {})
    _strict_keys(ts, ("dt", "safety"), "time_step.")
    dt = _num(ts, "dt", "time_step.", None, positive=True)
    safety = _num(ts, "safety", "time_step.", 0.5, positive=True)
    out = doc.get("output", {})
    _strict_keys(out, ("stride",), "output.")
    stride = _int(out, "stride", "output.", 1, minimum=1)
    c0 = _num(doc, "c0", "", 1.0, positive=True)
    cfg = RunConfig(variant, eps, beta, L, n, t_end, initial, dt, safety, stride, c0)
    if initial["kind"] == "riemann":
        width = initial["width"] if initial["width"] is not None else eps
        if width < 2 * cfg.grid.spacing:
            raise ConfigError(f"initial.width {width} must be at least 2*dx = {2 * cfg.grid.spacing}")
        if initial["margin"] is not None and not initial["margin"] < L:
            raise ConfigError("initial.margin must be smaller than grid.half_length")
    return cfg


_SWEEP_KEYS = ("variant", "eps_sequence", "coupling_const", "initial", "half_length", "t_end",
               "window", "p_values", "resolution_factor", "ref_factor", "n_snapshots",
               "margin", "cfl", "safety", "c0", "phi")


def parse_sweep_config(text: str):
    """Parse a sweep document into an :class:`~rosenau_lab.harness.ExperimentPlan`."""
    from .harness import build_plan

    doc = _loads(text)
    _strict_keys(doc, _SWEEP_KEYS, "")
    _strict_keys(doc.get("initial", {}), ("ul", "ur"), "initial.")
    _strict_keys(doc.get("window", {}), ("t_min", "t_max", "x_min", "x_max"), "window.")
    if doc.get("phi") is not None:
        _strict_keys(doc["phi"], ("t0", "rt", "x0", "rx"), "phi.")
    try:
        return build_plan(doc)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def config_to_json(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# snapshots

def write_snapshot(f: Field, sink) -> None:
    """Write the RSNU header and little-endian float64 payload to a binary sink."""
    g = f.grid
    sink.write(_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.n_points, float(f.time),
                            float(g.half_length)))
    sink.write(np.ascontiguousarray(f.samples, dtype="<f8").tobytes())


def read_snapshot(source) -> Field:
    head = source.read(_HEADER.size)
    if len(head) < 4 or head[:4] != SNAPSHOT_MAGIC:
        raise SnapshotMagicError(f"bad magic {head[:4]!r}, expected {SNAPSHOT_MAGIC!r}")
    if len(head) < _HEADER.size:
        raise SnapshotTruncatedError(f"header truncated at {len(head)} of {_HEADER.size} bytes")
    _, version, n, t, L = _HEADER.unpack(head)
    if version != SNAPSHOT_VERSION:
        raise SnapshotVersionError(f"unsupported snapshot version {version}")
    payload = source.read(8 * n)
    if len(payload) != 8 * n:
        raise SnapshotTruncatedError(f"payload has {len(payload)} bytes, header promises {8 * n}")
    try:
        grid = make_grid(L, n)
    except ConfigError as exc:
        raise SnapshotFormatError(f"invalid grid in header: {exc}") from None
    return Field(grid, np.frombuffer(payload, dtype="<f8").astype(float), t)


def save_snapshot(f: Field, path) -> None:
    with open(path, "wb") as fh:
        write_snapshot(f, fh)


def load_snapshot(path) -> Field:
    with open(path, "rb") as fh:
        return read_snapshot(fh)


# --------------------------------------------------------------------------
# CSV

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def _trajectory_rows(traj: Trajectory):
    led = traj.ledger
    n = len(traj.step_times)
    if n == 0:
        raise ValueError("trajectory ledger is empty")
    cols = [traj.step_times] + [led[k] for k in TRAJECTORY_COLUMNS[1:]]
    return TRAJECTORY_COLUMNS, [[c[i] for c in cols] for i in range(n)]


def _report_rows(report):
    rows = []
    for r in report.rows:
        ent = r.entropy.value if r.entropy is not None else math.nan
        rows.append([r.eps, r.beta, r.n, r.dt,
                     r.lp_errors.get(1.0, math.nan), r.lp_errors.get(2.0, math.nan),
                     r.lp_errors.get(3.0, math.nan), ent, r.monitor_max, r.wall_s])
    if not rows:
        raise ValueError("report has no rows")
    return REPORT_COLUMNS, rows


def export_ledger_csv(obj, sink) -> None:
    """Write a trajectory ledger or a sweep report as CSV.

    ``sink`` is a path or a text stream. Paths are written atomically, so
    a failure never leaves a partial file behind.
    """
    if isinstance(obj, Trajectory):
        header, rows = _trajectory_rows(obj)
    else:
        header, rows = _report_rows(obj)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if hasattr(sink, "write"):
        sink.write(text)
        return
    path = Path(sink)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(source) -> dict:
    """Column name -> float array."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    reader = csv.reader(_io.StringIO(text))
    header = next(reader)
    data = [[float(v) for v in row] for row in reader if row]
    arr = np.array(data, dtype=float).reshape(len(data), len(header))
    return {h: arr[:, i] for i, h in enumerate(header)}
