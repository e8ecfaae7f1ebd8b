"""On-disk formats: parameter checkpoints, metrics CSV and run manifests.

Checkpoint layout (``.fipm``, little-endian)::

    8 bytes   magic  b"FIPMPRM\\0"
    4 bytes   uint32 format version
    8 bytes   uint64 length of the JSON header in bytes
    header    UTF-8 JSON: {"layout": [[name, shape, tag], ...], "spec": {...} | null,
                            "n": total entries, "dtype": "<f8"}
    payload   n float64 values, the flat parameter vector

The layout list is in storage order, so offsets are implicit.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import platform
import struct
import subprocess
from pathlib import Path

import numpy as np

from .errors import ConfigError, MalformedCsv
from .metrics import CSV_COLUMNS, MetricsRecord
from .nn import MlpSpec, Params, build_layout
from .rng import GENERATOR_NAME

MAGIC = b"FIPMPRM\0"
PARAMS_FORMAT_VERSION = 1
CSV_FORMAT_VERSION = 1
MANIFEST_FORMAT_VERSION = 1
_HEAD = struct.Struct("<8sIQ")


def params_to_bytes(params: Params, spec: MlpSpec = None) -> bytes:
    layout = [[name, list(b.shape), b.tag] for name, b in
              sorted(params.layout.items(), key=lambda kv: kv[1].offset)]
    header = json.dumps({
        "layout": layout,
        "spec": None if spec is None else spec.to_dict(),
        "n": len(params),
        "dtype": "<f8",
    }, sort_keys=True).encode("utf-8")
    payload = params.flat.astype("<f8").tobytes()
    return _HEAD.pack(MAGIC, PARAMS_FORMAT_VERSION, len(header)) + header + payload


def params_from_bytes(blob: bytes):
    """Inverse of :func:`params_to_bytes`; returns ``(params, spec_or_None)``."""
    if len(blob) < _HEAD.size:
        raise ConfigError("truncated parameter file")
    magic, version, hlen = _HEAD.unpack_from(blob)
    if magic != MAGIC:
        raise ConfigError("not a parameter file (bad magic)")
    if version != PARAMS_FORMAT_VERSION:
        raise ConfigError(f"unsupported parameter format version {version}")
    start = _HEAD.size
    header = json.loads(blob[start:start + hlen].decode("utf-8"))
    data = np.frombuffer(blob, dtype="<f8", offset=start + hlen)
    if data.shape[0] != header["n"]:
        raise ConfigError("parameter payload length does not match the header")
    layout = build_layout([(n, tuple(s), t) for n, s, t in header["layout"]])
    params = Params(data.astype(np.float64), layout)
    spec = None if header["spec"] is None else MlpSpec.from_dict(header["spec"])
    return params, spec


def save_params(path, params: Params, spec: MlpSpec = None):
    Path(path).write_bytes(params_to_bytes(params, spec))


def load_params(path):
    return params_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# Metrics CSV
# ---------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_metrics_csv(path, records):
    """Write metric rows with the fixed column header. Empty cells mean "not logged"."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        row = r.as_row() if isinstance(r, MetricsRecord) else r
        w.writerow([_fmt(row.get(c)) for c in CSV_COLUMNS])
    Path(path).write_text(buf.getvalue())


def read_metrics_csv(path):
    """Read a metrics CSV into a list of :class:`MetricsRecord`.

    Raises :class:`MalformedCsv` on a missing file, a bad header, no data rows
    or unparsable cells.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MalformedCsv(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows:
        raise MalformedCsv("metrics CSV is empty")
    header = rows[0]
    missing = [c for c in ("iter", "e_hat", "omega_hat", "lambda") if c not in header]
    if missing:
        raise MalformedCsv(f"metrics CSV lacks columns {missing}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise MalformedCsv("metrics CSV has no data rows")
    idx = {c: i for i, c in enumerate(header)}
    out = []
    for k, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise MalformedCsv(f"line {k}: expected {len(header)} fields, got {len(r)}")

        def cell(name, kind=float, optional=True):
            if name not in idx or r[idx[name]] == "":
                if optional:
                    return None
                raise MalformedCsv(f"line {k}: missing {name}")
            try:
                return kind(r[idx[name]])
            except ValueError as exc:
                raise MalformedCsv(f"line {k}: bad {name} value {r[idx[name]]!r}") from exc

        out.append(MetricsRecord(
            iter=cell("iter", int, False), e_hat=cell("e_hat", float, False),
            omega_hat=cell("omega_hat", float, False), lam=cell("lambda", float, False),
            loss=cell("loss"), chi2_oracle=cell("chi2_oracle"),
            chi2_kde_proxy=cell("chi2_kde_proxy"), wall_ms=cell("wall_ms") or 0.0,
        ))
    return out


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------


def git_revision(cwd=None):
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], cwd=cwd, capture_output=True,
                             text=True, timeout=5, check=True)
        return out.stdout.strip() or None
    except (OSError, subprocess.SubprocessError):
        return None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def build_manifest(experiment, config, seeds, outputs=(), extra=None):
    from . import __version__

    return _jsonable({
        "experiment": experiment,
        "config": config,
        "seeds": list(seeds),
        "rng": GENERATOR_NAME,
        "git_revision": git_revision(Path(__file__).resolve().parent),
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "formats": {
            "params": PARAMS_FORMAT_VERSION,
            "metrics_csv": CSV_FORMAT_VERSION,
            "manifest": MANIFEST_FORMAT_VERSION,
        },
        "outputs": sorted(str(o) for o in outputs),
        **(extra or {}),
    })


def write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _relative(path, root):
    try:
        return Path(path).resolve().relative_to(Path(root).resolve())
    except ValueError:
        return Path(path)


def write_manifest(directory, experiment, config, seeds, outputs=(), extra=None):
    """Write ``manifest.json`` into ``directory``; outputs are listed relative to it."""
    path = Path(directory) / "manifest.json"
    outputs = [_relative(o, directory) for o in outputs]
    write_json(path, build_manifest(experiment, config, seeds, outputs, extra))
    return path


def output_root(default="runs"):
    """Output root directory: ``$FISHERIPM_OUTPUT`` or ``default``."""
    return Path(os.environ.get("FISHERIPM_OUTPUT", default))
