"""Deterministic CSV/JSON writers and the run manifest."""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

FLOAT_FMT = "{:.16e}"


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return FLOAT_FMT.format(x)


def _plain(obj):
    """Numpy scalars/arrays and tuples to plain Python containers."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def dumps(obj, indent=2) -> str:
    """JSON text with every float written as 17 significant digits."""

    def enc(v, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
            return json.dumps(v)
        if isinstance(v, float):
            s = fmt_float(v)
            # JSON has no literal for non-finite numbers
            return json.dumps(s) if not math.isfinite(v) else s
        if isinstance(v, dict):
            if not v:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(x, level + 1)}" for k, x in v.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(v, list):
            if not v:
                return "[]"
            if all(not isinstance(x, (dict, list)) for x in v):
                return "[" + ", ".join(enc(x, level + 1) for x in v) + "]"
            return "[\n" + ",\n".join(pad + enc(x, level + 1) for x in v) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(v).__name__}")

    return enc(_plain(obj), 0) + "\n"


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    _atomic_write(Path(path), dumps(obj))


def write_csv(path, header, rows):
    import io as _io

    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    _atomic_write(Path(path), buf.getvalue())


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class RunManifest:
    """Collects outputs of one run; :meth:`write` must be the last write."""

    def __init__(self, out_dir, command, config_echo, version):
        self.out_dir = Path(out_dir)
        self.command = command
        self.config = config_echo
        self.version = version
        self.started = _now()
        self.outputs = []
        self.diagnostics = {}

    def add(self, name):
        self.outputs.append(name)

    def json(self, name, obj):
        write_json(self.out_dir / name, obj)
        self.add(name)

    def csv(self, name, header, rows):
        write_csv(self.out_dir / name, header, rows)
        self.add(name)

    def write(self, status="ok"):
        body = {
            "command": self.command,
            "version": self.version,
            "status": status,
            "started": self.started,
            "finished": _now(),
            "config": self.config,
            "outputs": {n: sha256(self.out_dir / n) for n in self.outputs},
            "diagnostics": self.diagnostics,
        }
        write_json(self.out_dir / "manifest.json", body)


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
