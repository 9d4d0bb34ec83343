"""File helpers: atomic writes, CSV export and run manifests."""

import csv
import datetime as _dt
import hashlib
import io
import json
import os
import platform
import sys
import tempfile
from pathlib import Path

FORMAT_VERSION = "gateforge-wf-1"
TOOL_VERSION = "0.1.0"


def atomic_write_text(path, text):
    """Write via a temporary sibling file and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, data):
    return atomic_write_text(path, json.dumps(data, indent=2, sort_keys=False) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return atomic_write_text(path, buf.getvalue())


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_manifest(output, argv, config, seed, inputs=(), outputs=(), started=None):
    """Write ``<output>.manifest.json`` next to ``output``.

    Timestamps live only here so that the primary outputs stay byte-identical
    across re-runs.
    """
    output = Path(output)
    manifest = {
        "command": list(argv),
        "config_hash": config_hash(config),
        "config": config,
        "seed": seed,
        "tool_version": TOOL_VERSION,
        "python": sys.version.split()[0],
        "platform": platform.platform(),
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "inputs": {str(p): file_digest(p) for p in inputs},
        "outputs": {str(p): file_digest(p) for p in outputs if Path(p).exists()},
    }
    return write_json(output.with_name(output.name + ".manifest.json"), manifest)
