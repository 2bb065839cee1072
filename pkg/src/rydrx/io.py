"""Delimited-text and binary persistence helpers.

CSV files written here carry a leading block of ``# key: value`` comment
lines (values JSON-encoded) followed by a plain header row and data rows.
Numbers are written with ``repr`` so files round-trip exactly and repeated
runs produce byte-identical payloads.
"""

import json
import struct

import numpy as np

from .errors import InputError

BINARY_MAGIC = b"RYDRXTT1"


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path, columns, rows, metadata=None):
    """Write ``rows`` under ``columns`` with a metadata comment block."""
    lines = []
    for key in sorted(metadata or {}):
        lines.append(f"# {key}: {json.dumps(metadata[key], sort_keys=True)}")
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise InputError(f"row has {len(row)} fields, expected {len(columns)}")
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Return ``(metadata, columns, data)`` where data maps column -> list.

    Numeric-looking fields are converted to float.
    """
    metadata = {}
    columns = None
    data = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                try:
                    metadata[key.strip()] = json.loads(value.strip())
                except json.JSONDecodeError:
                    metadata[key.strip()] = value.strip()
                continue
            fields = line.split(",")
            if columns is None:
                columns = fields
                data = {c: [] for c in columns}
                continue
            for col, field in zip(columns, fields):
                try:
                    data[col].append(float(field))
                except ValueError:
                    data[col].append(field)
    if columns is None:
        raise InputError(f"{path}: no header row")
    return metadata, columns, data


def write_binary_trace(path, samples, header):
    """Write float64 little-endian samples behind a JSON text header.

    Layout: 8-byte magic, uint32 LE header length, UTF-8 JSON header,
    then the raw ``<f8`` sample block.
    """
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.asarray(samples, dtype="<f8").tobytes())
    return path


def read_binary_trace(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(BINARY_MAGIC))
        if magic != BINARY_MAGIC:
            raise InputError(f"{path}: not a trace container")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n).decode("utf-8"))
        samples = np.frombuffer(fh.read(), dtype="<f8").astype(float)
    return header, samples
