"""Binary field snapshots, CSV traces, reports and hashed manifests.

Snapshot format "VWF1": magic ``VWF1``; little-endian header of
u32 version, u32 dim, one u32 per axis (node counts), f64 spacing,
f64 time, u32 field count; then the fields as row-major f64 payloads
in the order they were passed to the writer.

Every artifact is written atomically (temp file in the target
directory, then rename), and `write_manifest` records each file with
its SHA-256 so that reruns can be compared byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile

import numpy as np

MAGIC = b"VWF1"
VERSION = 1


class SnapshotFormatError(ValueError):
    """Malformed VWF1 payload."""


def encode_snapshot(fields, dim: int, shape, spacing: float, time: float) -> bytes:
    """Serialize a list of equal-shape scalar fields to VWF1 bytes."""
    shape = tuple(int(n) for n in shape)
    if len(shape) != dim:
        raise ValueError("shape arity must match dim")
    blobs = []
    for f in fields:
        f = np.ascontiguousarray(np.asarray(f, dtype="<f8"))
        if f.shape != shape:
            raise ValueError(f"field shape {f.shape} does not match grid {shape}")
        blobs.append(f.tobytes())
    head = MAGIC + struct.pack("<II", VERSION, dim)
    head += struct.pack(f"<{dim}I", *shape)
    head += struct.pack("<ddI", float(spacing), float(time), len(blobs))
    return head + b"".join(blobs)


def decode_snapshot(data: bytes):
    """Parse VWF1 bytes; returns (fields, dim, shape, spacing, time)."""
    if data[:4] != MAGIC:
        raise SnapshotFormatError("bad magic")
    off = 4
    version, dim = struct.unpack_from("<II", data, off)
    off += 8
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported version {version}")
    if dim not in (2, 3):
        raise SnapshotFormatError(f"bad dimension {dim}")
    shape = struct.unpack_from(f"<{dim}I", data, off)
    off += 4 * dim
    spacing, time, n_fields = struct.unpack_from("<ddI", data, off)
    off += 20
    count = int(np.prod(shape))
    fields = []
    for _ in range(n_fields):
        end = off + 8 * count
        if end > len(data):
            raise SnapshotFormatError("truncated payload")
        arr = np.frombuffer(data[off:end], dtype="<f8").reshape(shape)
        fields.append(arr.copy())
        off = end
    if off != len(data):
        raise SnapshotFormatError("trailing bytes after declared fields")
    return fields, dim, shape, spacing, time


def atomic_write(path: str, data: bytes):
    """Write bytes via a temp file and rename (same directory)."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_snapshot(path: str, fields, dim, shape, spacing, time):
    atomic_write(path, encode_snapshot(fields, dim, shape, spacing, time))


def read_snapshot(path: str):
    with open(path, "rb") as fh:
        return decode_snapshot(fh.read())


def vector_field_components(field: np.ndarray):
    """Split a (..., k) array into k scalar fields for the snapshot writer."""
    return [np.ascontiguousarray(field[..., i]) for i in range(field.shape[-1])]


def energy_trace_csv(times, total, cone, dissipation) -> bytes:
    lines = ["t,E_total,E_cone,dissipation"]
    for row in zip(times, total, cone, dissipation):
        lines.append(",".join(format(float(v), ".17g") for v in row))
    return ("\n".join(lines) + "\n").encode()

def read_energy_trace_csv(data: bytes):
    lines = data.decode().strip().split("\n")
    if lines[0] != "t,E_total,E_cone,dissipation":
        raise ValueError("unexpected trace header")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    if rows.size == 0:
        rows = rows.reshape(0, 4)
    return rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3]


def table_csv(header: list[str], rows) -> bytes:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, float):
                cells.append(format(cell, ".12g"))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    return ("\n".join(lines) + "\n").encode()


def report_text(lines) -> bytes:
    return ("\n".join(lines) + "\n").encode()


def pgm_image(field: np.ndarray) -> bytes:
    """8-bit portable graymap of a 2-D field, for quick visual checks."""
    field = np.asarray(field, dtype=float)
    if field.ndim != 2:
        raise ValueError("pgm dump needs a 2-D scalar field")
    lo, hi = float(np.min(field)), float(np.max(field))
    span = hi - lo if hi > lo else 1.0
    img = np.round(255.0 * (field - lo) / span).astype(np.uint8)
    header = f"P5\n{field.shape[1]} {field.shape[0]}\n255\n".encode()
    return header + img.tobytes()


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_artifacts(out_dir: str, artifacts: dict) -> str:
    """Write named artifacts plus a manifest of their hashes.

    `artifacts` maps a relative file name to its byte content.  The
    manifest lists every artifact sorted by name with size and SHA-256;
    identical inputs therefore produce byte-identical manifests.
    Returns the manifest path.
    """
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for name in sorted(artifacts):
        path = os.path.join(out_dir, name)
        atomic_write(path, artifacts[name])
        entries.append({
            "path": name,
            "bytes": len(artifacts[name]),
            "sha256": sha256_file(path),
        })
    manifest = json.dumps({"artifacts": entries}, indent=2, sort_keys=True) + "\n"
    manifest_path = os.path.join(out_dir, "manifest.json")
    atomic_write(manifest_path, manifest.encode())
    return manifest_path


def read_manifest(path: str) -> dict:
    with open(path, "rb") as fh:
        return json.loads(fh.read().decode())
