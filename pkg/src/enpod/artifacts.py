"""Persistence: atomic file writes, the binary matrix format, CSV and JSON
helpers, hashing, and field export for external viewers."""

import hashlib
import json
import os
import struct
import tempfile

import numpy as np

from .errors import ParseError

MATRIX_MAGIC = b"EPODMAT1"


def _atomic_write(path, data, mode):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, mode) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_bytes(path, data):
    _atomic_write(path, data, "wb")


def atomic_write_text(path, text):
    _atomic_write(path, text, "w")


def save_matrix(path, array):
    """Write a 2D float64 array: magic, u32 rows, u32 cols, column-major
    little-endian payload."""
    array = np.asarray(array, dtype="<f8")
    if array.ndim != 2:
        raise ValueError("matrix files are strictly two-dimensional")
    rows, cols = array.shape
    header = MATRIX_MAGIC + struct.pack("<II", rows, cols)
    atomic_write_bytes(path, header + array.tobytes(order="F"))


def load_matrix(path):
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 16 or blob[:8] != MATRIX_MAGIC:
        raise ParseError(f"{path}: missing matrix file magic")
    rows, cols = struct.unpack("<II", blob[8:16])
    expected = 16 + 8 * rows * cols
    if len(blob) != expected:
        raise ParseError(
            f"{path}: payload is {len(blob) - 16} bytes, expected {expected - 16}")
    data = np.frombuffer(blob, dtype="<f8", offset=16)
    return data.reshape((rows, cols), order="F").copy()


def sha256_file(path):
    hasher = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            hasher.update(chunk)
    return hasher.hexdigest()


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return str(value)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path):
    """Parse a small CSV into (header list, list of row lists of strings)."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [line.rstrip("\n") for line in f if line.strip()]
    if not lines:
        raise ParseError(f"{path}: empty CSV")
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def export_field_vtk(space, field, path):
    """Legacy ASCII VTK unstructured grid with vertex velocity vectors and
    pressure; P2 midpoint dofs are dropped for viewing."""
    mesh = space.mesh
    V = mesh.n_vertices
    ns = space.n_scalar
    ux = field.velocity[:V]
    uy = field.velocity[ns:ns + V]
    lines = ["# vtk DataFile Version 2.0",
             "velocity and pressure field",
             "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {V} double"]
    for x, y in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r} 0.0")
    T = mesh.n_triangles
    lines.append(f"CELLS {T} {4 * T}")
    for i, j, k in mesh.triangles:
        lines.append(f"3 {i} {j} {k}")
    lines.append(f"CELL_TYPES {T}")
    lines.extend(["5"] * T)
    lines.append(f"POINT_DATA {V}")
    lines.append("VECTORS velocity double")
    for a, b in zip(ux, uy):
        lines.append(f"{float(a)!r} {float(b)!r} 0.0")
    lines.append("SCALARS pressure double 1")
    lines.append("LOOKUP_TABLE default")
    for p in field.pressure:
        lines.append(f"{float(p)!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")
