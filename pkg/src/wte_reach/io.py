"""Value-field files and CSV exports.

HJVF layout (little-endian)::

    offset  size  content
         0     4  magic b"HJVF"
         4     2  format version (uint16, currently 1)
         6    48  bounds: x_min, x_max, K_min, K_max, E_min, E_max (float64)
        54    12  node counts nx, nK, nE (uint32)
        66     8  time label (float64)
        74   8*N  values (float64), x index fastest
"""
from __future__ import annotations

import csv
import os
import struct
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from .errors import FieldFormatError
from .grid import AXES, GridSpec, ScalarField
from .reach import BrsSlice, FieldComparison
from .synth import Trajectory

MAGIC = b"HJVF"
VERSION = 1
_HEADER = struct.Struct("<4sH6d3Id")

AXIS_LABELS = {0: "x_tons", 1: "K_capacity", 2: "E_energy"}


def save_field(field: ScalarField, path: Union[str, os.PathLike]) -> None:
    spec = field.spec
    bounds = []
    for lo, hi in zip(spec.mins, spec.maxs):
        bounds += [lo, hi]
    header = _HEADER.pack(MAGIC, VERSION, *bounds, *spec.counts, field.time_label)
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(field.values.astype("<f8", copy=False).tobytes())
    except OSError as exc:
        raise OSError(f"cannot write field file {path}: {exc}") from exc


def load_field(path: Union[str, os.PathLike]) -> ScalarField:
    data = Path(path).read_bytes()
    return decode_field(data)


def decode_field(data: bytes) -> ScalarField:
    if len(data) < 4 or data[:4] != MAGIC:
        raise FieldFormatError("bad magic, not an HJVF file", 0)
    if len(data) < _HEADER.size:
        raise FieldFormatError(f"truncated header ({len(data)} of {_HEADER.size} bytes)", len(data))
    fields = _HEADER.unpack_from(data)
    version = fields[1]
    if version != VERSION:
        raise FieldFormatError(f"unsupported format version {version}", 4)
    b = fields[2:8]
    counts = fields[8:11]
    time_label = fields[11]
    try:
        spec = GridSpec((b[0], b[2], b[4]), (b[1], b[3], b[5]), counts)
    except ValueError as exc:
        raise FieldFormatError(f"invalid grid header: {exc}", 6) from exc
    expected = _HEADER.size + 8 * spec.size
    if len(data) != expected:
        raise FieldFormatError(
            f"payload length mismatch: file has {len(data)} bytes, expected {expected}",
            min(len(data), expected),
        )
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    return ScalarField(spec, values, time_label)


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def _write_rows(path, header, rows) -> None:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc


def export_csv(obj: Union[BrsSlice, Trajectory, FieldComparison, Mapping], path) -> None:
    if isinstance(obj, BrsSlice):
        a, b = obj.free_axes
        header = [AXIS_LABELS[a], AXIS_LABELS[b], "value", "member"]
        rows = []
        for i, ca in enumerate(obj.coords[0]):
            for j, cb in enumerate(obj.coords[1]):
                v = obj.values[i, j]
                rows.append([_fmt(ca), _fmt(cb), _fmt(v), int(v <= 0.0)])
        _write_rows(path, header, rows)
    elif isinstance(obj, Trajectory):
        header = ["t_years", "x_tons", "K_capacity", "E_energy", "q_per_year", "I_per_year",
                  "eta_tons_per_year", "value", "in_domain", "in_target"]
        rows = [
            [_fmt(s.t), *(_fmt(v) for v in s.z), *(_fmt(v) for v in s.u), _fmt(s.eta),
             _fmt(s.value), int(s.in_domain), int(s.in_target)]
            for s in obj.samples
        ]
        _write_rows(path, header, rows)
    elif isinstance(obj, FieldComparison):
        export_csv({
            "dominance_fraction": obj.dominance,
            "volume_a": obj.volume_a,
            "volume_b": obj.volume_b,
            "volume_ratio_b_over_a": obj.volume_ratio,
            "total_volume": obj.total_volume,
        }, path)
    elif isinstance(obj, Mapping):
        rows = [[k, _fmt(v) if isinstance(v, float) else v] for k, v in obj.items()]
        _write_rows(path, ["key", "value"], rows)
    else:
        raise TypeError(f"cannot export {type(obj).__name__} as CSV")


__all__ = ["AXES", "MAGIC", "VERSION", "decode_field", "export_csv", "load_field", "save_field"]
