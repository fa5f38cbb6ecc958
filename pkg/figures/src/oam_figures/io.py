"""Readers for the simulation CLI's external output formats.

Two formats are consumed:

* overlap-scan CSV: '#'-prefixed preamble lines, then a header row with
  the columns listed in ``SCAN_COLUMNS``, then data rows;
* kernel dump: ``<base>.bin`` holding a row-major little-endian
  complex128 matrix plus ``<base>.json`` sidecar with shape, axes,
  metadata and a sha256 checksum of the binary payload.
"""

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

# Header the scan CSVs are written with; order is part of the contract.
SCAN_COLUMNS = [
    "l", "m", "zs_ratio", "re_chi", "im_chi",
    "abs_chi_tilde", "abs_chi_over_s", "convention", "quad_order", "is_peak",
]

_NUMERIC = {"l": int, "m": int, "zs_ratio": float, "re_chi": float,
            "im_chi": float, "abs_chi_tilde": float, "abs_chi_over_s": float,
            "quad_order": int, "is_peak": int}


class SchemaError(Exception):
    """The input file does not match the documented output format."""


@dataclass
class ScanTable:
    preamble: list
    columns: dict            # column name -> numpy array (or object array)

    @property
    def n_rows(self):
        return 0 if not self.columns else len(next(iter(self.columns.values())))

    def group_values(self, key="l"):
        """Distinct group keys in first-appearance order."""
        seen = []
        for v in self.columns.get(key, []):
            if v not in seen:
                seen.append(v)
        return seen

    def rows_where(self, key, value):
        mask = self.columns[key] == value
        return {name: col[mask] for name, col in self.columns.items()}


def read_scan_csv(path):
    """Parse an overlap-scan CSV into a ScanTable.

    Raises SchemaError when the header does not contain the documented
    columns. An empty data section is valid and yields zero rows.
    """
    preamble = []
    with open(path, newline="") as fh:
        rows = []
        for line in fh:
            if line.startswith("#"):
                preamble.append(line.rstrip("\n"))
            elif line.strip():
                rows.append(line.rstrip("\n"))
    if not rows:
        raise SchemaError(f"{path}: no header row found")
    header = next(csv.reader([rows[0]]))
    missing = [c for c in SCAN_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")

    parsed = {name: [] for name in header}
    for record in csv.reader(rows[1:]):
        if len(record) != len(header):
            raise SchemaError(f"{path}: row width {len(record)} != header "
                              f"width {len(header)}")
        for name, value in zip(header, record):
            conv = _NUMERIC.get(name, str)
            try:
                parsed[name].append(conv(value))
            except ValueError as exc:
                raise SchemaError(f"{path}: bad value {value!r} in column "
                                  f"{name}") from exc
    columns = {name: np.array(vals) for name, vals in parsed.items()}
    return ScanTable(preamble=preamble, columns=columns)


@dataclass
class KernelData:
    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)


def read_kernel(path_base):
    """Load a kernel dump written as <base>.bin + <base>.json."""
    try:
        with open(path_base + ".json") as fh:
            sidecar = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path_base}.json: {exc}") from exc
    for key in ("shape", "axis1", "axis2", "sha256"):
        if key not in sidecar:
            raise SchemaError(f"{path_base}.json: missing field {key!r}")
    with open(path_base + ".bin", "rb") as fh:
        raw = fh.read()
    if hashlib.sha256(raw).hexdigest() != sidecar["sha256"]:
        raise SchemaError(f"{path_base}.bin: checksum mismatch")
    shape = tuple(sidecar["shape"])
    if len(raw) != int(np.prod(shape)) * 16:
        raise SchemaError(f"{path_base}.bin: payload is {len(raw)} bytes, "
                          f"shape {shape} needs {int(np.prod(shape)) * 16}")
    values = np.frombuffer(raw, dtype="<c16").reshape(shape).copy()
    axis1 = np.asarray(sidecar["axis1"], dtype=float)
    axis2 = np.asarray(sidecar["axis2"], dtype=float)
    if values.shape != (axis1.size, axis2.size):
        raise SchemaError(f"{path_base}: axes ({axis1.size}, {axis2.size}) do "
                          f"not match matrix shape {values.shape}")
    return KernelData(axis1=axis1, axis2=axis2, values=values,
                      meta=sidecar.get("meta", {}))
