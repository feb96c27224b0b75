"""Run-directory conventions shared by all CLI commands: CSV files with a
versioned schema comment, JSON reports with stable key order, and a manifest
listing every output with its digest.

Deterministic commands are byte-reproducible: the config digest covers only
the command, its parameters, and the toolkit version (never wall-clock data).
Numbers are serialized with 17 significant digits.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA_PREFIX = "kerrosc"


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, complex):
        return f"{value.real:.17g}{value.imag:+.17g}j"
    if value is None:
        return "nan"
    return f"{float(value):.17g}"


def config_digest(command: str, params: dict) -> str:
    payload = json.dumps(
        {"command": command, "params": params, "version": __version__},
        sort_keys=True,
        default=str,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def write_csv(path: Path, schema: str, digest: str, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    n_rows = len(next(iter(columns.values())))
    lines = [
        f"# schema: {SCHEMA_PREFIX}/{schema}",
        f"# config_digest: {digest}",
        "# columns: " + ",".join(names),
        ",".join(names),
    ]
    for i in range(n_rows):
        lines.append(",".join(fmt(columns[name][i]) for name in names))
    path.write_text("\n".join(lines) + "\n")


def write_matrix_csv(
    path: Path, schema: str, digest: str, row_coords: np.ndarray, col_coords: np.ndarray,
    values: np.ndarray,
) -> None:
    """Matrix layout: first row/column carry coordinates, corner is blank."""
    lines = [
        f"# schema: {SCHEMA_PREFIX}/{schema}",
        f"# config_digest: {digest}",
        "," + ",".join(fmt(c) for c in col_coords),
    ]
    for i, r in enumerate(row_coords):
        lines.append(fmt(r) + "," + ",".join(fmt(v) for v in values[i]))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=fmt) + "\n")


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunDirectory:
    """Output directory <out>/<command>_<label>; tracks written files and
    finalizes the manifest."""

    def __init__(self, out_root: str | Path, command: str, params: dict, label: str | None = None):
        self.command = command
        self.params = params
        self.digest = config_digest(command, params)
        label = label or time.strftime("%Y%m%d_%H%M%S")
        self.path = Path(out_root) / f"{command}_{label}"
        suffix = 0
        while self.path.exists():
            suffix += 1
            self.path = Path(out_root) / f"{command}_{label}_{suffix}"
        self.path.mkdir(parents=True)
        self._t0 = time.time()
        self._outputs: list[Path] = []

    def csv(self, name: str, schema: str, columns: dict[str, np.ndarray]) -> Path:
        p = self.path / name
        write_csv(p, schema, self.digest, columns)
        self._outputs.append(p)
        return p

    def matrix_csv(self, name: str, schema: str, rows, cols, values) -> Path:
        p = self.path / name
        write_matrix_csv(p, schema, self.digest, rows, cols, values)
        self._outputs.append(p)
        return p

    def json(self, name: str, payload: dict) -> Path:
        p = self.path / name
        write_json(p, payload)
        self._outputs.append(p)
        return p

    def finalize(self, seeds=None, warnings_list=None) -> Path:
        manifest = {
            "command": self.command,
            "config_digest": self.digest,
            "duration_s": round(time.time() - self._t0, 3),
            "outputs": [
                {"path": p.name, "sha256": sha256_file(p)} for p in self._outputs
            ],
            "params": self.params,
            "seeds": seeds if seeds is not None else [],
            "version": __version__,
            "warnings": warnings_list or [],
        }
        p = self.path / "manifest.json"
        write_json(p, manifest)
        return p
