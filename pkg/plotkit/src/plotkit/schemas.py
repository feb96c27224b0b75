"""Readers and validators for the kerrosc run-directory artifacts.

plotkit consumes only the file formats (versioned CSV with `# schema:`
comment lines, report.json, manifest.json); it never imports or recomputes
the physics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Input file does not match its declared schema."""


#: required columns per tabular schema id
TABLE_SCHEMAS = {
    "kerrosc/mft_sweep/v1": ["G", "phi_mf", "warnings"],
    "kerrosc/ed_report/v1": ["inv_U", "n_max", "clipped", "n_ed", "phi_ed", "phi_mf",
                             "gap", "re_lambda_1"],
    "kerrosc/spectra/v1": ["omega", "A", "S_inel", "h_tilde"],
    "kerrosc/spectra_scalars/v1": ["G", "fwhm", "peak"],
    "kerrosc/langevin_stats/v1": ["mean_x2", "stderr_x2", "rate"],
    "kerrosc/langevin_autocorr/v1": ["lag", "C"],
}

MATRIX_SCHEMAS = {"kerrosc/wigner/v1", "kerrosc/flow_field/v1"}


@dataclass
class Table:
    schema: str
    digest: str
    columns: dict[str, np.ndarray]
    path: Path

    def col(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise SchemaError(f"{self.path.name}: missing column {name!r}")
        return self.columns[name]


@dataclass
class Matrix:
    schema: str
    digest: str
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    path: Path


@dataclass
class RunInfo:
    command: str
    path: Path
    params: dict
    digest: str
    outputs: set[str] = field(default_factory=set)

    def has(self, name: str) -> bool:
        return name in self.outputs

    def table(self, name: str) -> Table:
        return read_table(self.path / name)

    def matrix(self, name: str) -> Matrix:
        return read_matrix(self.path / name)

    def report(self) -> dict:
        return json.loads((self.path / "report.json").read_text())


def _header(path: Path, lines: list[str]) -> tuple[str, str]:
    if len(lines) < 3 or not lines[0].startswith("# schema: "):
        raise SchemaError(f"{path.name}: missing '# schema:' header line")
    schema = lines[0].removeprefix("# schema: ").strip()
    if not lines[1].startswith("# config_digest: "):
        raise SchemaError(f"{path.name}: missing '# config_digest:' header line")
    digest = lines[1].removeprefix("# config_digest: ").strip()
    return schema, digest


def _parse_cell(text: str):
    if text == "true":
        return 1.0
    if text == "false":
        return 0.0
    try:
        return float(text)
    except ValueError:
        return text


def read_table(path: Path) -> Table:
    lines = path.read_text().splitlines()
    schema, digest = _header(path, lines)
    if schema not in TABLE_SCHEMAS:
        raise SchemaError(f"{path.name}: unknown table schema {schema!r}")
    body = [l for l in lines if not l.startswith("#")]
    names = body[0].split(",")
    for required in TABLE_SCHEMAS[schema]:
        if required not in names:
            raise SchemaError(f"{path.name}: schema {schema} requires column {required!r}")
    raw = [line.split(",") for line in body[1:]]
    columns: dict[str, np.ndarray] = {}
    for j, name in enumerate(names):
        cells = [_parse_cell(row[j]) if j < len(row) else "" for row in raw]
        if all(isinstance(c, float) for c in cells):
            columns[name] = np.array(cells, dtype=float)
        else:
            columns[name] = np.array([str(c) for c in cells], dtype=object)
    return Table(schema=schema, digest=digest, columns=columns, path=path)


def read_matrix(path: Path) -> Matrix:
    lines = path.read_text().splitlines()
    schema, digest = _header(path, lines)
    if schema not in MATRIX_SCHEMAS:
        raise SchemaError(f"{path.name}: unknown matrix schema {schema!r}")
    body = [l for l in lines if not l.startswith("#")]
    try:
        cols = np.array([float(v) for v in body[0].split(",")[1:]])
        rows, values = [], []
        for line in body[1:]:
            parts = line.split(",")
            rows.append(float(parts[0]))
            values.append([float(v) for v in parts[1:]])
    except ValueError as exc:
        raise SchemaError(f"{path.name}: non-numeric matrix cell ({exc})") from exc
    values = np.array(values)
    if values.shape != (len(rows), len(cols)):
        raise SchemaError(f"{path.name}: ragged matrix {values.shape}")
    return Matrix(schema=schema, digest=digest, rows=np.array(rows), cols=cols,
                  values=values, path=path)


def discover_runs(root: Path) -> list[RunInfo]:
    """All run directories under root (any directory with a manifest.json)."""
    runs = []
    for manifest_path in sorted(root.glob("**/manifest.json")):
        manifest = json.loads(manifest_path.read_text())
        runs.append(
            RunInfo(
                command=manifest["command"],
                path=manifest_path.parent,
                params=manifest.get("params", {}),
                digest=manifest.get("config_digest", ""),
                outputs={o["path"] for o in manifest.get("outputs", [])},
            )
        )
    return runs
