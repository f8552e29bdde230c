"""Machine-readable report files: result rows, density matrices and tomography counts.

Every file starts with a versioned header line. Report files hold one CSV
row per record under a fixed column set, can be appended to, and parse
back into the same :class:`ReportRow` values (floats are written with
``repr`` so no digits are lost).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from .engine.scenario import DETECTORS, ResultRecord
from .qstate import TOMOGRAPHY_LABELS, AnalyzerSetting
from .tomography import TomographyCounts

REPORT_HEADER = "# coexsim-report v1"
DENSITY_HEADER = "# coexsim-density v1"
COUNTS_HEADER = "# coexsim-counts v1"

RATE_KEYS = (
    "fourfold:configured",
    "twofold:V:H",
    "twofold:V:V",
    "twofold:A:D",
    "twofold:A:A",
    "hom:distinguishable",
    "hom:indistinguishable",
)
VISIBILITY_KEYS = ("ent_V", "ent_A", "hom", "D", "A")
FIDELITY_KEYS = ("H", "V", "D", "A", "input", "avg")


class ReportError(ValueError):
    pass


def _column(key: str) -> str:
    return key.replace(":", "_")


def _columns() -> list[str]:
    cols = ["sweep_parameter", "sweep_value", "backend", "seed", "n_slots", "scenario_hash"]
    for d in DETECTORS:
        cols += [f"singles_{d}", f"singles_{d}_sigma", f"noise_{d}"]
    cols += ["fourfold_max"]
    for k in RATE_KEYS:
        cols += [f"rate_{_column(k)}", f"rate_{_column(k)}_sigma"]
    for k in VISIBILITY_KEYS:
        cols += [f"V_{k}", f"V_{k}_sigma"]
    for k in FIDELITY_KEYS:
        cols += [f"F_{k}", f"F_{k}_sigma"]
    return cols


COLUMNS = tuple(_columns())
_TEXT = {"sweep_parameter", "backend", "scenario_hash"}
_INT = {"seed", "n_slots"}


@dataclass
class ReportRow:
    """Flat view of one result record; ``values`` maps every numeric column."""

    sweep_parameter: str
    sweep_value: float
    backend: str
    seed: int
    n_slots: int
    scenario_hash: str
    values: dict[str, float]

    @classmethod
    def from_record(
        cls, rec: ResultRecord, sweep_parameter: str = "", sweep_value: float = math.nan, scenario_hash: str = ""
    ) -> "ReportRow":
        v: dict[str, float] = {}
        for d in DETECTORS:
            v[f"singles_{d}"] = rec.singles.get(d, math.nan)
            v[f"singles_{d}_sigma"] = rec.singles_sigma.get(d, math.nan)
            v[f"noise_{d}"] = rec.noise_rates.get(d, math.nan)
        v["fourfold_max"] = rec.max_fourfold if any(k.startswith("fourfold") for k in rec.rates) else math.nan
        for k in RATE_KEYS:
            v[f"rate_{_column(k)}"] = rec.rates.get(k, math.nan)
            v[f"rate_{_column(k)}_sigma"] = rec.rates_sigma.get(k, math.nan)
        for k in VISIBILITY_KEYS:
            v[f"V_{k}"], v[f"V_{k}_sigma"] = rec.visibilities.get(k, (math.nan, math.nan))
        for k in FIDELITY_KEYS:
            v[f"F_{k}"], v[f"F_{k}_sigma"] = rec.fidelities.get(k, (math.nan, math.nan))
        return cls(
            sweep_parameter,
            float(sweep_value),
            rec.backend,
            -1 if rec.seed is None else int(rec.seed),
            int(rec.n_slots),
            scenario_hash,
            {k: float(x) for k, x in v.items()},
        )

    def as_dict(self) -> dict[str, object]:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "values"}
        d.update(self.values)
        return d

    def __eq__(self, other) -> bool:
        if not isinstance(other, ReportRow):
            return NotImplemented
        a, b = self.as_dict(), other.as_dict()
        if a.keys() != b.keys():
            return False
        for k in a:
            x, y = a[k], b[k]
            if isinstance(x, float) and isinstance(y, float) and math.isnan(x) and math.isnan(y):
                continue
            if x != y:
                return False
        return True


def _cell(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def format_rows(rows: Iterable[ReportRow], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        buf.write(REPORT_HEADER + "\n")
        w.writerow(COLUMNS)
    for row in rows:
        d = row.as_dict()
        w.writerow([_cell(d[c]) for c in COLUMNS])
    return buf.getvalue()


def write_report(path, rows: Iterable[ReportRow], append: bool = False) -> None:
    """Write rows; with ``append`` an existing compatible file is extended."""
    path = Path(path)
    rows = list(rows)
    if append and path.exists() and path.stat().st_size > 0:
        read_report(path)  # refuse to append to an incompatible file
        with path.open("a") as fh:
            fh.write(format_rows(rows, header=False))
    else:
        path.write_text(format_rows(rows))


def parse_report(text: str) -> list[ReportRow]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != REPORT_HEADER:
        raise ReportError(f"missing or unsupported header line (expected {REPORT_HEADER!r})")
    reader = csv.reader(lines[1:])
    try:
        cols = next(reader)
    except StopIteration:
        raise ReportError("report has no column line") from None
    if tuple(cols) != COLUMNS:
        raise ReportError("report columns do not match this version")
    out = []
    for n, cells in enumerate(reader, start=3):
        if not cells:
            continue
        if len(cells) != len(COLUMNS):
            raise ReportError(f"line {n}: expected {len(COLUMNS)} cells, got {len(cells)}")
        d = dict(zip(COLUMNS, cells))
        try:
            values = {c: float(d[c]) for c in COLUMNS if c not in _TEXT | _INT and c != "sweep_value"}
            out.append(
                ReportRow(
                    d["sweep_parameter"],
                    float(d["sweep_value"]),
                    d["backend"],
                    int(d["seed"]),
                    int(d["n_slots"]),
                    d["scenario_hash"],
                    values,
                )
            )
        except ValueError as exc:
            raise ReportError(f"line {n}: {exc}") from exc
    return out


def read_report(path) -> list[ReportRow]:
    return parse_report(Path(path).read_text())


def format_density(rho: np.ndarray, meta: dict[str, object] | None = None) -> str:
    """Density matrix as labeled real and imaginary grids in the H/V basis."""
    rho = np.asarray(rho, dtype=complex)
    labels = ("H", "V") if rho.shape == (2, 2) else tuple(str(i) for i in range(rho.shape[0]))
    buf = io.StringIO()
    buf.write(DENSITY_HEADER + "\n")
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["part", "row", *labels])
    for part, grid in (("real", rho.real), ("imag", rho.imag)):
        for lab, row in zip(labels, grid):
            w.writerow([part, lab, *(repr(float(x)) for x in row)])
    return buf.getvalue()


def parse_density(text: str) -> np.ndarray:
    lines = text.splitlines()
    if not lines or lines[0].strip() != DENSITY_HEADER:
        raise ReportError(f"missing or unsupported header line (expected {DENSITY_HEADER!r})")
    body = [ln for ln in lines[1:] if ln and not ln.startswith("#")]
    rows = list(csv.reader(body))
    n = len(rows[0]) - 2
    grids = {"real": [], "imag": []}
    for r in rows[1:]:
        grids[r[0]].append([float(x) for x in r[2:]])
    re_, im = np.array(grids["real"]), np.array(grids["imag"])
    if re_.shape != (n, n) or im.shape != (n, n):
        raise ReportError("density grids are not square")
    return re_ + 1j * im


def format_counts(data: dict[str, TomographyCounts], seed: int | None = None) -> str:
    """Tomography counts: one row per (input, setting)."""
    buf = io.StringIO()
    buf.write(COUNTS_HEADER + "\n")
    if seed is not None:
        buf.write(f"# seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["input", "setting", "counts", "exposure_s", "scenario_hash"])
    for label, c in data.items():
        for setting, value in c.counts.items():
            name = c.labels.get(setting) or ",".join(repr(float(x)) for x in setting.bloch_vector)
            w.writerow([label, name, repr(float(value)), repr(float(c.duration)), c.scenario_hash])
    return buf.getvalue()


def parse_counts(text: str) -> dict[str, TomographyCounts]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != COUNTS_HEADER:
        raise ReportError(f"missing or unsupported header line (expected {COUNTS_HEADER!r})")
    body = [ln for ln in lines[1:] if ln and not ln.startswith("#")]
    reader = csv.DictReader(body)
    grouped: dict[str, dict] = {}
    meta: dict[str, tuple[float, str]] = {}
    try:
        for r in reader:
            grouped.setdefault(r["input"], {})[r["setting"]] = float(r["counts"])
            meta[r["input"]] = (float(r["exposure_s"]), r["scenario_hash"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportError(f"malformed counts file: {exc}") from exc
    if not grouped:
        raise ReportError("counts file has no rows")
    out = {}
    for label, counts in grouped.items():
        keyed = {k if k in TOMOGRAPHY_LABELS else _bloch_key(k): v for k, v in counts.items()}
        out[label] = TomographyCounts.from_mapping(keyed, *meta[label])
    return out


def _bloch_key(text: str):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ReportError(f"setting must be a label or a Bloch vector: {text!r}")
    return AnalyzerSetting(tuple(parts))


__all__ = [
    "COLUMNS",
    "ReportError",
    "ReportRow",
    "format_counts",
    "format_density",
    "format_rows",
    "parse_counts",
    "parse_density",
    "parse_report",
    "read_report",
    "write_report",
]
