"""Run manifests, checks, and atomic result files.

A run writes `manifest.json` (config, library version, transform
normalization, seed) before any result file; its sha256 is the run identity
and every CSV row carries it in a trailing `manifest_hash` column.  After
the checks complete, `checks.json` records per-check pass/fail with the
measured values and tolerances plus the wall clock.  All writes go to a
temporary file followed by an atomic rename, so failures leave no partial
results.  CSV cells are formatted with repr so reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError


def fmt_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_text_atomic(path: Path, text: str):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def write_json_atomic(path: Path, obj):
    write_text_atomic(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def write_csv_atomic(path: Path, header, rows):
    lines = [",".join(header)]
    ncol = len(header)
    for row in rows:
        if len(row) != ncol:
            raise ConfigurationError(f"CSV row width {len(row)} != header width {ncol}")
        lines.append(",".join(fmt_cell(c) for c in row))
    write_text_atomic(path, "\n".join(lines) + "\n")


@dataclass
class Check:
    """One verifiable claim: measured value against a tolerance."""

    name: str
    passed: bool
    value: float | None = None
    tolerance: float | None = None
    detail: str = ""

    def as_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": self.value,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


@dataclass
class RunRecorder:
    """Collects checks and result tables for one experiment run."""

    outdir: Path
    manifest: dict
    manifest_hash: str = ""
    checks: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    _t0: float = field(default_factory=time.monotonic)

    @classmethod
    def start(cls, config, outdir, extra_manifest=None):
        """Write the manifest before any result file and fix the run identity."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        manifest = {
            "kind": config.kind,
            "config_ini": config.serialize(),
            "library_version": __version__,
            "seed": config.get("experiment", "seed"),
        }
        if extra_manifest:
            manifest.update(extra_manifest)
        rec = cls(outdir=outdir, manifest=manifest)
        path = outdir / "manifest.json"
        write_json_atomic(path, manifest)
        rec.manifest_hash = hashlib.sha256(path.read_bytes()).hexdigest()
        return rec

    def check(self, name, passed, value=None, tolerance=None, detail=""):
        c = Check(name, bool(passed), _none_or_float(value), _none_or_float(tolerance), detail)
        self.checks.append(c)
        return c

    def check_le(self, name, value, tolerance, detail=""):
        return self.check(name, value <= tolerance, value, tolerance, detail)

    def check_ge(self, name, value, bound, detail=""):
        return self.check(name, value >= bound, value, bound, detail)

    def warn(self, message):
        self.warnings.append(str(message))

    def write_table(self, name, header, rows):
        """Result CSV; every row carries the manifest hash."""
        if not self.manifest_hash:
            raise ConfigurationError("manifest must be written before result files")
        full_header = list(header) + ["manifest_hash"]
        full_rows = [list(r) + [self.manifest_hash] for r in rows]
        write_csv_atomic(self.outdir / f"{name}.csv", full_header, full_rows)

    def finish(self):
        """Write checks.json and return overall success."""
        ok = all(c.passed for c in self.checks)
        payload = {
            "manifest_hash": self.manifest_hash,
            "all_passed": ok,
            "checks": [c.as_dict() for c in self.checks],
            "warnings": self.warnings,
            "wall_clock_s": time.monotonic() - self._t0,
        }
        write_json_atomic(self.outdir / "checks.json", payload)
        return ok


def _none_or_float(v):
    return None if v is None else float(v)
