"""Report rows, pass/fail checks, CSV and JSON output."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

log = logging.getLogger("vortex.experiments")

CSV_COLUMNS = ("word", "N", "mode", "group", "estimate_re", "estimate_im", "stderr",
               "prediction_re", "prediction_im", "zscore")


@dataclass
class Row:
    """One estimate against one prediction. ``group`` tags the row's role in the checks."""

    word: str
    N: int
    mode: str
    group: str
    estimate: complex
    stderr: float
    prediction: complex
    zscore: float


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    data: dict = field(default_factory=dict)


def _num(x: float) -> str:
    return repr(float(x))


def _jsonable(obj: Any):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


@dataclass
class Report:
    kind: str
    seed: int
    config: dict
    rows: list[Row] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def add_check(self, name: str, passed: bool, detail: str = "", **data) -> Check:
        c = Check(name, bool(passed), detail, data)
        self.checks.append(c)
        log.info("[%s seed=%d] %s %s %s", self.kind, self.seed, "PASS" if c.passed else "FAIL", name, detail)
        return c

    def rows_where(self, **kw) -> list[Row]:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in kw.items())]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            e, p = complex(r.estimate), complex(r.prediction)
            w.writerow([r.word, r.N, r.mode, r.group, _num(e.real), _num(e.imag), _num(r.stderr),
                        _num(p.real), _num(p.imag), _num(r.zscore)])
        return buf.getvalue()

    def summary(self) -> dict:
        return _jsonable({
            "kind": self.kind,
            "seed": self.seed,
            "passed": self.passed,
            "criteria": [{"name": c.name, "passed": c.passed, "detail": c.detail, **c.data}
                         for c in self.checks],
            "config": self.config,
            "extras": self.extras,
        })

    def write(self, out_dir: str | Path, csv_name: str | None = None,
              summary_name: str | None = None) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / (csv_name or f"{self.kind}.csv")
        json_path = out / (summary_name or f"{self.kind}_summary.json")
        csv_path.write_text(self.csv_text())
        json_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        log.info("[%s seed=%d] wrote %s and %s", self.kind, self.seed, csv_path, json_path)
        return csv_path, json_path


def render_summary(summary: dict, csv_rows: list[dict] | None = None, max_rows: int = 40) -> str:
    """Human-readable text for a JSON summary (and optionally its CSV rows)."""
    lines = [f"experiment {summary['kind']}  seed {summary['seed']}  "
             f"{'PASS' if summary['passed'] else 'FAIL'}"]
    for c in summary["criteria"]:
        lines.append(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: {c.get('detail', '')}")
    if csv_rows:
        lines.append("")
        lines.append(f"  {'word':<28} {'N':>5} {'mode':<7} {'group':<10} {'estimate':>24} "
                     f"{'stderr':>10} {'prediction':>24} {'z':>7}")
        for r in csv_rows[:max_rows]:
            est = complex(float(r["estimate_re"]), float(r["estimate_im"]))
            pred = complex(float(r["prediction_re"]), float(r["prediction_im"]))
            lines.append(f"  {r['word']:<28} {r['N']:>5} {r['mode']:<7} {r['group']:<10} "
                         f"{est:>24.6g} {float(r['stderr']):>10.3g} {pred:>24.6g} {float(r['zscore']):>7.2f}")
        if len(csv_rows) > max_rows:
            lines.append(f"  ... {len(csv_rows) - max_rows} more rows")
    return "\n".join(lines)


def load_summary(path: str | Path) -> tuple[dict, list[dict] | None]:
    """Read a JSON summary and, when present next to it, the matching CSV."""
    path = Path(path)
    if path.is_dir():
        found = sorted(path.glob("*_summary.json"))
        if not found:
            raise FileNotFoundError(f"no *_summary.json in {path}")
        path = found[0]
    summary = json.loads(path.read_text())
    csv_name = summary.get("config", {}).get("outputs", {}).get("csv", f"{summary['kind']}.csv")
    csv_path = path.parent / csv_name
    rows = None
    if csv_path.exists():
        with csv_path.open() as fh:
            rows = list(csv.DictReader(fh))
    return summary, rows
