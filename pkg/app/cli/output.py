"""CSV/JSON rendering of reports; rationals are always written as "p/q"."""
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional

from pydantic import BaseModel

from app.core.linalg import format_rational
from app.models.constructions import ConstructionReport
from app.models.invariants import CheckReport, InvariantSequence, SuiteReport

SEQUENCE_COLUMNS = [
    "numerator",
    "denominator",
    "value",
    "level_numerator",
    "level_denominator",
    "level_value",
]


def _cell(value) -> str:
    if value is None:
        return ""
    return format_rational(value)


def sequence_csv(sequence: InvariantSequence) -> str:
    width = len(sequence.entries[0].q) if sequence.entries else 0
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([f"q{i}" for i in range(1, width + 1)] + SEQUENCE_COLUMNS)
    for e in sequence.entries:
        writer.writerow(e.q + [_cell(getattr(e, column)) for column in SEQUENCE_COLUMNS])
    return buffer.getvalue()


def checks_csv(reports: list[CheckReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["check", "name", "q", "passed", "detail"])
    for report in reports:
        for r in report.records:
            q = ",".join(str(x) for x in r.q) if r.q is not None else ""
            writer.writerow([report.check, r.name, q, "pass" if r.passed else "FAIL", r.detail])
    return buffer.getvalue()


def construction_csv(report: ConstructionReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["factor", "n", "q", "block_dim", "complement_ratio"])
    for idx, factor in enumerate(report.factors, start=1):
        for row in factor.levels:
            writer.writerow([idx, factor.n, row.q, row.block_dim, format_rational(row.complement_ratio)])
    return buffer.getvalue()


def render(report: BaseModel, fmt: str) -> str:
    if fmt == "json":
        return report.model_dump_json(indent=2) + "\n"
    if isinstance(report, InvariantSequence):
        return sequence_csv(report)
    if isinstance(report, CheckReport):
        return checks_csv([report])
    if isinstance(report, SuiteReport):
        return checks_csv(report.reports)
    if isinstance(report, ConstructionReport):
        return construction_csv(report)
    # reports without a tabular shape fall back to JSON
    return report.model_dump_json(indent=2) + "\n"


def _write(text: str, fmt: str, out_dir: Optional[str], name: str) -> Optional[Path]:
    if not out_dir:
        sys.stdout.write(text)
        return None
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / f"{name}.{fmt}"
    target.write_text(text)
    return target


def emit(report: BaseModel, fmt: str, out_dir: Optional[str], name: str) -> Optional[Path]:
    return _write(render(report, fmt), fmt, out_dir, name)


def emit_checks(reports: list[CheckReport], fmt: str, out_dir: Optional[str], name: str) -> Optional[Path]:
    """Several checks in one file, each row keeping its own check name."""
    if fmt == "json":
        text = json.dumps([r.model_dump(mode="json") for r in reports], indent=2) + "\n"
    else:
        text = checks_csv(reports)
    return _write(text, fmt, out_dir, name)


def emit_failures(reports: list[CheckReport]) -> None:
    payload = [
        {"check": r.check, "failures": [f.model_dump(mode="json") for f in r.failures()]}
        for r in reports
        if not r.passed
    ]
    sys.stderr.write(json.dumps(payload, indent=2) + "\n")


def emit_error(error: Exception) -> None:
    payload = {"error": type(error).__name__, "message": str(error)}
    hypothesis = getattr(error, "hypothesis", None)
    if hypothesis:
        payload["hypothesis"] = hypothesis
    sys.stderr.write(json.dumps(payload) + "\n")
