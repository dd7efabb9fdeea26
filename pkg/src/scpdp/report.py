"""CSV/JSON emission of coverage reports and the transistor-count area model."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, TextIO

from .faultsim import CoverageReport, Stratum, TrialRecord
from .netlist import DualRailNetlist, SingleRailNetlist

SUMMARY_COLUMNS = ("polarity", "mode", "fault_size", "trials", "masked", "detected", "sdc", "fc_percent")
TRIAL_COLUMNS = ("trial", "fault_size", "input_hex", "sites", "outcome")

TRANSISTORS_PER_GATE = 8
# static CMOS single-rail cell sizes, used only for the approximate DMR figure
CMOS_TRANSISTORS = {"and": 6, "or": 6, "xor": 12, "nand": 4, "nor": 4, "xnor": 12, "not": 2, "buf": 0}


def fc_percent(s: Stratum) -> str:
    return f"{100.0 * s.fc:.3f}"


def _row(s: Stratum, size) -> dict:
    return {
        "polarity": s.polarity,
        "mode": s.mode,
        "fault_size": size,
        "trials": s.trials,
        "masked": s.masked,
        "detected": s.detected,
        "sdc": s.sdc,
        "fc_percent": fc_percent(s),
    }


def summary_rows(report: CoverageReport) -> list[dict]:
    rows = [_row(s, s.fault_size) for s in report.strata]
    rows.append(_row(report.total, "ALL"))
    return rows


def summary_csv(report: CoverageReport) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(summary_rows(report))
    return buf.getvalue()


def summary_json(report: CoverageReport) -> str:
    doc = {"metadata": report.metadata, "rows": summary_rows(report)}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def rows_from_csv(text: str) -> list[dict]:
    return [dict(r) for r in csv.DictReader(io.StringIO(text))]


def rows_from_json(text: str) -> list[dict]:
    """Summary rows of a JSON report, stringified the way the CSV carries them."""
    return [{k: str(r[k]) for k in SUMMARY_COLUMNS} for r in json.loads(text)["rows"]]


def csv_from_rows(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def write_trials_csv(records: Iterable[TrialRecord], d: DualRailNetlist, out: TextIO) -> None:
    sites = d.fault_sites()
    width = max(1, (len(d.source.inputs) + 3) // 4)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRIAL_COLUMNS)
    for r in records:
        ids = ";".join(f"{sites[s].id}:{p}" for s, p in zip(r.sites, r.polarities))
        w.writerow((r.trial, r.fault_size, f"{r.input:0{width}x}", ids, r.outcome.value))


@dataclass
class AreaReport:
    gate_counts: dict[str, int]
    scpdp_gates: int
    transistors: int
    inverters_absorbed: int
    dmr_estimate: int | None = None
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)

    def text(self) -> str:
        lines = [f"{k:>5}: {v}" for k, v in self.gate_counts.items() if v]
        lines.append(f"2-input SCPDP gates G = {self.scpdp_gates}")
        lines.append(f"transistors T = {TRANSISTORS_PER_GATE} x G = {self.transistors}")
        lines.append(f"inverters absorbed as rail swaps (0 transistors): {self.inverters_absorbed}")
        if self.dmr_estimate is not None:
            lines.append(f"DMR estimate (approximate, 2 x static CMOS single-rail): {self.dmr_estimate}")
        return "\n".join(lines) + "\n"


def area_report(n: SingleRailNetlist, compare_dmr: bool = False) -> AreaReport:
    counts = n.gate_counts()
    g = sum(v for k, v in counts.items() if k not in ("not", "buf"))
    rep = AreaReport(counts, g, TRANSISTORS_PER_GATE * g, counts["not"])
    if compare_dmr:
        rep.dmr_estimate = 2 * sum(CMOS_TRANSISTORS[k] * v for k, v in counts.items())
        rep.notes.append("DMR figure is a naive approximation; no comparator is counted")
    return rep
