"""Report files: JSON run reports, CSV summaries, the cumulative Par-2 curve,
and re-scoring a stored report under a different reward kind."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .orchestrator import MultiRunSummary, RunReport

SUMMARY_COLUMNS = (
    "selector", "reward", "pct_solved", "n_solved", "par2",
    "reward_cost", "reward_time", "avg_time", "avg_cost",
)


def summary_row(report: RunReport,
                label: Optional[str] = None) -> dict[str, object]:
    agg = report.aggregates()
    return {
        "selector": label if label is not None else report.selector,
        "reward": report.reward,
        "pct_solved": round(agg["pct_solved"], 1),
        "n_solved": agg["n_solved"],
        "par2": round(agg["par2"], 1),
        "reward_cost": round(agg["reward_cost"], 1),
        "reward_time": round(agg["reward_time"], 1),
        "avg_time": round(agg["avg_time"], 2),
        "avg_cost": round(agg["avg_cost"], 1),
    }


def write_summary_csv(path: str | Path,
                      rows: Sequence[Mapping[str, object]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in SUMMARY_COLUMNS})


def write_cumulative_par2_csv(path: str | Path, report: RunReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_index", "cumulative_par2"])
        for idx, score in report.cumulative_par2():
            writer.writerow([idx, round(score, 3)])


def write_report_json(path: str | Path, report: RunReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=2)


def write_events_jsonl(path: str | Path, report: RunReport) -> None:
    """One JSON line per query for post-hoc analysis."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in report.records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def load_report(path: str | Path) -> RunReport:
    with open(path, encoding="utf-8") as fh:
        return RunReport.from_json(json.load(fh))


def write_run_outputs(out_dir: str | Path, report: RunReport,
                      summary: Optional[MultiRunSummary] = None) -> dict[str, Path]:
    """Standard output bundle: report.json, summary.csv, cumulative_par2.csv,
    events.jsonl, and multirun.json when a multi-run summary exists."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.json",
        "summary": out / "summary.csv",
        "cumulative_par2": out / "cumulative_par2.csv",
        "events": out / "events.jsonl",
    }
    write_report_json(paths["report"], report)
    write_summary_csv(paths["summary"], [summary_row(report)])
    write_cumulative_par2_csv(paths["cumulative_par2"], report)
    write_events_jsonl(paths["events"], report)
    if summary is not None:
        paths["multirun"] = out / "multirun.json"
        with open(paths["multirun"], "w", encoding="utf-8") as fh:
            json.dump(summary.to_json(), fh, indent=2)
    return paths


def rescore(report: RunReport, reward_kind: str) -> dict[str, object]:
    """Aggregates under another reward kind, straight from the stored
    per-outcome rewards -- no solver re-runs."""
    if reward_kind not in ("time", "cost", "binary"):
        raise ValueError(f"unknown reward kind {reward_kind!r}")
    agg = report.aggregates()
    total = sum(r.outcomes[-1].reward(reward_kind)
                for r in report.records if r.solved)
    return {
        "selector": report.selector,
        "reward": reward_kind,
        "n_queries": agg["n_queries"],
        "n_solved": agg["n_solved"],
        "pct_solved": agg["pct_solved"],
        "par2": agg["par2"],
        "total_reward": total,
        "reward_time": agg["reward_time"],
        "reward_cost": agg["reward_cost"],
        "avg_time": agg["avg_time"],
        "avg_cost": agg["avg_cost"],
    }
