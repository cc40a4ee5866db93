"""
Metric files: one comma-separated table of trial rows per experiment plus a
JSON summary of the groups (rates, standard errors, keys, success radius).
"""

import csv
import json
import logging
import os
from typing import List, Tuple

from error_handler import DataError
from models.evaluation import EvalReport, TrialRecord

logger = logging.getLogger(__name__)

CSV_FIELDS = (
    "group",
    "seed_index",
    "trial_index",
    "success",
    "steps",
    "final_distance",
    "seconds",
    "distances",
)


def metric_paths(directory: str, experiment: str) -> Tuple[str, str]:
    return (
        os.path.join(directory, f"{experiment}.csv"),
        os.path.join(directory, f"{experiment}_summary.json"),
    )


def emit_metrics(reports: List[EvalReport], directory: str, experiment: str) -> Tuple[str, str]:
    """
    Write the trial table and summary of one experiment.

    Args:
        reports: Groups of the experiment, in the order to keep
        directory: Output directory
        experiment: File stem

    Returns:
        Tuple of (csv path, summary path)
    """
    os.makedirs(directory, exist_ok=True)
    csv_path, summary_path = metric_paths(directory, experiment)
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for report in reports:
            for r in report.records:
                writer.writerow(
                    [
                        report.experiment,
                        r.seed_index,
                        r.trial_index,
                        int(r.success),
                        r.steps,
                        repr(float(r.final_distance)),
                        repr(float(r.seconds)),
                        ";".join(repr(float(d)) for d in r.distances),
                    ]
                )

    summary = {
        "experiment": experiment,
        "groups": [
            {key: value for key, value in report.to_dict().items() if key != "records"}
            for report in reports
        ],
    }
    with open(summary_path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote {csv_path} and {summary_path}")
    return csv_path, summary_path


def read_metrics(summary_path: str) -> List[EvalReport]:
    """Rebuild the reports of an experiment from its summary and trial table."""
    try:
        with open(summary_path, "r", encoding="utf-8") as f:
            summary = json.load(f)
    except FileNotFoundError:
        raise DataError(f"{summary_path}: metrics summary not found") from None
    except json.JSONDecodeError as e:
        raise DataError(f"{summary_path}: invalid JSON ({e})") from None

    csv_path = summary_path[: -len("_summary.json")] + ".csv"
    records = {}
    if os.path.exists(csv_path):
        with open(csv_path, "r", encoding="utf-8", newline="") as f:
            for row in csv.DictReader(f):
                distances = [float(d) for d in row["distances"].split(";")] if row["distances"] else []
                records.setdefault(row["group"], []).append(
                    TrialRecord(
                        trial_index=int(row["trial_index"]),
                        seed_index=int(row["seed_index"]),
                        success=bool(int(row["success"])),
                        steps=int(row["steps"]),
                        final_distance=float(row["final_distance"]),
                        seconds=float(row["seconds"]),
                        group=row["group"],
                        distances=distances,
                    )
                )
    else:
        logger.warning(f"{csv_path} missing, reports will have no trial records")

    reports = []
    for group in summary.get("groups", []):
        data = dict(group)
        data["records"] = [r.to_dict() for r in records.get(group["experiment"], [])]
        reports.append(EvalReport.from_dict(data))
    return reports
