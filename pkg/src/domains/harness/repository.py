"""
File access for the harness: episode CSVs, summary CSVs and grid files.
"""

import csv
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from core.errors import ArtifactIOError, EngineError

from .models import CellSummary, EpochRecord, GridSpec, RegretLog, RunConfig
from .service import summarize_logs

logger = logging.getLogger(__name__)

EPISODE_FIELDS = ["cell", "replication", "epoch", "mode", "cum_regret", "good_event", "teamwork_refits", "all_refits"]
SUMMARY_FIELDS = ["cell", "mean_regret", "min_regret", "max_regret", "mean_updates"]

# Grid-file keys and where they land
SPEC_KEYS = {"k", "s0", "sigma", "h", "x_max", "b", "covariate_law", "beta_low", "beta_high", "gaussian_std"}
RUN_KEYS = {
    "decisions": "total_decisions",
    "reps": "replications",
    "seed": "seed",
    "lambda1": "lambda1",
    "lambda2_scale": "lambda2_scale",
    "agent_h": "agent_h",
    "policy": "policy",
    "lambda_rule": "lambda_rule",
    "probe_draws": "probe_draws",
}
SWEEP_KEYS = {"d": "d", "q": "q", "n": "n_users"}


def summary_path(path: Path | str) -> Path:
    """Sibling summary file: results.csv -> results_summary.csv."""
    path = Path(path)
    return path.with_name(f"{path.stem}_summary{path.suffix or '.csv'}")


def _flag(value: Optional[bool]) -> str:
    if value is None:
        return ""
    return "true" if value else "false"


def _parse_flag(value: str) -> Optional[bool]:
    if value == "":
        return None
    if value in ("true", "false"):
        return value == "true"
    raise EngineError(f"invalid good_event flag: {value!r}")


def write_csv(logs: Sequence[RegretLog], path: Path | str, summaries: Optional[Sequence[CellSummary]] = None) -> Path:
    """
    Write one row per epoch record, and the per-cell summaries next to it.

    Floats are written with repr so identical runs give identical bytes.

    Args:
        logs: Episode logs
        path: Destination of the episode CSV
        summaries: Cell summaries, computed from logs when omitted

    Returns:
        Path of the summary file

    Raises:
        ArtifactIOError: If either file cannot be written
    """
    path = Path(path)
    summaries = list(summaries) if summaries is not None else summarize_logs(logs)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=EPISODE_FIELDS, lineterminator="\n")
            writer.writeheader()
            for log in logs:
                for record in log.records:
                    writer.writerow(
                        {
                            "cell": log.cell,
                            "replication": log.replication,
                            "epoch": record.epoch,
                            "mode": record.mode,
                            "cum_regret": repr(record.cum_regret),
                            "good_event": _flag(record.good_event),
                            "teamwork_refits": record.teamwork_refits,
                            "all_refits": record.all_refits,
                        }
                    )

        summary_file = summary_path(path)
        with summary_file.open("w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
            writer.writeheader()
            for summary in summaries:
                writer.writerow(
                    {
                        "cell": summary.cell,
                        "mean_regret": repr(summary.mean_regret),
                        "min_regret": repr(summary.min_regret),
                        "max_regret": repr(summary.max_regret),
                        "mean_updates": repr(summary.mean_updates),
                    }
                )
    except OSError as e:
        raise ArtifactIOError(path, str(e)) from e

    logger.info("Wrote %d episode logs to %s and summaries to %s", len(logs), path, summary_file)
    return summary_file


def read_csv(path: Path | str) -> List[RegretLog]:
    """
    Parse an episode CSV back into logs, one per (cell, replication).

    Per-user regrets and update counts are not stored in the file and come
    back empty.

    Raises:
        ArtifactIOError: If the file cannot be read or lacks the expected columns
    """
    path = Path(path)
    logs: Dict[tuple[str, int], RegretLog] = {}
    try:
        with path.open(newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != EPISODE_FIELDS:
                raise ArtifactIOError(path, f"unexpected header {reader.fieldnames}")
            for row in reader:
                key = (row["cell"], int(row["replication"]))
                log = logs.get(key)
                if log is None:
                    log = logs[key] = RegretLog(cell=key[0], replication=key[1])
                log.records.append(
                    EpochRecord(
                        epoch=int(row["epoch"]),
                        mode=row["mode"],  # type: ignore[arg-type]
                        cum_regret=float(row["cum_regret"]),
                        good_event=_parse_flag(row["good_event"]),
                        teamwork_refits=int(row["teamwork_refits"]),
                        all_refits=int(row["all_refits"]),
                    )
                )
    except ArtifactIOError:
        raise
    except OSError as e:
        raise ArtifactIOError(path, str(e)) from e
    except (ValueError, ValidationError) as e:
        raise ArtifactIOError(path, f"malformed row: {e}") from e
    return list(logs.values())


def _scalar(key: str, value: str) -> Any:
    if "," in value:
        raise EngineError(f"only d, q and n may be swept, got a list for {key!r}")
    return value


def _sweep(key: str, value: str) -> List[int]:
    try:
        values = [int(part) for part in value.split(",") if part.strip()]
    except ValueError as e:
        raise EngineError(f"{key} must be a comma-separated list of integers") from e
    if not values:
        raise EngineError(f"{key} needs at least one value")
    return values


def parse_grid_file(path: Path | str) -> GridSpec:
    """
    Read a grid file: one `key = value` per line, `#` starts a comment.

    d, q and n accept comma-separated lists; every other key is a scalar.
    Required keys: d, k, s0, q, n, decisions.

    Raises:
        ArtifactIOError: If the file cannot be read
        EngineError: On unknown keys, duplicate keys or malformed lines
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ArtifactIOError(path, str(e)) from e

    entries: Dict[str, str] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise EngineError(f"{path}:{number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in entries:
            raise EngineError(f"{path}:{number}: duplicate key {key!r}")
        if key not in SPEC_KEYS and key not in RUN_KEYS and key not in SWEEP_KEYS:
            raise EngineError(f"{path}:{number}: unknown key {key!r}")
        entries[key] = value

    missing = [key for key in ("d", "k", "s0", "q", "n", "decisions") if key not in entries]
    if missing:
        raise EngineError(f"{path}: missing keys {missing}")

    sweeps = {SWEEP_KEYS[key]: _sweep(key, entries[key]) for key in SWEEP_KEYS}
    spec: Dict[str, Any] = {key: _scalar(key, entries[key]) for key in SPEC_KEYS if key in entries}
    spec["d"] = max(sweeps["d"])
    run: Dict[str, Any] = {field: _scalar(key, entries[key]) for key, field in RUN_KEYS.items() if key in entries}
    run.update(spec=spec, q=sweeps["q"][0], n_users=sweeps["n_users"][0])

    base = RunConfig.model_validate(run)
    return GridSpec(base=base, **sweeps)
