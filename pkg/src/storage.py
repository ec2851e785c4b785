"""
Result storage for the IAB planner.

One directory per run under ``<DATA_DIR>/runs``: the CSV bodies
(coverage.csv, traces.csv, routing.csv, rates.csv) and a metadata.json sidecar.
The CSV bodies hold no timestamps, so equal configs give byte-identical files.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from .config import settings

logger = logging.getLogger(__name__)

METADATA_FILE = "metadata.json"
TABLES = ("coverage", "traces", "routing", "rates")


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write a frame with a fixed float format and unix line endings."""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    return path


class ResultStorage:
    """File-based storage for experiment result sets."""

    def __init__(self, base_dir: Optional[str] = None):
        self.base_dir = Path(base_dir or settings.runs_dir)
        self.base_dir.mkdir(parents=True, exist_ok=True)

    def run_dir(self, run_id: str) -> Path:
        return self.base_dir / run_id

    def save(self, result_set: Any, out_dir: Optional[str] = None) -> Path:
        """
        Write a ResultSet.

        Args:
            result_set: the ResultSet returned by run_experiment
            out_dir: explicit directory; defaults to <base_dir>/<run_id>

        Returns:
            The directory written to
        """
        target = Path(out_dir) if out_dir else self.run_dir(result_set.run_id)
        target.mkdir(parents=True, exist_ok=True)
        for name in TABLES:
            frame = getattr(result_set, name)
            if name != "coverage" and frame.empty:
                continue
            write_csv(frame, target / f"{name}.csv")
        metadata = result_set.metadata()
        metadata["summary"] = json.loads(result_set.summary().to_json(orient="records"))
        with open(target / METADATA_FILE, "w", encoding="utf-8") as f:
            json.dump(metadata, f, indent=2, default=str)
        logger.info("stored run %s in %s", result_set.run_id, target)
        return target

    def list_runs(self) -> List[Dict[str, Any]]:
        """Metadata of every stored run, newest first."""
        runs = []
        for meta_path in self.base_dir.glob(f"*/{METADATA_FILE}"):
            try:
                with open(meta_path, "r", encoding="utf-8") as f:
                    runs.append(json.load(f))
            except (OSError, json.JSONDecodeError):
                logger.warning("skipping unreadable metadata %s", meta_path)
        return sorted(runs, key=lambda m: m.get("created_at", ""), reverse=True)

    def get_run(self, run_id: str) -> Optional[Dict[str, Any]]:
        """Metadata plus the record tables of one run, or None."""
        run_dir = self.run_dir(run_id)
        meta_path = run_dir / METADATA_FILE
        if not meta_path.exists():
            return None
        with open(meta_path, "r", encoding="utf-8") as f:
            out: Dict[str, Any] = json.load(f)
        for name in TABLES:
            path = run_dir / f"{name}.csv"
            if path.exists():
                frame = pd.read_csv(path)
                out[name] = json.loads(frame.to_json(orient="records"))
            else:
                out[name] = []
        return out
