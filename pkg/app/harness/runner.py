import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List

import pandas as pd
from langsmith import traceable

from app.estimation.report import plain_value, write_report
from app.harness.config import ExperimentConfig
from app.harness.experiments import EXPERIMENTS
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

TABLE_COLUMNS = ["experiment", "quantity", "axis", "x", "group", "mean", "stderr", "n"]


def _flatten(prefix: str, value: Any, into: Dict[str, Any]) -> None:
    if isinstance(value, dict):
        for key, inner in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), inner, into)
    else:
        into[prefix] = value


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    table: pd.DataFrame
    report: Dict[str, Any]
    warnings: List[str] = field(default_factory=list)

    def write(self, out_dir: str) -> Dict[str, str]:
        """table.csv, report.txt/json and the config echo; returns the paths."""
        os.makedirs(out_dir, exist_ok=True)
        paths = {"table": os.path.join(out_dir, "table.csv")}
        self.table.to_csv(paths["table"], index=False, float_format="%.12g")
        written = write_report({**self.report, "warnings": self.warnings}, out_dir, "report")
        paths["report"], paths["report_json"] = written["text"], written["json"]
        paths["config"] = os.path.join(out_dir, "config.json")
        with open(paths["config"], "w") as f:
            json.dump(plain_value(self.config.model_dump(exclude_none=True)), f, indent=2, sort_keys=True)
        logger.info(f"Wrote {self.config.kind} results to {out_dir}")
        return paths


class ExperimentRunner:
    """Dispatches a validated config to its experiment and collects the outputs."""

    @traceable(name="run_experiment", run_type="chain")
    def run(self, config: ExperimentConfig) -> ExperimentResult:
        logger.info(f"Running {config.kind} (seed={config.seed}, shots={config.shots})")
        output = EXPERIMENTS[config.kind](config)

        table = pd.DataFrame(output.rows, columns=TABLE_COLUMNS[1:])
        table.insert(0, "experiment", config.kind)

        report: Dict[str, Any] = {}
        _flatten("config", config.model_dump(exclude={"output_dir"}), report)
        report.update(output.report)
        return ExperimentResult(config=config, table=table, report=report, warnings=list(output.warnings))


def run(config: ExperimentConfig) -> ExperimentResult:
    return ExperimentRunner().run(config)
