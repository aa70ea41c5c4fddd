"""Text report builder for batching experiments."""

import math
from pathlib import Path
from typing import Any, Optional

from jinja2 import Environment, FileSystemLoader

from src.experiments import ComparisonTable, DiagnosticsReport, ExperimentReport, SweepResult
from src.variance import CycleDecomposition, ScenarioLabel, batched_variance_decomp, scenario_tally

TEMPLATE_DIR = Path(__file__).parent / "templates"


class ReportBuilder:
    """Renders experiment, comparison, sweep, decomposition and diagnostics reports as aligned text."""

    def __init__(self, template_dir: Optional[str | Path] = None):
        self.template_dir = Path(template_dir) if template_dir else TEMPLATE_DIR
        self.env = Environment(
            loader=FileSystemLoader(str(self.template_dir)),
            autoescape=False,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )
        self.env.filters["sig"] = self._sig
        self.env.filters["pct"] = self._pct

    def render(self, template_name: str, **context: Any) -> str:
        return self.env.get_template(template_name).render(**context)

    def build_report(self, report: ExperimentReport) -> str:
        return self.render("report.txt.j2", report=report, config=report.config)

    def build_comparison(self, table: ComparisonTable) -> str:
        return self.render(
            "comparison.txt.j2",
            table=table,
            report=table.report,
            config=table.report.config,
            tally=scenario_tally(table.labels),
        )

    def build_sweep(self, result: SweepResult) -> str:
        return self.render("sweep.txt.j2", result=result, rows=result.rows, parameter=result.parameter)

    def build_decomposition(self, decomposition: CycleDecomposition, label: ScenarioLabel, source: str = "") -> str:
        return self.render(
            "decomposition.txt.j2",
            d=decomposition,
            label=label,
            source=source,
            batched=batched_variance_decomp(decomposition),
        )

    def build_diagnostics(self, diagnostics: DiagnosticsReport) -> str:
        return self.render("diagnostics.txt.j2", diag=diagnostics, config=diagnostics.config)

    @staticmethod
    def _sig(value: Any, digits: int = 12) -> str:
        """
        Format a number with `digits` significant digits.

        None and NaN render as "n/a"; integers render unchanged.
        """
        if value is None:
            return "n/a"
        if isinstance(value, bool):
            return str(value)
        if isinstance(value, int):
            return str(value)
        value = float(value)
        if math.isnan(value):
            return "n/a"
        return f"{value:.{digits}g}"

    @staticmethod
    def _pct(value: Any, digits: int = 2) -> str:
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return "n/a"
        return f"{100 * float(value):.{digits}f}%"
