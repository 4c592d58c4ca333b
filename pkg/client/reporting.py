"""
Run artifacts: per-iteration CSV, JSON summary and the console table.
"""
import csv
import json
import os
from typing import Dict, List, Optional, Sequence

from tabulate import tabulate

from common.constants import CSV_HEADER, SCHEMA_VERSION
from common.records import IterateRecord, RunReport
from common.utils import ensure_directory, format_float
from optimizer.solver import RunResult
from problems.generators import ProblemInstance


def build_report(problem: ProblemInstance, result: RunResult) -> RunReport:
    """Summary row taken directly from the run history."""
    return RunReport(
        problem_name=problem.name,
        manifold_string=problem.label,
        OFV=result.final_f,
        g_norm_final=result.final_g_norm,
        iters=result.iterations,
        f_evals=result.f_evals,
        wall_ms=result.wall_time * 1000.0,
        status=result.status.value,
    )


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_history_csv(path: str, history: Sequence[IterateRecord]):
    ensure_directory(os.path.dirname(path) or '.')
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for record in history:
            row = record.csv_row()
            writer.writerow([_csv_cell(row[column]) for column in CSV_HEADER])


def history_path(out_dir: str, problem_name: str) -> str:
    return os.path.join(out_dir, f"{problem_name}_history.csv")


def write_summary_json(path: str, reports: List[RunReport], config: Dict,
                       include_timing: bool = False):
    ensure_directory(os.path.dirname(path) or '.')
    summary = {
        'schema': SCHEMA_VERSION,
        'config': config,
        'reports': [report.to_dict(include_timing) for report in reports],
    }
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(summary, f, indent=2, sort_keys=True, allow_nan=False)
        f.write('\n')


def _table_cell(value: Optional[float], fmt: str) -> str:
    return "-" if value is None else format(value, fmt)


def format_table(reports: List[RunReport]) -> str:
    rows = [
        [r.problem_name, r.manifold_string, _table_cell(r.OFV, ".10g"), _table_cell(r.g_norm_final, ".2e"),
         r.iters, r.f_evals, f"{r.wall_ms:.0f}", r.status]
        for r in reports
    ]
    headers = ['Problem', 'Manifold', 'OFV', '|g|', '#It', '#f', 'ms', 'Status']
    return tabulate(rows, headers=headers)
