"""Error tables, score reports and budget-sweep curves built from persisted records"""

from collections import defaultdict
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import rankdata
from tabulate import tabulate

from app.core.errors import ArgumentError, DataError
from app.core.logging_config import logger
from app.models.schemas import ErrorRow, RunRecord, ScoreRow
from app.services.scoring import ResultsTable, ScoreReport, score_table


Weights = Union[str, Mapping[int, float]]
SCI = ".3e"


def parse_weights(text: str) -> Weights:
    """A preset name, or explicit "D=w" pairs separated by commas (e.g. "10=0.1,20=0.2")"""
    if "=" not in text:
        return text
    weights = {}
    for item in text.split(","):
        try:
            dim, weight = item.split("=")
            weights[int(dim)] = float(weight)
        except ValueError:
            raise ArgumentError(f"invalid weight '{item}'; expected D=w")
    return weights


def records_to_table(records: Sequence[RunRecord]) -> ResultsTable:
    """
    Arrange records into a rectangular ResultsTable

    Algorithms are sorted by name and problems by (dimension, name). Unknown
    optima fall back to the best value found by any algorithm.

    Raises:
        DataError: when some (algorithm, problem) cell misses runs
    """
    if not records:
        raise DataError("no run records")
    algorithms = sorted({r.algorithm for r in records})
    problem_dims = {}
    optima = {}
    cells = defaultdict(dict)
    for r in records:
        problem_dims[r.problem] = r.dim
        optima[r.problem] = np.nan if r.optimum is None else r.optimum
        cells[(r.algorithm, r.problem)][r.run] = r.final_value
    problems = sorted(problem_dims, key=lambda p: (problem_dims[p], p))
    runs = sorted({r.run for r in records})

    missing = []
    for a in algorithms:
        for p in problems:
            absent = [i for i in runs if i not in cells[(a, p)]]
            if absent:
                missing.append(f"{a}/{p} runs {absent}")
    if missing:
        raise DataError("incomplete results matrix, missing: " + "; ".join(missing))

    values = np.array([[[cells[(a, p)][i] for i in runs] for p in problems] for a in algorithms])
    return ResultsTable.from_values(
        algorithms,
        problems,
        values,
        [optima[p] for p in problems],
        [problem_dims[p] for p in problems],
    )


# Error table
def error_frame(table: ResultsTable) -> pd.DataFrame:
    """Best, mean and population std of final errors per (algorithm, problem)"""
    rows = []
    for k, algorithm in enumerate(table.algorithms):
        for j, problem in enumerate(table.problems):
            errors = table.errors[k, j]
            rows.append({
                "algorithm": algorithm,
                "problem": problem,
                "best": float(errors.min()),
                "mean": float(errors.mean()),
                "std": float(errors.std(ddof=0)),
            })
    return pd.DataFrame(rows, columns=["algorithm", "problem", "best", "mean", "std"])


def format_error_table(frame: pd.DataFrame) -> str:
    """Problems as rows, one best/mean/std column triple per algorithm"""
    algorithms = list(dict.fromkeys(frame["algorithm"]))
    problems = list(dict.fromkeys(frame["problem"]))
    indexed = frame.set_index(["problem", "algorithm"])
    headers = ["problem"] + [f"{a} {stat}" for a in algorithms for stat in ("best", "mean", "std")]
    body = []
    for p in problems:
        row = [p]
        for a in algorithms:
            cell = indexed.loc[(p, a)]
            row.extend(format(float(cell[stat]), SCI) for stat in ("best", "mean", "std"))
        body.append(row)
    return tabulate(body, headers=headers, tablefmt="simple", disable_numparse=True)


def emit_error_table(records: Sequence[RunRecord], directory: Optional[Path] = None) -> Tuple[List[ErrorRow], str]:
    """
    Per-function error statistics

    Args:
        records: Records of a full campaign matrix
        directory: When given, error_table.txt and error_table.csv are written there

    Returns:
        (rows, aligned plain-text table)
    """
    frame = error_frame(records_to_table(records))
    text = format_error_table(frame)
    if directory is not None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "error_table.txt").write_text(text + "\n", encoding="utf-8")
        frame.to_csv(directory / "error_table.csv", index=False, float_format="%.17g")
        logger.info(f"Error table written to {directory}")
    rows = [ErrorRow(**row) for row in frame.to_dict(orient="records")]
    return rows, text


# Score report
def _ranked(values, descending: bool = False) -> List[str]:
    values = np.asarray(values, dtype=float)
    ranks = rankdata(-values if descending else values, method="min").astype(int)
    return [f"{v:.3f} ({r})" for v, r in zip(values, ranks)]


def _wtl(counts: Tuple[int, int, int]) -> str:
    return "/".join(str(c) for c in counts)


def score_rows(report: ScoreReport) -> List[ScoreRow]:
    rows = []
    for k, algorithm in enumerate(report.algorithms):
        w, t, l = report.wtl[algorithm]
        rows.append(ScoreRow(
            algorithm=algorithm,
            accuracy={d.dim: float(d.accuracy[k]) for d in report.dimensions},
            rank={d.dim: float(d.rank[k]) for d in report.dimensions},
            score={d.dim: float(d.score[k]) for d in report.dimensions},
            wins=w,
            ties=t,
            losses=l,
            s_e=float(report.combined.accuracy[k]),
            s_r=float(report.combined.rank[k]),
            s_tot=float(report.combined.total[k]),
            legacy={kind: float(values[k]) for kind, values in report.legacy.items()},
        ))
    return rows


def format_score_report(report: ScoreReport) -> str:
    sections = []
    for dim_scores in report.dimensions:
        body = [
            [a, e, r, s, _wtl(dim_scores.wtl[a])]
            for a, e, r, s in zip(
                report.algorithms,
                _ranked(dim_scores.accuracy),
                _ranked(dim_scores.rank),
                _ranked(dim_scores.score, descending=True),
            )
        ]
        sections.append(
            f"D = {dim_scores.dim} (weight {report.weights[dim_scores.dim]:g}, reference {report.reference})\n"
            + tabulate(body, headers=["algorithm", "E", "R", "S", "W/T/L"], disable_numparse=True)
        )

    headers = ["algorithm", "S_E", "S_R", "S_tot", "W/T/L"] + list(report.legacy)
    columns = [
        report.algorithms,
        _ranked(report.combined.accuracy),
        _ranked(report.combined.rank),
        _ranked(report.combined.total, descending=True),
        [_wtl(report.wtl[a]) for a in report.algorithms],
    ]
    for kind, values in report.legacy.items():
        columns.append(_ranked(values, descending=True))
    body = [list(row) for row in zip(*columns)]
    sections.append("Combined\n" + tabulate(body, headers=headers, disable_numparse=True))
    return "\n\n".join(sections)


def score_frame(rows: Sequence[ScoreRow]) -> pd.DataFrame:
    """Machine-readable rows, one per algorithm"""
    flat = []
    for row in rows:
        item = {"algorithm": row.algorithm}
        for dim in row.accuracy:
            item[f"E_D{dim}"] = row.accuracy[dim]
            item[f"R_D{dim}"] = row.rank[dim]
            item[f"S_D{dim}"] = row.score[dim]
        item.update({"W": row.wins, "T": row.ties, "L": row.losses,
                     "S_E": row.s_e, "S_R": row.s_r, "S_tot": row.s_tot})
        item.update(row.legacy)
        flat.append(item)
    return pd.DataFrame(flat)


def emit_score_report(
    records: Sequence[RunRecord],
    weights: Weights = "desk",
    reference: Optional[str] = None,
    legacy: Sequence[str] = (),
    directory: Optional[Path] = None,
) -> Tuple[ScoreReport, str]:
    """
    Score a campaign from its persisted records

    Args:
        records: Records of a full campaign matrix
        weights: Preset name or {D: w_D}
        reference: Algorithm whose W/T/L is reported (default: first by name)
        legacy: Legacy scores to add (cec2017, cec2020, cec2019)
        directory: When given, score_report.txt and score_rows.csv are written there

    Returns:
        (ScoreReport, aligned plain-text report)
    """
    table = records_to_table(records)
    report = score_table(table, weights, reference, legacy)
    text = format_score_report(report)
    if directory is not None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "score_report.txt").write_text(text + "\n", encoding="utf-8")
        score_frame(score_rows(report)).to_csv(directory / "score_rows.csv", index=False, float_format="%.17g")
        logger.info(f"Score report written to {directory}")
    return report, text


# Budget sweep
def emit_budget_sweep(
    records_by_budget: Mapping[float, Sequence[RunRecord]],
    weights: Weights = "desk",
    directory: Optional[Path] = None,
) -> pd.DataFrame:
    """
    S_tot per algorithm as a function of N_max/D

    Returns:
        Wide frame with an ``nmd`` column (ascending) and one S_tot column per
        algorithm; written as budget_sweep.csv (plus budget_sweep_long.csv with
        nmd, algorithm, s_tot rows) when directory is given
    """
    rows = []
    for nmd in sorted(records_by_budget):
        table = records_to_table(records_by_budget[nmd])
        report = score_table(table, weights)
        for algorithm, total in zip(report.algorithms, report.combined.total):
            rows.append({"nmd": float(nmd), "algorithm": algorithm, "s_tot": float(total)})
    long_form = pd.DataFrame(rows, columns=["nmd", "algorithm", "s_tot"])
    wide = long_form.pivot(index="nmd", columns="algorithm", values="s_tot").sort_index().reset_index()
    wide.columns.name = None
    if directory is not None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        wide.to_csv(directory / "budget_sweep.csv", index=False, float_format="%.17g")
        long_form.to_csv(directory / "budget_sweep_long.csv", index=False, float_format="%.17g")
        logger.info(f"Budget sweep curves written to {directory}")
    return wide
