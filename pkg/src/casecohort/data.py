"""Reading stacked case-cohort data from CSV.

The file has a header row, a 0/1 indicator column (1 = case sample,
0 = subcohort), numeric covariate columns and optionally a participant id
column. A participant who is both a case and a subcohort member appears on
two rows with the same id, once with each indicator value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .design import CaseCohortSample, Cohort
from .errors import InputError
from .model import StackedDataset

__all__ = ["CaseCohortData", "read_stacked_csv"]


@dataclass(frozen=True)
class CaseCohortData:
    stacked: StackedDataset
    cohort: Cohort
    sample: CaseCohortSample
    covariates: tuple
    has_ids: bool


def read_stacked_csv(
    path,
    outcome: str = "D",
    covariates: Optional[Sequence[str]] = None,
    id_column: Optional[str] = None,
) -> CaseCohortData:
    """Load a stacked dataset and rebuild the case/subcohort structure.

    Without ``id_column`` every row is taken to be a distinct participant,
    so no duplicates are detected.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path} is not valid UTF-8") from None
    if not rows or not rows[0]:
        raise InputError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise InputError(f"{path}: duplicate column names in header")
    col = {name: i for i, name in enumerate(header)}
    for name in [outcome] + ([id_column] if id_column else []):
        if name not in col:
            raise InputError(f"{path}: unknown column {name!r}")
    if covariates is None:
        covariates = [h for h in header if h not in (outcome, id_column)]
    for name in covariates:
        if name not in col:
            raise InputError(f"{path}: unknown column {name!r}")
        if name in (outcome, id_column):
            raise InputError(f"{path}: column {name!r} cannot be a covariate")

    d, x, ids = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise InputError(
                f"{path}, row {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        raw = row[col[outcome]].strip()
        if raw not in ("0", "1"):
            raise InputError(f"{path}, row {lineno}: {outcome} must be 0 or 1, got {raw!r}")
        d.append(int(raw))
        values = []
        for name in covariates:
            cell = row[col[name]].strip()
            try:
                value = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}, row {lineno}: column {name!r} is not a number: {cell!r}"
                ) from None
            if not np.isfinite(value):
                raise InputError(f"{path}, row {lineno}: column {name!r} is not finite")
            values.append(value)
        x.append(values)
        ids.append((row[col[id_column]].strip() if id_column else len(ids), lineno))
    if not d:
        raise InputError(f"{path}: no data rows")

    d = np.array(d, dtype=np.int8)
    x = np.array(x, dtype=float).reshape(len(d), len(covariates))
    if id_column:
        _check_ids(path, ids, d, x)
    id_values = np.array([i for i, _ in ids], dtype=object if id_column else np.int64)
    stacked = StackedDataset(d=d, x=x, source_id=id_values)

    case_rows = np.flatnonzero(d == 1)
    first = {}
    for r, key in enumerate(id_values.tolist()):
        first.setdefault(key, r)
    rows_kept = np.array(sorted(first.values()), dtype=np.intp)
    cohort_ids = id_values[rows_kept]
    is_case = set(id_values[case_rows].tolist())
    cohort = Cohort(
        ids=cohort_ids,
        y=np.array([1 if k in is_case else 0 for k in cohort_ids.tolist()], dtype=np.int8),
        x=x[rows_kept],
    )
    sample = CaseCohortSample(
        case_ids=id_values[case_rows], subcohort_ids=id_values[d == 0]
    )
    return CaseCohortData(stacked, cohort, sample, tuple(covariates), bool(id_column))


def _check_ids(path, ids, d, x):
    seen = {}
    for r, (key, lineno) in enumerate(ids):
        if key == "":
            raise InputError(f"{path}, row {lineno}: empty participant id")
        if key not in seen:
            seen[key] = r
            continue
        first = seen[key]
        if first < 0:
            raise InputError(
                f"{path}, row {lineno}: id {key!r} appears more than twice"
            )
        if d[first] == d[r]:
            raise InputError(
                f"{path}, rows {ids[first][1]} and {lineno}: id {key!r} appears twice "
                f"with the same indicator value"
            )
        if not np.array_equal(x[first], x[r]):
            raise InputError(
                f"{path}, rows {ids[first][1]} and {lineno}: id {key!r} has different "
                "covariate values on its two rows"
            )
        seen[key] = -1
