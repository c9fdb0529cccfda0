"""Cohorts, case-cohort sampling and construction of the stacked dataset."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional

import numpy as np

from .errors import ContractViolation
from .model import StackedDataset, _frozen

__all__ = [
    "CohortRecord",
    "Cohort",
    "CaseCohortSample",
    "subcohort_size",
    "sample_case_cohort",
    "build_stacked",
]


@dataclass(frozen=True)
class CohortRecord:
    id: object
    y: int
    x: tuple
    z: Optional[tuple] = None


@dataclass(frozen=True, eq=False)
class Cohort:
    """Column-oriented cohort indexed by participant id.

    ``x`` holds the analysis covariates; ``z`` optionally holds auxiliary
    variables that only the simulator uses.
    """

    ids: np.ndarray
    y: np.ndarray
    x: np.ndarray
    z: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        ids = np.asarray(self.ids)
        y = np.asarray(self.y)
        x = np.asarray(self.x, dtype=float)
        n = ids.shape[0]
        if x.ndim == 1:
            x = x.reshape(n, -1) if n else x.reshape(0, 0)
        if ids.ndim != 1 or y.shape != (n,) or x.shape[0] != n:
            raise ContractViolation("ids, y and x must describe the same participants")
        if n and not np.isin(y, (0, 1)).all():
            raise ContractViolation("y must contain only 0 and 1")
        if np.unique(ids).size != n:
            raise ContractViolation("participant ids must be unique")
        object.__setattr__(self, "ids", _frozen(ids))
        object.__setattr__(self, "y", _frozen(y.astype(np.int8)))
        object.__setattr__(self, "x", _frozen(x))
        if self.z is not None:
            object.__setattr__(self, "z", _frozen(np.asarray(self.z, dtype=float)))

    @classmethod
    def from_records(cls, records: Iterable[CohortRecord]) -> "Cohort":
        records = list(records)
        if not records:
            return cls(np.arange(0), np.zeros(0, dtype=int), np.zeros((0, 0)))
        z = None
        if all(r.z is not None for r in records):
            z = np.array([r.z for r in records], dtype=float)
        return cls(
            ids=np.array([r.id for r in records]),
            y=np.array([r.y for r in records]),
            x=np.array([r.x for r in records], dtype=float),
            z=z,
        )

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def __iter__(self) -> Iterator[CohortRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def record(self, i: int) -> CohortRecord:
        z = None if self.z is None else tuple(self.z[i])
        return CohortRecord(self.ids[i].item(), int(self.y[i]), tuple(self.x[i]), z)

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    @cached_property
    def _range_ids(self) -> bool:
        return np.issubdtype(self.ids.dtype, np.integer) and np.array_equal(
            self.ids, np.arange(len(self))
        )

    @cached_property
    def _index(self) -> dict:
        return {k: i for i, k in enumerate(self.ids.tolist())}

    def positions(self, ids) -> np.ndarray:
        """Row positions of ``ids``; unknown ids raise ``KeyError``."""
        ids = np.asarray(ids)
        if ids.size == 0:
            return np.zeros(0, dtype=np.intp)
        if self._range_ids and np.issubdtype(ids.dtype, np.integer):
            if ids.min() < 0 or ids.max() >= len(self):
                bad = ids[(ids < 0) | (ids >= len(self))][0]
                raise KeyError(f"unknown participant id {bad!r}")
            return ids.astype(np.intp)
        index = self._index
        try:
            return np.fromiter((index[k] for k in ids.tolist()), dtype=np.intp, count=ids.size)
        except KeyError as exc:
            raise KeyError(f"unknown participant id {exc.args[0]!r}") from None


@dataclass(frozen=True, eq=False)
class CaseCohortSample:
    """Ids of the case sample and of the subcohort.

    ``m`` counts participants present in both and is always recomputed from
    the two id sequences.
    """

    case_ids: np.ndarray
    subcohort_ids: np.ndarray

    def __post_init__(self):
        case_ids = np.asarray(self.case_ids)
        sub_ids = np.asarray(self.subcohort_ids)
        if np.unique(case_ids).size != case_ids.size:
            raise ContractViolation("case_ids contains repeats")
        if np.unique(sub_ids).size != sub_ids.size:
            raise ContractViolation("subcohort_ids contains repeats")
        object.__setattr__(self, "case_ids", _frozen(case_ids))
        object.__setattr__(self, "subcohort_ids", _frozen(sub_ids))

    @property
    def n1(self) -> int:
        return int(self.case_ids.size)

    @property
    def n0(self) -> int:
        return int(self.subcohort_ids.size)

    @cached_property
    def duplicated(self) -> np.ndarray:
        """Boolean mask over ``subcohort_ids``: member is also a case."""
        if self.n1 == 0 or self.n0 == 0:
            return np.zeros(self.n0, dtype=bool)
        return np.isin(self.subcohort_ids, self.case_ids)

    @property
    def m(self) -> int:
        return int(self.duplicated.sum())

    def noncase_subcohort_ids(self) -> np.ndarray:
        return self.subcohort_ids[~self.duplicated]


def subcohort_size(n: int, fraction: float) -> int:
    """``round(fraction * n)`` with halves rounded up."""
    return int(np.floor(fraction * n + 0.5))


def sample_case_cohort(
    cohort: Cohort, subcohort_fraction: float, rng: np.random.Generator
) -> CaseCohortSample:
    """Take every case plus a simple random subcohort of the whole cohort.

    Both id sequences are returned sorted so that the stacked dataset has a
    deterministic row order.
    """
    if not 0.0 < subcohort_fraction <= 1.0:
        raise ContractViolation(
            f"subcohort_fraction must lie in (0, 1], got {subcohort_fraction}"
        )
    n = len(cohort)
    if n == 0:
        raise ContractViolation("cohort is empty")
    n0 = subcohort_size(n, subcohort_fraction)
    chosen = rng.choice(n, size=n0, replace=False)
    return CaseCohortSample(
        case_ids=np.sort(cohort.ids[cohort.y == 1]),
        subcohort_ids=np.sort(cohort.ids[chosen]),
    )


def _stack(cohort: Cohort, case_pos, sub_pos) -> StackedDataset:
    pos = np.concatenate([case_pos, sub_pos]).astype(np.intp)
    d = np.concatenate([np.ones(len(case_pos), np.int8), np.zeros(len(sub_pos), np.int8)])
    return StackedDataset(d=d, x=cohort.x[pos], source_id=cohort.ids[pos])


def build_stacked(cohort: Cohort, sample: CaseCohortSample) -> StackedDataset:
    """Case rows (``d = 1``) followed by subcohort rows (``d = 0``)."""
    case_pos = cohort.positions(sample.case_ids)
    if sample.n1 and (cohort.y[case_pos] != 1).any():
        bad = sample.case_ids[cohort.y[case_pos] != 1][0]
        raise ContractViolation(f"case id {bad!r} does not have y = 1")
    sub_pos = cohort.positions(sample.subcohort_ids)
    return _stack(cohort, case_pos, sub_pos)
