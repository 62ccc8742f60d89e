"""Adapter for the UCI student performance table.

The file (student-mat.csv / student-por.csv) is semicolon-separated with one
row per student. We build a 3 x 2 task grid: mode 1 is the grade period
(G1, G2, G3), mode 2 is sex (F=1, M=2, sorted level order). Each student
contributes one sample to each of the three grade-period tasks of their sex,
with the raw 0-20 grade as target.

Encoding: columns whose every value parses as a number are treated as
numeric and z-scored per feature with training-split statistics; all other
columns are one-hot encoded over the sorted levels observed in the full
file. The sex column indexes tasks and is excluded from features; the grade
columns are targets. The 80/20 split is drawn per student within each sex,
so a student never lands in train for one grade period and test for
another, and every task keeps the same split ratio.

No downloading happens here; callers must point at a local copy.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .data import MtlDataset
from .errors import DataError
from .taskgrid import TaskGrid

__all__ = ["STUDENT_GRADE_COLUMNS", "load_student_performance"]

STUDENT_GRADE_COLUMNS = ("G1", "G2", "G3")
_SEX_COLUMN = "sex"
_SEX_LEVELS = ("F", "M")


def _read_rows(path: str) -> tuple[list[str], list[list[str]]]:
    if not os.path.exists(path):
        raise DataError(f"{path}: file not found (download the UCI student data manually)")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=";", quotechar='"')
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    width = len(header)
    for lineno, row in enumerate(rows, start=2):
        if len(row) != width:
            raise DataError(f"{path}:{lineno}: expected {width} fields, found {len(row)}")
    return header, rows


def _is_numeric_column(values: list[str]) -> bool:
    for v in values:
        try:
            float(v)
        except ValueError:
            return False
    return True


def load_student_performance(
    path: str, test_fraction: float = 0.2, seed: int = 0
) -> tuple[MtlDataset, MtlDataset]:
    """Load and split the student table into (train, test) multitask datasets."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    header, rows = _read_rows(path)
    for col in (_SEX_COLUMN, *STUDENT_GRADE_COLUMNS):
        if col not in header:
            raise DataError(f"{path}: missing required column {col!r}")
    sex_pos = header.index(_SEX_COLUMN)
    grade_pos = [header.index(c) for c in STUDENT_GRADE_COLUMNS]
    skip = {sex_pos, *grade_pos}

    sexes = sorted({row[sex_pos] for row in rows})
    if sexes != list(_SEX_LEVELS):
        raise DataError(f"{path}: expected sex levels {_SEX_LEVELS}, found {sexes}")

    feature_cols = [j for j in range(len(header)) if j not in skip]
    numeric = {j: _is_numeric_column([row[j] for row in rows]) for j in feature_cols}
    levels = {
        j: sorted({row[j] for row in rows}) for j in feature_cols if not numeric[j]
    }

    encoded = np.zeros(
        (len(rows), sum(1 if numeric[j] else len(levels[j]) for j in feature_cols))
    )
    col = 0
    for j in feature_cols:
        if numeric[j]:
            encoded[:, col] = [float(row[j]) for row in rows]
            col += 1
        else:
            index = {lvl: k for k, lvl in enumerate(levels[j])}
            for i, row in enumerate(rows):
                encoded[i, col + index[row[j]]] = 1.0
            col += len(levels[j])
    numeric_cols = np.cumsum(
        [0] + [1 if numeric[j] else len(levels[j]) for j in feature_cols]
    )[:-1][[numeric[j] for j in feature_cols]]

    grades = np.empty((len(rows), 3))
    for lineno_offset, row in enumerate(rows):
        for g, pos in enumerate(grade_pos):
            try:
                grades[lineno_offset, g] = float(row[pos])
            except ValueError:
                raise DataError(
                    f"{path}:{lineno_offset + 2}: non-numeric grade {row[pos]!r}"
                ) from None

    rng = np.random.default_rng(seed)
    sex_of = np.array([_SEX_LEVELS.index(row[sex_pos]) for row in rows])
    is_test = np.zeros(len(rows), dtype=bool)
    for s in range(len(_SEX_LEVELS)):
        members = np.flatnonzero(sex_of == s)
        order = rng.permutation(members)
        n_test = int(round(test_fraction * len(members)))
        if n_test == 0 or n_test == len(members):
            raise DataError(f"{path}: split leaves an empty train or test side for sex {_SEX_LEVELS[s]!r}")
        is_test[order[:n_test]] = True

    mean = encoded[~is_test][:, numeric_cols].mean(axis=0)
    std = encoded[~is_test][:, numeric_cols].std(axis=0)
    std[std == 0.0] = 1.0
    encoded[:, numeric_cols] = (encoded[:, numeric_cols] - mean) / std

    grid = TaskGrid((3, len(_SEX_LEVELS)))

    def build(test_side: bool) -> MtlDataset:
        # grade period is the fast mode, so tasks run (G1,F),(G2,F),...,(G3,M)
        inputs, targets = [], []
        for s in range(len(_SEX_LEVELS)):
            members = np.flatnonzero((sex_of == s) & (is_test == test_side))
            for g in range(3):
                inputs.append(encoded[members])
                targets.append(grades[members, g])
        return MtlDataset(grid, tuple(inputs), tuple(targets))

    return build(False), build(True)
