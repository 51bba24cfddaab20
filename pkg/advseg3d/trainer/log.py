# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import csv
import os
from dataclasses import dataclass, fields

from ..losses import TrainBranch


@dataclass(frozen=True)
class TrainLogRow:
    iteration: int
    branch: TrainBranch
    lr_s: float
    lr_d: float | None = None
    l_vox: float | None = None
    l_adv: float | None = None
    l_semi: float | None = None
    l_d: float | None = None
    trusted_frac: float | None = None


@dataclass(frozen=True)
class PGGANLogRow:
    iteration: int
    stage_index: int
    alpha: float
    critic_loss: float
    generator_loss: float
    gradient_penalty: float


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, TrainBranch):
        return value.value
    return repr(value)


def _parse_cell(name: str, value: str):
    if value == "":
        return None
    if name == "branch":
        return TrainBranch(value)
    if name in ["iteration", "stage_index"]:
        return int(value)
    return float(value)


class CSVLogWriter:
    """append-only CSV log, empty cells are not applicable values

    On resume, rows after resume_iteration (written after the checkpoint being resumed from) are dropped so the
    iteration column stays gapless and monotone.
    """

    def __init__(self, path: str, row_class: type, resume_iteration: int | None = None) -> None:
        self.path = path
        self.row_class = row_class
        self.header = [i.name for i in fields(row_class)]

        rows = []
        if resume_iteration is not None and os.path.isfile(path):
            rows = [row for row in read_log(path, row_class) if row.iteration <= resume_iteration]

        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.header)
            writer.writerows(self._to_cells(row) for row in rows)

    def _to_cells(self, row) -> list[str]:
        return [_format_cell(getattr(row, name)) for name in self.header]

    def write(self, row) -> None:
        assert isinstance(row, self.row_class), f"expected a {self.row_class.__name__}"

        with open(self.path, "a", newline="", encoding="utf-8") as f:
            csv.writer(f, lineterminator="\n").writerow(self._to_cells(row))


def read_log(path: str, row_class: type = TrainLogRow) -> list:
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        return [row_class(**{name: _parse_cell(name, value) for name, value in row.items()}) for row in reader]
