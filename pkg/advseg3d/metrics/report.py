# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from tabulate import tabulate

from ..backend import MetricBackend
from ..constants import CLASS_NAMES, DEFAULT_SPACING_MM
from ..data import LabelMap
from ..errors import EmptyMaskError
from ..utils import dump_json, get_logger, load_json
from .distance import ahd, ashd
from .mask import BinaryMask
from .overlap import dsc, volume_difference


logger = get_logger(__name__)

METRIC_NAMES = ("dsc", "ahd_mm", "ashd_mm", "vd_percent")
NOT_AVAILABLE = "N/A"


@dataclass(frozen=True)
class OrganMetrics:
    dsc: float
    ahd_mm: float | None = None
    ashd_mm: float | None = None
    vd_percent: float | None = None

    def get(self, metric: str) -> float | None:
        assert metric in METRIC_NAMES, f"unexpected metric ({metric})"
        return getattr(self, metric)

    def to_dict(self) -> dict:
        return {metric: self.get(metric) for metric in METRIC_NAMES}


@dataclass(frozen=True)
class CaseMetrics:
    case_id: str
    organs: dict[str, OrganMetrics]


@dataclass(frozen=True)
class MetricSummary:
    mean: float | None
    std: float | None
    count: int

    def format(self, digits: int = 4) -> str:
        if self.count == 0:
            return NOT_AVAILABLE
        return f"{self.mean:.{digits}f}(±{self.std:.{digits}f})"


@dataclass
class MetricReport:
    """per-case organ metrics with aggregates, organs are ordered as in the class names (background excluded)"""

    organ_names: tuple[str, ...] = CLASS_NAMES[1:]
    cases: list[CaseMetrics] = field(default_factory=list)

    def add_case(self, case: CaseMetrics) -> None:
        assert tuple(case.organs.keys()) == self.organ_names, "case organs don't match the report organs"
        self.cases.append(case)

    def get_values(self, organ: str, metric: str) -> list[float]:
        """values of one metric across cases with N/A entries dropped"""

        values = [case.organs[organ].get(metric) for case in self.cases]
        return [value for value in values if value is not None]

    def summary(self) -> dict[str, dict[str, MetricSummary]]:
        result = {}
        for organ in self.organ_names:
            result[organ] = {}
            for metric in METRIC_NAMES:
                values = self.get_values(organ, metric)

                if len(values) == 0:
                    result[organ][metric] = MetricSummary(mean=None, std=None, count=0)
                else:
                    result[organ][metric] = MetricSummary(
                        mean=float(np.mean(values)), std=float(np.std(values)), count=len(values)
                    )

        return result

    def get_mean_dsc(self) -> float:
        """mean DSC over every organ of every case"""

        values = [value for organ in self.organ_names for value in self.get_values(organ, "dsc")]
        return float(np.mean(values)) if len(values) > 0 else math.nan

    def get_header(self) -> list[str]:
        return ["case_id"] + [f"{organ}_{metric}" for organ in self.organ_names for metric in METRIC_NAMES]

    def get_rows(self) -> list[list[str]]:
        rows = []
        for case in self.cases:
            row = [case.case_id]
            for organ in self.organ_names:
                for metric in METRIC_NAMES:
                    value = case.organs[organ].get(metric)
                    row.append(NOT_AVAILABLE if value is None else repr(value))
            rows.append(row)

        summary = self.summary()
        rows.append(["mean(±std)"] + [summary[o][m].format() for o in self.organ_names for m in METRIC_NAMES])

        return rows

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.get_header())
            writer.writerows(self.get_rows())

    def to_dict(self) -> dict:
        summary = self.summary()

        return {
            "organ_names": list(self.organ_names),
            "cases": [
                {"case_id": case.case_id, "organs": {o: case.organs[o].to_dict() for o in self.organ_names}}
                for case in self.cases
            ],
            "summary": {
                organ: {
                    metric: {"mean": s.mean, "std": s.std, "count": s.count} for metric, s in summary[organ].items()
                }
                for organ in self.organ_names
            },
        }

    def write_json(self, path: str) -> None:
        dump_json(self.to_dict(), path)

    @staticmethod
    def from_dict(data: dict) -> "MetricReport":
        report = MetricReport(organ_names=tuple(data["organ_names"]))
        for case in data["cases"]:
            report.add_case(
                CaseMetrics(
                    case_id=case["case_id"],
                    organs={o: OrganMetrics(**case["organs"][o]) for o in report.organ_names},
                )
            )

        return report

    @staticmethod
    def read_json(path: str) -> "MetricReport":
        return MetricReport.from_dict(load_json(path))


def _get_distance_or_none(function, gt: BinaryMask, pred: BinaryMask, backend: MetricBackend) -> float | None:
    try:
        return function(gt, pred, backend)
    except EmptyMaskError:
        return None


def evaluate_organ(gt: BinaryMask, pred: BinaryMask, backend: MetricBackend = MetricBackend.edt) -> OrganMetrics:
    return OrganMetrics(
        dsc=dsc(gt, pred),
        ahd_mm=_get_distance_or_none(ahd, gt, pred, backend),
        ashd_mm=_get_distance_or_none(ashd, gt, pred, backend),
        vd_percent=None if gt.is_empty else volume_difference(gt, pred),
    )


def evaluate_case(
    gt: LabelMap,
    pred: LabelMap,
    spacing_mm: tuple[float, float, float] = DEFAULT_SPACING_MM,
    case_id: str = "case",
    class_names: tuple[str, ...] = CLASS_NAMES,
    backend: MetricBackend = MetricBackend.edt,
) -> MetricReport:
    """binarizes every non-background class and computes all organ metrics, missing organs give N/A distances

    Args:
        gt (LabelMap): ground truth labels
        pred (LabelMap): predicted labels
        spacing_mm (tuple[float, float, float], optional): voxel spacing. Defaults to DEFAULT_SPACING_MM.
        case_id (str, optional): case identifier in the report. Defaults to "case".
        class_names (tuple[str, ...], optional): class names with background first. Defaults to CLASS_NAMES.
        backend (MetricBackend, optional): distance backend. Defaults to MetricBackend.edt.

    Returns:
        MetricReport: report holding one case
    """

    assert gt.shape == pred.shape, f"label map shapes {gt.shape} and {pred.shape} differ"
    assert gt.num_classes == len(class_names), "class names don't match the number of classes"

    organs = {}
    for class_index, organ in enumerate(class_names[1:], start=1):
        organs[organ] = evaluate_organ(
            BinaryMask(gt.classes == class_index, spacing_mm),
            BinaryMask(pred.classes == class_index, spacing_mm),
            backend=backend,
        )

        if organs[organ].ahd_mm is None:
            logger.debug("organ %s of case %s is missing, distances are N/A", organ, case_id)

    report = MetricReport(organ_names=tuple(class_names[1:]))
    report.add_case(CaseMetrics(case_id=case_id, organs=organs))

    return report


def evaluate_cases(
    cases: list[tuple[str, LabelMap, LabelMap]],
    spacing_mm: tuple[float, float, float] = DEFAULT_SPACING_MM,
    class_names: tuple[str, ...] = CLASS_NAMES,
    backend: MetricBackend = MetricBackend.edt,
    num_workers: int = 1,
) -> MetricReport:
    """evaluates (case_id, gt, pred) triples concurrently, cases keep their input order in the report"""

    assert num_workers >= 1, "num_workers should be >= 1"

    def _evaluate(case: tuple[str, LabelMap, LabelMap]) -> MetricReport:
        case_id, gt, pred = case
        return evaluate_case(gt, pred, spacing_mm, case_id=case_id, class_names=class_names, backend=backend)

    with ThreadPoolExecutor(max_workers=num_workers) as executor:
        case_reports = list(executor.map(_evaluate, cases))

    report = MetricReport(organ_names=tuple(class_names[1:]))
    for case_report in case_reports:
        report.add_case(case_report.cases[0])

    return report


def _is_better(metric: str, value: float, best: float) -> bool:
    if metric == "dsc":
        return value > best
    if metric == "vd_percent":
        return abs(value) < abs(best)
    return value < best


def get_comparison_rows(reports: dict[str, MetricReport | None]) -> tuple[list[str], list[list[str]]]:
    """one row per run and one column per organ metric holding mean(±std), the best run per column is starred

    Best means the highest DSC, the lowest AHD and ASHD and the VD closest to 0. Runs without a report (None) get
    a row marked incomplete.

    Args:
        reports (dict[str, MetricReport | None]): reports keyed by run name

    Returns:
        tuple[list[str], list[list[str]]]: header and rows
    """

    assert len(reports) > 0, "nothing to compare"

    complete = {name: report for name, report in reports.items() if report is not None}
    organ_names = next(iter(complete.values())).organ_names if len(complete) > 0 else CLASS_NAMES[1:]
    assert all(r.organ_names == organ_names for r in complete.values()), "reports cover different organs"

    summaries = {name: report.summary() for name, report in complete.items()}
    columns = [(organ, metric) for organ in organ_names for metric in METRIC_NAMES]

    best = {}
    for column in columns:
        for name, summary in summaries.items():
            mean = summary[column[0]][column[1]].mean
            if mean is not None and (column not in best or _is_better(column[1], mean, best[column][1])):
                best[column] = (name, mean)

    rows = []
    for name in reports:
        if name not in summaries:
            rows.append([name] + ["incomplete"] * len(columns))
            continue

        row = [name]
        for organ, metric in columns:
            cell = summaries[name][organ][metric].format()
            if best.get((organ, metric), (None,))[0] == name:
                cell += " *"
            row.append(cell)
        rows.append(row)

    header = ["run"] + [f"{organ}_{metric}" for organ, metric in columns]
    return header, rows


def format_comparison_table(reports: dict[str, MetricReport | None], table_format: str = "github") -> str:
    header, rows = get_comparison_rows(reports)
    return tabulate(rows, headers=header, tablefmt=table_format)
