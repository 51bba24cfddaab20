# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from .distance import ahd, ashd, directed_distances, extract_surface
from .mask import BinaryMask
from .overlap import dsc, volume_difference
from .report import (
    METRIC_NAMES,
    CaseMetrics,
    MetricReport,
    MetricSummary,
    OrganMetrics,
    evaluate_case,
    evaluate_cases,
    evaluate_organ,
    format_comparison_table,
    get_comparison_rows,
)
