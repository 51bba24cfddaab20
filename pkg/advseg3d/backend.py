# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from enum import Enum


class MetricBackend(Enum):
    brute_force = "brute_force"
    edt = "edt"
