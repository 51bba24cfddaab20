# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import torch


def get_device(name: str | None = None) -> torch.device:
    if name in [None, "auto"]:
        name = "cuda" if torch.cuda.is_available() else "cpu"

    return torch.device(name)
