# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import hashlib

import torch
import torch.nn as nn


def get_tensor_checksum(x: torch.Tensor) -> str:
    return hashlib.sha256(x.detach().cpu().contiguous().numpy().tobytes()).hexdigest()


def get_parameter_checksums(module: nn.Module) -> dict[str, str]:
    return {name: get_tensor_checksum(parameter) for name, parameter in module.named_parameters()}


def clone_parameters(module: nn.Module) -> dict[str, torch.Tensor]:
    return {name: parameter.detach().clone() for name, parameter in module.named_parameters()}
