# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import random
import zlib
from contextlib import contextmanager

import numpy as np
import torch


def set_seed(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)

    torch.manual_seed(seed)
    torch.cuda.manual_seed_all(seed)


def derive_seed(seed: int, *names: str | int) -> int:
    """derives an independent 31-bit seed for a named subsystem from the run seed

    Args:
        seed (int): run seed
        names (str | int): subsystem path, e.g. ("segnet",) or ("phantom", 3)

    Returns:
        int: derived seed
    """

    keys = [zlib.crc32(str(name).encode("utf-8")) for name in names]
    state = np.random.SeedSequence([seed, *keys]).generate_state(1)[0]
    return int(state) & 0x7FFFFFFF


@contextmanager
def seeded_torch_rng(seed: int):
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        yield
