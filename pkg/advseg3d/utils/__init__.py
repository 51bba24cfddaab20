# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from .config import dataclass_to_dict, load_dataclass, parse_dataclass
from .device import get_device
from .logging import configure_logging, get_logger, is_progress_enabled
from .random import derive_seed, seeded_torch_rng, set_seed
from .serialization import dump_json, dumps_json, ensure_directory, load_json
from .tensor import clone_parameters, get_parameter_checksums, get_tensor_checksum
