# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import logging

from ..constants import LIBRARY_NAME


_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
_VERBOSITY_TO_LEVEL = {0: logging.WARNING, 1: logging.INFO}


def get_logger(name: str) -> logging.Logger:
    if not name.startswith(LIBRARY_NAME):
        name = f"{LIBRARY_NAME}.{name}"

    return logging.getLogger(name)


def configure_logging(verbosity: int = 1) -> logging.Logger:
    logger = logging.getLogger(LIBRARY_NAME)
    logger.setLevel(_VERBOSITY_TO_LEVEL.get(verbosity, logging.DEBUG))
    logger.handlers.clear()

    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(_FORMAT))
    logger.addHandler(handler)
    logger.propagate = False

    return logger


def is_progress_enabled() -> bool:
    return logging.getLogger(LIBRARY_NAME).getEffectiveLevel() <= logging.INFO
