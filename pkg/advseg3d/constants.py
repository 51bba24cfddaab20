# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

LIBRARY_NAME = "advseg3d"

FORMAT_VERSION = 1
CHECKPOINT_BLOB_VERSION = 1

# background is class 0, organ order is fixed
CLASS_NAMES = ("background", "prostate", "bladder", "rectum", "femur_L", "femur_R")
ORGAN_NAMES = CLASS_NAMES[1:]
NUM_CLASSES = len(CLASS_NAMES)

# applied before every logarithm and to every sigmoid confidence map
LOG_EPSILON = 1e-7

# raw intensity window mapped onto [0, 1]
DEFAULT_INTENSITY_WINDOW = (-200.0, 1200.0)

# (slice thickness, row spacing, column spacing)
DEFAULT_SPACING_MM = (1.5, 0.97, 0.97)

DESK_GRID_SHAPE = (16, 32, 32)
FULL_GRID_SHAPE = (64, 128, 128)
DEFAULT_CROP_DEPTH = 16

ROLE_LABELED = "labeled"
ROLE_UNLABELED = "unlabeled"
ROLE_TEST = "test"
ROLE_SYNTHETIC = "unlabeled-synthetic"
CASE_ROLES = (ROLE_LABELED, ROLE_UNLABELED, ROLE_TEST, ROLE_SYNTHETIC)
