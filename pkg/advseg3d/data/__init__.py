# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from .io import (
    Case,
    CaseDataset,
    CaseRecord,
    DatasetManifest,
    load_case,
    load_dataset,
    read_manifest,
    save_case,
    write_manifest,
)
from .phantom import PhantomSpec, generate_phantom
from .sampler import CropSampler
from .transforms import (
    argmax_labels,
    crop_at_offset,
    get_num_crop_offsets,
    labels_to_tensor,
    normalize_intensity,
    random_crop_subvolume,
    split_for_inference,
    stack_predictions,
    tensor_to_one_hot_maps,
    to_one_hot,
    volume_to_tensor,
)
from .volume import CtVolume, LabelMap, OneHotMap
