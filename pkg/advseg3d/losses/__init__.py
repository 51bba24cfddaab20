# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from .adversarial import adversarial_loss, bce_confidence, d_loss, gradient_penalty
from .segmentation import clamped_log, weighted_mce
from .semi import SemiMask, semi_loss
from .total import TrainBranch, total_s_loss
from .weights import ClassWeights, ClassWeightTracker, LossWeights, adaptive_weights, get_batch_dsc
