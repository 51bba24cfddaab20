# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from .discnet import DiscInputMode, DiscNet, DiscNetConfig, build_discnet, make_disc_input
from .pggan import (
    Critic,
    FadeState,
    Generator,
    GrowthSchedule,
    PGGANConfig,
    build_pggan,
    downsample_volume,
    fade_blend,
    get_fade_state,
    grow,
    sample_noise,
    upsample_volume,
)
from .segnet import MultiScalePool3d, ResidualBlock3d, SegNet, SegNetConfig, SegOutput, build_segnet, fuse_heads
