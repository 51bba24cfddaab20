# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************
