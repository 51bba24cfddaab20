# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************


def check_divisible_shape(shape: tuple[int, ...], divisor: int) -> bool:
    return all(dim >= divisor and dim % divisor == 0 for dim in shape)
