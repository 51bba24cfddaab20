# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************


class ConfigError(ValueError):
    def __init__(self, key_path: str, message: str) -> None:
        self.key_path = key_path
        super().__init__(f"{key_path or '<root>'}: {message}")


class NonFiniteValueError(ValueError): ...


class EmptyMaskError(ValueError):
    """raised when a metric that is undefined on empty sets receives an empty mask (organ missing)"""


class PhantomPlacementError(RuntimeError):
    def __init__(self, seed: int, attempts: int, reason: str) -> None:
        self.seed = seed
        self.attempts = attempts
        super().__init__(f"phantom placement failed for seed {seed} after {attempts} attempts ({reason})")


class NonFiniteLossError(RuntimeError):
    def __init__(self, iteration: int, last_checkpoint: str | None, losses: dict[str, float]) -> None:
        self.iteration = iteration
        self.last_checkpoint = last_checkpoint
        self.losses = losses
        super().__init__(
            f"non-finite loss at iteration {iteration} ({losses}), last good checkpoint: {last_checkpoint}"
        )


class OutputExistsError(FileExistsError): ...
