"""Exception hierarchy shared by every solver component."""

from __future__ import annotations

from typing import Any


class GnsqError(Exception):
    """Base class for all library errors."""


class NonFiniteResidual(GnsqError):
    def __init__(self, index: int, value: float):
        super().__init__(f"residual component {index} is not finite ({value!r})")
        self.index = index
        self.value = value


class NonFiniteGradient(GnsqError):
    def __init__(self, index: int):
        super().__init__(f"gradient of residual component {index} is not finite")
        self.index = index


class InvalidBatch(GnsqError):
    pass


class DimensionMismatch(GnsqError):
    pass


class FactorizationError(GnsqError):
    pass


class DomainError(GnsqError, ValueError):
    pass


class BracketFailure(GnsqError):
    pass


class RootFindFailure(GnsqError):
    pass


class CapExceeded(GnsqError):
    """The majorization test still fails at the top of the Lipschitz ladder."""

    def __init__(self, L_cap: float, n_probes: int):
        super().__init__(f"majorization failed at the ladder cap L={L_cap:.6g}")
        self.L_cap = L_cap
        self.n_probes = n_probes


class StallLimit(GnsqError):
    """Too many consecutive iterations without an accepted step."""

    def __init__(self, state: Any):
        super().__init__(f"stalled {state.consecutive_stalls} times in a row at k={state.k}")
        self.state = state


class MissingEstimate(GnsqError):
    pass


class ZeroGradient(GnsqError):
    pass


class UnknownSpec(GnsqError):
    pass


class ConfigError(GnsqError):
    pass


class MismatchedProblem(GnsqError):
    pass
