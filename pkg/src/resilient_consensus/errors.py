# ABOUTME: Exception hierarchy shared by the simulator, checker and CLI.
# ABOUTME: The CLI maps these onto exit codes 2 (validation) and 3 (numeric).

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from resilient_consensus.trace import Trace


class ConsensusError(Exception):
    """Base class for all resilient-consensus errors."""


class InputError(ConsensusError, ValueError):
    """Invalid user input: bad indices, orderings, or scenario content."""


class GraphSizeError(InputError):
    """Graph too large for exhaustive subset enumeration."""


class ParameterError(InputError):
    """Sampling period and damping gain violate 1 + T^2/2 <= alpha*T <= 2 - T^2/2."""


class ScheduleError(ConsensusError):
    """Delay or update schedule cannot be honoured."""


class NumericError(ConsensusError):
    """A state entry became non-finite."""

    def __init__(self, message: str, agent: int | None = None) -> None:
        super().__init__(message)
        self.agent = agent


class DivergenceError(NumericError):
    """A position left the divergence guard; carries the partial trace."""

    def __init__(self, message: str, agent: int, trace: "Trace") -> None:
        super().__init__(message, agent)
        self.trace = trace
