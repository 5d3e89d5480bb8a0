"""Exception hierarchy shared by every testbed module.

All testbed failures derive from TestbedError so callers (CLI, HTTP
service) can map them to error payloads uniformly.
"""


class TestbedError(Exception):
    """Base class for all testbed errors."""


# --- node registry ---

class DuplicateName(TestbedError):
    pass


class DuplicateAddress(TestbedError):
    pass


class InvalidFormat(TestbedError):
    pass


class UnknownNode(TestbedError):
    pass


class NodeInUse(TestbedError):
    pass


class ParseError(TestbedError):
    """Bad line in a persisted file; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


# --- topology generation ---

class Infeasible(TestbedError):
    pass


class GenerationExhausted(TestbedError):
    """No acceptable topology within max_attempts.

    Carries how many rejections were over-connected vs disconnected so
    operators can tell which constraint to relax.
    """

    def __init__(self, attempts: int, over_connected: int, disconnected: int):
        super().__init__(
            f"no acceptable topology in {attempts} attempts "
            f"({over_connected} over-connected, {disconnected} disconnected)"
        )
        self.attempts = attempts
        self.over_connected = over_connected
        self.disconnected = disconnected


class MalformedMatrix(TestbedError):
    pass


# --- rule compilation ---

class DimensionMismatch(TestbedError):
    pass


class RejectedTopology(TestbedError):
    pass


# --- virtual medium ---

class MacSpoof(TestbedError):
    pass


# --- scenarios ---

class UnknownScenario(TestbedError):
    pass


class OutOfRange(TestbedError):
    pass


class StaleScenario(TestbedError):
    pass


class AlreadyPlaying(TestbedError):
    pass


# --- adversary ---

class DuplicateAttack(TestbedError):
    pass


class UnknownAttack(TestbedError):
    pass


class BadHex(TestbedError):
    pass


class FrameTooShort(TestbedError):
    pass


# --- traffic ---

class UnknownFlow(TestbedError):
    pass


class InvalidSpec(TestbedError):
    pass


# --- probe / remote execution ---

class Busy(TestbedError):
    pass


class CommandFailed(TestbedError):
    def __init__(self, exit_code: int, output: str = ""):
        super().__init__(f"command failed with exit code {exit_code}")
        self.exit_code = exit_code
        self.output = output


# --- control service ---

class ConfigError(TestbedError):
    pass


class BindError(TestbedError):
    pass
