import logging
from decimal import Decimal
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)

# ── Error Models ───────────────────────────────────────────────────

class LascoError(Exception):
    """Base class for every error raised by the engine."""
    pass


class PredicateSyntaxError(LascoError):
    """Raised when predicate text does not follow the predicate grammar."""

    def __init__(self, message: str, text: str = "", line: int = 1, column: int = 1):
        self.text = text
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class PolicyFormatError(LascoError):
    """Raised for a malformed line in a policy file."""

    def __init__(self, message: str, line_number: int = 0):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number else ""
        super().__init__(f"{prefix}{message}")


class HistoryFormatError(LascoError):
    """Raised for a malformed record in a history file."""

    def __init__(self, message: str, line_number: int = 0):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number else ""
        super().__init__(f"{prefix}{message}")


class HistoryConsistencyError(LascoError):
    """Raised when records contradict each other (unknown objects, duplicate ids)."""
    pass


class LintFailedError(LascoError):
    """Raised when a policy with lint errors is handed to the matcher."""

    def __init__(self, policy_name: str, diagnostics: list):
        self.policy_name = policy_name
        self.diagnostics = diagnostics
        details = "; ".join(f"{d.element_id}: {d.message}" for d in diagnostics)
        super().__init__(f"policy {policy_name!r} has lint errors: {details}")


class MatchInvariantError(LascoError):
    """Raised when a complete match is left with unresolved variable conditions."""
    pass


class SearchLimitError(LascoError):
    """Raised when match growth exceeds the configured number of combination attempts."""
    pass


class TopologyError(LascoError):
    """Raised for an invalid department tree."""
    pass


class TraceFormatError(LascoError):
    """Raised for a malformed line in a simulation trace."""

    def __init__(self, message: str, line_number: int = 0):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number else ""
        super().__init__(f"{prefix}{message}")


# ── Data Models ────────────────────────────────────────────────────

class MatchOptions(BaseModel):
    """Knobs for one matching run.

    Hint lists are exhaustive: a piece with a hint is only tried against the
    listed events (edge pieces) or ``(object id, time)`` snapshots (isolated
    node pieces).
    """

    model_config = ConfigDict(frozen=True)

    edge_hints: dict[str, list[str]] = Field(default_factory=dict)
    node_hints: dict[str, list[tuple[str, Union[int, Decimal]]]] = Field(default_factory=dict)
    same_event_attr: Optional[str] = None
    new_only: Optional[int] = None  # Only elements stamped with a later epoch
    max_attempts: Optional[int] = None


class SimulationOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    pool_index: Literal["indexed", "linear"] = "indexed"


# ── Environment Settings ──────────────────────────────────────────

class EnvSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="LASCO_",
        extra="ignore",
    )

    # ── Logging ─────────────────────────────────────────────
    LOG_LEVEL: str = "WARNING"
    NO_COLOR: bool = False

    # ── Output ──────────────────────────────────────────────
    OUTPUT_FORMAT: Literal["text", "structured"] = "text"

    # ── Matching ────────────────────────────────────────────
    MAX_ATTEMPTS: Optional[int] = None  # Abort grow_matches beyond this many combination attempts

    # ── Distributed simulation ──────────────────────────────
    POOL_INDEX: Literal["indexed", "linear"] = "indexed"


class GlobalSettings:
    def __init__(self):
        self.env = EnvSettings()

    def reload(self) -> None:
        """Re-read ``LASCO_*`` variables and ``.env``."""
        self.env = EnvSettings()


settings = GlobalSettings()
