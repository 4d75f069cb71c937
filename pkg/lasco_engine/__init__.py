import logging
import sys
from typing import Optional

import dotenv

dotenv.load_dotenv()


class _ColoredFormatter(logging.Formatter):
    """Console formatter: ``HH:MM:SS | LEVEL | logger - message``."""

    # ANSI color codes
    COLORS = {
        'DEBUG': '\033[36m',      # Cyan
        'INFO': '\033[32m',       # Green
        'WARNING': '\033[33m',    # Yellow
        'ERROR': '\033[31m',      # Red
        'CRITICAL': '\033[35m',   # Magenta
    }
    RESET = '\033[0m'
    BOLD = '\033[1m'
    DIM = '\033[2m'

    def __init__(self, use_color: bool = True) -> None:
        super().__init__()
        self.use_color = use_color

    def _paint(self, text: str, *codes: str) -> str:
        if not self.use_color:
            return text
        return f"{''.join(codes)}{text}{self.RESET}"

    def format(self, record):
        levelname = f"{record.levelname:8s}"
        if record.levelname in self.COLORS:
            levelname = self._paint(levelname, self.COLORS[record.levelname], self.BOLD)

        timestamp = self._paint(self.formatTime(record, '%H:%M:%S'), self.DIM)
        name = self._paint(record.name, self.BOLD)
        message = record.getMessage()
        if record.exc_info:
            message = f"{message}\n{self.formatException(record.exc_info)}"

        return f"{timestamp} | {levelname} | {name} - {message}"


class _RepeatedWarningFilter(logging.Filter):
    """Let each distinct evaluation warning through only once per run.

    Type mismatches inside a predicate repeat for every candidate event, so
    the console would otherwise be flooded with identical lines.
    """

    def __init__(self) -> None:
        super().__init__()
        self._seen: set[str] = set()

    def filter(self, record: logging.LogRecord) -> bool:
        if record.levelno != logging.WARNING or not record.name.startswith("lasco_engine.evaluation"):
            return True
        message = record.getMessage()
        if message in self._seen:
            return False
        self._seen.add(message)
        return True


_LOGGING_CONFIGURED = False


def configure_logging(level: Optional[str] = None, color: Optional[bool] = None) -> None:
    """Install the console handler on the root logger. Safe to call multiple times.

    Args:
        level: Log level name; defaults to ``LASCO_LOG_LEVEL``.
        color: Force coloured output on or off; defaults to ``not LASCO_NO_COLOR``.
    """

    global _LOGGING_CONFIGURED
    from lasco_engine.settings import settings

    root_logger = logging.getLogger()
    root_logger.setLevel((level or settings.env.LOG_LEVEL).upper())

    if _LOGGING_CONFIGURED:
        return

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    use_color = (not settings.env.NO_COLOR) if color is None else color
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(_ColoredFormatter(use_color=use_color))
    console_handler.addFilter(_RepeatedWarningFilter())
    root_logger.addHandler(console_handler)

    logging.getLogger("lark").setLevel(logging.WARNING)

    _LOGGING_CONFIGURED = True
