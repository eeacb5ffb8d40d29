"""
Logging setup.
Modules log through logging.getLogger(__name__) with a bracketed subsystem tag
as the first token of each message; output goes to stderr.
"""
import logging
import sys
from typing import Optional

from app.config.settings import LOG_LEVEL

_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


def configure_logging(level: Optional[str] = None) -> None:
    """Install a single stderr handler on the root logger (idempotent)."""
    root = logging.getLogger()
    root.setLevel((level or LOG_LEVEL).upper())
    if not any(getattr(h, "_tomokit", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_FORMAT))
        handler._tomokit = True
        root.addHandler(handler)
