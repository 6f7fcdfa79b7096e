"""Desk-scale tools for entropy, shadowing, chain recurrence and irregular sets of symbolic and interval maps."""

from .core_spaces import load_system
from .errors import ShadowlabError

__all__ = ["load_system", "ShadowlabError"]
__version__ = "0.1.0"
