"""Weak-derivative (Jordan decomposition) policy gradients for Gaussian policies.

The heavy lifting happens in the compiled ``_wdpg`` extension; this package
re-exports it under a stable name.
"""

from ._wdpg import *  # noqa: F401,F403
from ._wdpg import __version__

__all__ = [name for name in dir() if not name.startswith("_")]
