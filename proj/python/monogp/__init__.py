"""Spatio-temporal GP regression with derivative sign constraints."""

from ._monogp import *  # noqa: F401,F403
from ._monogp import __version__

DEFAULT_GROUPS = (0, 1, 2, 3, 3, 4)
