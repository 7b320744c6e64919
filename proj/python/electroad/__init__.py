"""Voltage profiles and voltage stability limits of electrified roads."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
