"""Point transformations, exactly solvable oscillators and curved-metric propagation."""

from ._canonflow import *  # noqa: F401,F403
from ._canonflow import Error, __version__  # noqa: F401
