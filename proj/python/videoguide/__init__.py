"""Guided diffusion sampling on analytic Gaussian mixture video priors."""

from ._videoguide import *  # noqa: F401,F403
from ._videoguide import __doc__  # noqa: F401
