"""Static figure rendering for degenbranch experiment outputs."""

__version__ = "0.1.0"

from .render import FIGURE_NAMES, RenderError, render
