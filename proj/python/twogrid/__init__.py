"""Two-grid preconditioned solvers for mixed RT0 Darcy flow."""

from ._twogrid import *  # noqa: F401,F403
