"""Gantry crane MPC benchmark harness.

Plant model, numerical kernels, MPC matrix builders, testcase generation,
the closed-loop simulation harness and the specification grader, all backed
by the C++ core.
"""

from cranebench._core import *  # noqa: F401,F403
from cranebench._core import __version__  # noqa: F401
