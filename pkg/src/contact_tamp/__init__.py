"""Contact-explicit task and motion planning for floating-base robots.

The package couples a symbolic planner over contact modes with whole-body
trajectory optimization: contact sequences are proposed by tree search over
interface pairings and scored by solving the transcribed trajectory problem.
"""

__version__ = "0.1.0"
