"""Stream-function Navier-Stokes on the unit square with BFS elements.

Newton's method on one mesh, or Newton on a coarse mesh followed by a single
linearized solve on a finer one.
"""

__version__ = "0.1.0"
