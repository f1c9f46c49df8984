"""Plane-wave engine for periodic Maxwell operators.

Band structures, ground-state dispersion, gradient-subspace projections and
semiclassical symbol checks for doubly weighted curl operators on Bravais
lattices.
"""

__version__ = "0.1.0"
