"""Lattice points under generalized hyperbolas: exact counts, Voronoi sums and mean squares."""

__version__ = "0.1.0"
