"""Blaschke-Santalo diagrams for the Dirichlet eigenvalue and torsional rigidity of planar convex sets."""

__version__ = "0.1.0"
