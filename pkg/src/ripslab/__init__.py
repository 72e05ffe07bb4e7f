"""Exact-arithmetic toolkit for systems of partial isometries on metric
forests (Rips induction, directional Whitehead graphs, K33 certificates)
and for free-group automorphisms given as generator images."""

__version__ = "0.1.0"
