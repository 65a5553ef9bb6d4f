"""Entropy-structure toolkit for hyperbolic conservation laws."""
