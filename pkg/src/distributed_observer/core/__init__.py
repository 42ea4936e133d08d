"""Numerical core: matrices, plant, network, observer design, simulator."""
