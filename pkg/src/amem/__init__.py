"""Attractor and limit-cycle laboratory for overparameterized autoencoders."""
