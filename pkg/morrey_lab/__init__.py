"""Discrete Morrey space toolkit: norms, maximal operators and Riesz potentials on Z^d."""
