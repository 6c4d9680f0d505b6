"""Numerics for length-minimizing loci on surfaces in Fenchel-Nielsen coordinates."""

__version__ = "0.1.0"
