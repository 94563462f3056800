"""Validated non-existence proofs for invariant tori of a 4-D symplectic map,
plus a floating-point laboratory for minimizing periodic orbits."""

__version__ = "0.1.0"
