"""Single-magnon guide, coupler and interferometer simulations on a square spin lattice."""

__version__ = "0.1.0"
