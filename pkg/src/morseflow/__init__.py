"""Flow-category homology engine and gradient-flow simulator."""

__version__ = "0.1.0"
