"""Super-replication prices, their dual representations and duality-gap numerics."""

__version__ = "0.1.0"
