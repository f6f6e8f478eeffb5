"""Gradient-flow GNN dynamics and heterophily experiments."""
__version__ = "0.1.0"
