"""Spiking neural network agent with object and action memories."""

__version__ = "0.1.0"
