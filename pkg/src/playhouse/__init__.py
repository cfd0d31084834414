"""Desk-scale embodied multimodal imitation learning pipeline."""

__version__ = "0.1.0"
