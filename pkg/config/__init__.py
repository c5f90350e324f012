"""Ant foraging chemotaxis simulator - Runtime settings package"""
from .config import Settings, settings

__all__ = ["Settings", "settings"]
