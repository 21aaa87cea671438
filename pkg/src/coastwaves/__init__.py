"""Semiclassical coastal-trapped wave modes on a cylinder."""

__version__ = "0.1.0"
