"""Butterfly-core community search over vertex-labeled graphs."""

__version__ = "0.1.0"
