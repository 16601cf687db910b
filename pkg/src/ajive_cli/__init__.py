"""AJIVE CLI - angle-based joint and individual variation explained."""

__version__ = "0.1.0"
