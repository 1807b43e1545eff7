"""Persistent homology of finite metric spaces over Z2."""
__version__ = "0.1.0"
