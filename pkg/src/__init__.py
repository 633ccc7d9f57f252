"""Rake receiver mistiming simulator for DS-UWB links."""
__version__ = "0.1.0"
