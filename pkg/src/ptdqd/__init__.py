"""Gain-loss coupled cavities driven by a biased double quantum dot."""
__version__ = "0.1.0"
