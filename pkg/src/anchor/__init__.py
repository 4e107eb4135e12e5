"""Period-anchored deformable convolutions for time series, in NumPy."""

__version__ = "0.1.0"
