"""Box dimension, Minkowski content and rectifiability of oscillatory curves."""
__version__ = "0.1.0"
