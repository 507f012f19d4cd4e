"""holodrift: hyperbolic Brownian motion, Fuchsian tessellations, and
random-walk holonomy experiments."""

__version__ = "0.1.0"
