"""Monte Carlo checks of Chevet-type bounds for isotropic log-concave matrices."""

__version__ = "0.1.0"
