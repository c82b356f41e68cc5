"""Conformal Gauss map engine: jets, hypersurface geometry, energies and identity suites."""

__version__ = "0.3.0"
