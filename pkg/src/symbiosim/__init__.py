"""Symbiotic contact processes: exact simulation, mean-field and PDE limits, and bounds."""
from .core import Boundary, LatticeConfiguration, ModelParams, SiteState, Variant
from .rng import GraphicalRandomSource

__all__ = ["Boundary", "GraphicalRandomSource", "LatticeConfiguration", "ModelParams",
           "SiteState", "Variant"]
__version__ = "0.1.0"
