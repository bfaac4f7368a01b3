"""Smoothing accelerated proximal gradient methods for constrained nonsmooth convex problems."""

__version__ = "0.1.0"
