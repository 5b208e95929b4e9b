"""Numerical audits of quantum mechanics on hypersurfaces."""
