"""Ontology-driven systematic mapping of research literature."""

__version__ = "0.1.0"
