"""Gazetteer-enhanced character NER toolkit."""

__version__ = "0.1.0"
