"""Ontology-driven hidden-web crawler with an offline web simulator."""

from ontocrawl.terms import fold, fold_value, normalize

__version__ = "0.1.0"

__all__ = ["fold", "fold_value", "normalize", "__version__"]
