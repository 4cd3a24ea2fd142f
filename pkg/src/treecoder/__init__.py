"""LLM-guided tree search for assigning codes from a hierarchical ontology."""

__version__ = "0.1.0"
