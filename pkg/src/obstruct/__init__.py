"""Obstruction sets for bounded feedback vertex/edge set families, computed
by a search over bounded-pathwidth graph parses."""

__version__ = "0.1.0"
