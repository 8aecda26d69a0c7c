"""Constructive CCG supertagging with tree-structured decoders."""

__version__ = "0.1.0"
