"""protoflow: retrieval-augmented UI prototype generation with editable SVG output."""

__version__ = "0.1.0"
