"""GPUnion: voluntary campus GPU sharing with provider supremacy and resilient execution."""

__version__ = "0.1.0"
