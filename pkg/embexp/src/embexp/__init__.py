"""Export per-word contextual embeddings for a tokenized corpus to CEMB files."""

__version__ = "0.1.0"

from .exporter import ExportConfig, export

__all__ = ["ExportConfig", "export"]
