"""Export scikit-learn tree models to the treerules JSON model format."""

from .exporter import ExportError, export_model, model_to_document

__all__ = ["ExportError", "export_model", "model_to_document"]
__version__ = "0.1.0"
