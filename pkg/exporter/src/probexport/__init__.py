"""Bridge from fine-tuned transformer checkpoints to softvote probability TSVs."""

from .errors import ExportError
from .exporter import SOFTMAX_TOLERANCE, ExportJob, export_probabilities

__version__ = "0.1.0"

__all__ = ["ExportError", "ExportJob", "SOFTMAX_TOLERANCE", "export_probabilities", "__version__"]
