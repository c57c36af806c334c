"""C-SVC cross-validation information sources behind a subprocess protocol."""

from .adapter import AdapterConfig, EvaluationError, SvmSourceEvaluator, load_dataset

__all__ = ["AdapterConfig", "EvaluationError", "SvmSourceEvaluator", "load_dataset"]

__version__ = "0.1.0"
