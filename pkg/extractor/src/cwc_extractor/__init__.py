"""cwc-extractor: CNN layer activations to CWCF feature files."""

from .errors import ExtractorError, UnknownLayer, UnreadableImage, WeightsMissing
from .extract import ExtractionResult, ExtractionSpec, extract
from .registry import MODELS, build_model, layer_spec, model_spec

__version__ = "0.1.0"

__all__ = [
    "ExtractionResult",
    "ExtractionSpec",
    "ExtractorError",
    "MODELS",
    "UnknownLayer",
    "UnreadableImage",
    "WeightsMissing",
    "build_model",
    "extract",
    "layer_spec",
    "model_spec",
]
