"""Resampling-forgery detection with an authentication-gated face recognizer."""

from .authenticator import DetectorConfig, Verdict, authenticate
from .raster import Raster, load_image, save_image
from .recognizer import PipelineModel, load_model, recognize, save_model, train_pipeline

__version__ = "0.1.0"

__all__ = [
    "DetectorConfig", "PipelineModel", "Raster", "Verdict", "authenticate", "load_image",
    "load_model", "recognize", "save_image", "save_model", "train_pipeline",
]
