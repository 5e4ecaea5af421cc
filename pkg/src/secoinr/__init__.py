"""Semantically conditioned coordinate networks for single-image super-resolution."""

from .config import RunConfig
from .fields import ClassField, ImageField
from .tensor import Tape, Tensor

__all__ = ["ClassField", "ImageField", "RunConfig", "Tape", "Tensor"]
