"""Exact branch-and-cut for competitive facility location under a limited choice rule."""
from ._accel import backend
from .instance import (CustomerView, GenConfig, Instance, InstanceFormatError, from_rows,
                       generate, read, view, write)

__version__ = "0.1.0"
