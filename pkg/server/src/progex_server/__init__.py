"""progex-server: serve serialized classifiers over the line protocol."""

__version__ = "0.1.0"

from .loaders import ModelLoadError, ServedModel, load_served_model
from .server import serve_stdio, serve_tcp

__all__ = [
    "ModelLoadError",
    "ServedModel",
    "load_served_model",
    "serve_stdio",
    "serve_tcp",
]
