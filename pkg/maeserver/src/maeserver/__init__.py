"""Masked-autoencoder codec server speaking the SCMC wire protocol."""

from .model import ModelConfig, TinyMAE, load_checkpoint, save_checkpoint
from .server import CodecServer, serve_stdio, serve_tcp
from .wireproto import Capabilities, ProtocolError

__all__ = ["Capabilities", "CodecServer", "ModelConfig", "ProtocolError",
           "TinyMAE", "load_checkpoint", "save_checkpoint", "serve_stdio",
           "serve_tcp"]

__version__ = "0.1.0"
