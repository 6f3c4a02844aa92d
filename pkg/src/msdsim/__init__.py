"""Magic-state distillation simulation and decoding toolkit."""

__version__ = "0.1.0"
