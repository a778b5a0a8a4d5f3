"""Training and serving for the binary question router behind POST /route."""

__version__ = "0.1.0"
