"""PLS path modeling feeding an agent-based simulation of learning diffusion."""

__version__ = "0.1.0"
