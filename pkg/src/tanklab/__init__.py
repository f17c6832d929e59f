"""tanklab: a transfer-RL workbench for a three-compressor air-tank problem.

Trains soft actor-critic controllers on seeded variants of the environment
and transfers them to new variants via policy intersection (single- or
multi-advisor). See README.md for the CLI and the acceptance suite.
"""

from .backends import BACKEND_NAME

__version__ = "0.1.0"

__all__ = ["BACKEND_NAME", "__version__"]
