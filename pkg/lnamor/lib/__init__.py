"""lnamor: structure-preserving reduction of the linear noise approximation."""

from lnamor.lib.logging import setup_logging

# Initialize logging when the library is imported
setup_logging()

from lnamor.lib.lnamor import Lnamor

__all__ = ["Lnamor"]
