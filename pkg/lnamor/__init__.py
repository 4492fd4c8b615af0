from lnamor.lib import constants as _constants
from lnamor.lib.lnamor import Lnamor

__version__ = _constants.VERSION

__all__ = ["Lnamor", "__version__"]
