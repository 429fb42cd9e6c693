from .exceptions import *  # noqa: F401, F403
from .config import *  # noqa: F401, F403
from .numcore import *  # noqa: F401, F403
from .neuron import *  # noqa: F401, F403
from .freq import *  # noqa: F401, F403
from .layers import *  # noqa: F401, F403
from .model import *  # noqa: F401, F403
from .energy import *  # noqa: F401, F403
from .train import *  # noqa: F401, F403

__version__ = '0.1.0'
