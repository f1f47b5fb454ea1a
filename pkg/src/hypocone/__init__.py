"""Tangent cones, representation symbols and Carnot-Caratheodory distances
for frames of polynomial vector fields."""

from .lie_core import *  # noqa: F401,F403
from .frame_model import *  # noqa: F401,F403
from .tangent_cones import *  # noqa: F401,F403
from .groupoid import *  # noqa: F401,F403
from .symbols import *  # noqa: F401,F403
from .cc_metric import *  # noqa: F401,F403
from .estimates import *  # noqa: F401,F403
from .model_io import ModelError, load_model, load_operator

__version__ = "0.1.0"
