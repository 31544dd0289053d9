"""Detection ensemble fusion, mAP evaluation and YOLO loss reference."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
