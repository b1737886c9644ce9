from ._vlab import *  # noqa: F401,F403
from ._vlab import __doc__  # noqa: F401
