from ._roelab import *  # noqa: F401,F403
