from _mimiclab import *  # noqa: F401,F403
from _mimiclab import __doc__  # noqa: F401
