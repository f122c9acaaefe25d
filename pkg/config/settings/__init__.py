# Import all settings from base
from .base import *

# Import local overrides if present
try:
    from .local import *
except ImportError:
    pass
