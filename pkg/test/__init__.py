"""
GapWiz Test Suite - Package Initialization
"""

__version__ = "2.0.0"

# Test utilities
from .test_utils import *

__all__ = list(ALL_TEST_MODULES)
