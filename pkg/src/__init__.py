"""
GapWiz - Certified Max-Cut Integrality Gaps
Core source package
"""

__version__ = "2.0.0"
__author__ = "Srijan-XI"

# Import commonly used items for convenience
from .config import *
from .exceptions import GapWizError, VerificationError

__all__ = [
    'config',
    'exceptions',
    'logger',
    'retry_utils',
    'streams',
    'jacobi',
    'cutpoly',
    'kernels',
    'lpcore',
    'gapbound',
    'certificate',
    'instances',
    'cli',
    'GapWizError',
    'VerificationError',
]
