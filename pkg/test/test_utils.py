"""
Test Utilities for GapWiz Test Suite
Common functions and fixtures for testing
"""

import importlib
import os
import sys
import tempfile
import shutil
import unittest

import numpy as np

# Add parent directory to path to import src
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.cutpoly import WeightedInstance


SLOW_TESTS = os.environ.get('GAPWIZ_SLOW_TESTS') == '1'

slow_test = unittest.skipUnless(SLOW_TESTS, "set GAPWIZ_SLOW_TESTS=1 to run full-scale checks")


class TestEnvironment:
    """Setup and teardown test environment"""
    __test__ = False

    def __init__(self):
        self.temp_dir = None
        self.test_files = []

    def setup(self):
        """Create temporary test directory"""
        self.temp_dir = tempfile.mkdtemp(prefix='gapwiz_test_')
        return self.temp_dir

    def teardown(self):
        """Clean up test directory"""
        if self.temp_dir and os.path.exists(self.temp_dir):
            shutil.rmtree(self.temp_dir)
        self.temp_dir = None
        self.test_files = []

    def path(self, filename):
        """Path inside the temporary directory"""
        if not self.temp_dir:
            self.setup()
        filepath = os.path.join(self.temp_dir, filename)
        self.test_files.append(filepath)
        return filepath

    def create_test_file(self, filename, content=''):
        """Create a text file with the given content"""
        filepath = self.path(filename)
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(content)
        return filepath

    def get_temp_dir(self):
        """Get temporary directory path"""
        if not self.temp_dir:
            self.setup()
        return self.temp_dir


# ==================== FIXTURES ====================

C5_MAX_CUT = 16.0               # sdp_1 of the unit 5-cycle
C5_SDP2 = 18.090169943749475     # 10 (1 - cos(4 pi / 5))
ALPHA_GW = 0.878560
T_GW = -0.68918
ALPHA_2 = 0.884458


def c5_instance():
    """Unit-weight 5-cycle"""
    return WeightedInstance.cycle(5)


def random_instance(rng, size, density=0.6):
    """Nonnegative symmetric instance with about density of the edges present"""
    W = rng.uniform(0.0, 1.0, (size, size))
    W *= rng.uniform(size=(size, size)) < density
    W = np.triu(W, 1)
    return WeightedInstance(W + W.T)


def small_certificate(n=3, d=12, grid_size=201, rounds=3, seed=7):
    """Bound-loop certificate small enough for repeated verification"""
    from src.gapbound import bound_loop, default_grid
    result = bound_loop(n, d, default_grid(grid_size), ['triangle'], rounds, seed=seed,
                        restarts=2, threads=1)
    return result.certificate


def assert_exception_message_contains(exception, text):
    """Assert that exception message contains specific text"""
    message = str(exception)
    assert text.lower() in message.lower(), \
        f"Expected '{text}' in exception message, got: {message}"


def assert_file_exists(filepath):
    """Assert that a file exists"""
    assert os.path.exists(filepath), f"File not found: {filepath}"


class MockCallback:
    """Mock callback for testing progress updates"""

    def __init__(self):
        self.calls = []

    def __call__(self, *args, **kwargs):
        """Record callback invocation"""
        self.calls.append({
            'args': args,
            'kwargs': kwargs
        })

    def get_call_count(self):
        """Get number of times callback was called"""
        return len(self.calls)

    def get_last_call(self):
        """Get last callback invocation"""
        return self.calls[-1] if self.calls else None

    def was_called(self):
        """Check if callback was called at least once"""
        return len(self.calls) > 0

    def reset(self):
        """Reset callback history"""
        self.calls = []


TEST_GROUPS = {
    'support': ['test_config', 'test_exceptions', 'test_logger', 'test_retry_utils', 'test_streams'],
    'math': ['test_jacobi', 'test_cutpoly', 'test_kernels', 'test_lpcore'],
    'bound': ['test_gapbound', 'test_certificate'],
    'instances': ['test_instances'],
    'cli': ['test_cli'],
}

ALL_TEST_MODULES = [name for group in TEST_GROUPS.values() for name in group]


def load_suite(test_modules):
    """
    unittest suite for module names, with or without the test. prefix

    Returns:
        (suite, names that failed to import with their errors)
    """
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    failed = []
    for name in test_modules:
        name = name if name.startswith('test.') else f'test.{name}'
        try:
            module = importlib.import_module(name)
        except ImportError as e:
            failed.append((name, e))
            continue
        suite.addTests(loader.loadTestsFromModule(module))
    return suite, failed
