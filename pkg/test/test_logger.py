"""
Unit Tests for Logger Module
Tests logging setup and the run history
"""

import unittest
import sys
import os
import csv
import json
import logging
from pathlib import Path
from unittest import mock

# Add parent directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src import config
from src.logger import RunLogger, setup_logging
from test.test_utils import TestEnvironment


class TestSetupLogging(unittest.TestCase):
    """Test setup_logging()"""

    def setUp(self):
        self.env = TestEnvironment()
        self.env.setup()

    def tearDown(self):
        logging.getLogger('src').handlers.clear()
        self.env.teardown()

    def test_level_by_name(self):
        root = setup_logging('debug')
        self.assertEqual(root.level, logging.DEBUG)
        self.assertEqual(len(root.handlers), 1)

    def test_log_file(self):
        path = self.env.path('logs/gapwiz.log')
        root = setup_logging('INFO', path)
        logging.getLogger('src.gapbound').info("round 1")
        for handler in root.handlers:
            handler.flush()
        with open(path, encoding='utf-8') as f:
            self.assertIn("round 1", f.read())

    def test_repeated_setup_replaces_handlers(self):
        setup_logging()
        root = setup_logging()
        self.assertEqual(len(root.handlers), 1)
        self.assertEqual(root.level, getattr(logging, config.DEFAULT_LOG_LEVEL))


class TestRunLogger(unittest.TestCase):
    """Test RunLogger history"""

    def setUp(self):
        self.env = TestEnvironment()
        self.runs = RunLogger(self.env.setup())

    def tearDown(self):
        self.env.teardown()

    def test_empty_history(self):
        self.assertEqual(self.runs.get_history(), [])

    def test_default_directory_is_created(self):
        home = Path(self.env.path('gapwiz-home'))
        with mock.patch.object(config, 'USER_CONFIG_DIR', home):
            runs = RunLogger()
        self.assertTrue(home.is_dir())
        self.assertEqual(runs.log_dir, str(home))
        self.assertEqual(runs.get_history(), [])

    def test_log_run(self):
        self.assertTrue(self.runs.log_run('bound', True, 'ok', n=4, seed=1, value=0.8817))
        entry = self.runs.get_history()[0]
        self.assertEqual(entry['command'], 'bound')
        self.assertEqual(entry['seed'], 1)
        self.assertTrue(entry['success'])

    def test_filters_and_stats(self):
        self.runs.log_run('bound', True, 'ok')
        self.runs.log_run('verify', False, 'step 4')
        self.runs.log_run('verify', True, 'ok')
        self.assertEqual(len(self.runs.get_successful_runs()), 2)
        self.assertEqual(len(self.runs.get_failed_runs()), 1)
        stats = self.runs.get_stats()
        self.assertEqual(stats['total'], 3)
        self.assertEqual(stats['by_command']['verify'], 2)

    def test_clear_history(self):
        self.runs.log_run('constants', True, 'ok')
        self.assertTrue(self.runs.clear_history())
        self.assertEqual(self.runs.get_history(), [])

    def test_export_json(self):
        self.runs.log_run('maxcut', True, 'ok', value=16.0)
        path = self.env.path('history.json')
        self.assertTrue(self.runs.export_history(path, 'json'))
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
        self.assertEqual(data['total_entries'], 1)

    def test_export_csv(self):
        self.runs.log_run('maxcut', False, 'too large')
        path = self.env.path('history.csv')
        self.assertTrue(self.runs.export_history(path, 'csv'))
        with open(path, newline='', encoding='utf-8') as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(rows[0]['success'], 'Failed')
        self.assertEqual(list(rows[0].keys()), config.HISTORY_CSV_FIELDS)


if __name__ == '__main__':
    unittest.main()
