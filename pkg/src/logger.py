"""
Logger Module
Logging setup and a JSON history of CLI runs
"""

import os
import csv
import json
import logging
from logging.handlers import RotatingFileHandler
from datetime import datetime
from . import config


def setup_logging(level=None, log_file=None):
    """
    Configure the root logger for GapWiz

    Args:
        level: Level name or number (defaults to config.DEFAULT_LOG_LEVEL)
        log_file: Optional path for a rotating log file

    Returns:
        The package logger
    """
    if level is None:
        level = config.DEFAULT_LOG_LEVEL
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.WARNING)

    root = logging.getLogger('src')
    root.setLevel(level)
    for handler in list(root.handlers):
        root.removeHandler(handler)

    formatter = logging.Formatter(config.LOG_FORMAT, datefmt=config.LOG_DATE_FORMAT)

    stream = logging.StreamHandler()
    stream.setFormatter(formatter)
    root.addHandler(stream)

    if log_file:
        os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=config.LOG_MAX_SIZE,
            backupCount=config.LOG_BACKUP_COUNT,
            encoding='utf-8'
        )
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

    root.propagate = False
    return root


class RunLogger:
    """Log CLI runs and maintain history"""

    def __init__(self, log_dir=None):
        """Initialize with a history directory"""
        if log_dir is None:
            config.ensure_config_dir()
            log_dir = str(config.USER_CONFIG_DIR)
        else:
            os.makedirs(log_dir, exist_ok=True)

        self.log_dir = log_dir
        self.log_file = os.path.join(log_dir, config.HISTORY_FILE.name)
        self._log = logging.getLogger(__name__)

        if not os.path.exists(self.log_file):
            self._init_log_file()

    def _init_log_file(self):
        """Initialize empty history file"""
        with open(self.log_file, 'w') as f:
            json.dump([], f)

    def log_run(self, command, success, message, n=None, seed=None, value=None):
        """Append a run to the history"""
        try:
            history = self.get_history()

            entry = {
                'timestamp': datetime.now().strftime('%Y-%m-%d %H:%M:%S'),
                'command': command,
                'n': n,
                'seed': seed,
                'value': value,
                'success': bool(success),
                'message': message
            }

            history.append(entry)
            if len(history) > config.HISTORY_MAX_ENTRIES:
                history = history[-config.HISTORY_MAX_ENTRIES:]

            with open(self.log_file, 'w') as f:
                json.dump(history, f, indent=2)

            return True
        except (OSError, TypeError, ValueError) as e:
            self._log.warning("Error logging run: %s", e)
            return False

    def get_history(self):
        """Get run history"""
        try:
            if os.path.exists(self.log_file):
                with open(self.log_file, 'r') as f:
                    return json.load(f)
            return []
        except (OSError, ValueError) as e:
            self._log.warning("Error reading history: %s", e)
            return []

    def clear_history(self):
        """Clear run history"""
        try:
            self._init_log_file()
            return True
        except OSError as e:
            self._log.warning("Error clearing history: %s", e)
            return False

    def get_successful_runs(self):
        """Get only successful runs"""
        return [entry for entry in self.get_history() if entry.get('success', False)]

    def get_failed_runs(self):
        """Get only failed runs"""
        return [entry for entry in self.get_history() if not entry.get('success', False)]

    def get_stats(self):
        """Get run statistics"""
        history = self.get_history()
        total = len(history)
        successful = len([e for e in history if e.get('success', False)])
        failed = total - successful

        by_command = {}
        for entry in history:
            cmd = entry.get('command', '')
            by_command[cmd] = by_command.get(cmd, 0) + 1

        return {
            'total': total,
            'successful': successful,
            'failed': failed,
            'success_rate': (successful / total * 100) if total > 0 else 0,
            'by_command': by_command
        }

    def export_history(self, export_path, format='json'):
        """Export history to a file in JSON or CSV format"""
        try:
            history = self.get_history()

            if format.lower() == 'csv':
                with open(export_path, 'w', newline='', encoding='utf-8') as f:
                    writer = csv.DictWriter(f, fieldnames=config.HISTORY_CSV_FIELDS)
                    writer.writeheader()
                    for entry in history:
                        row = {key: entry.get(key, '') for key in config.HISTORY_CSV_FIELDS}
                        row['success'] = 'Success' if entry.get('success') else 'Failed'
                        writer.writerow(row)
            else:
                export_data = {
                    'export_date': datetime.now().strftime('%Y-%m-%d %H:%M:%S'),
                    'total_entries': len(history),
                    'entries': history
                }
                with open(export_path, 'w', encoding='utf-8') as f:
                    json.dump(export_data, f, indent=2)

            return True
        except OSError as e:
            self._log.warning("Error exporting history: %s", e)
            return False
