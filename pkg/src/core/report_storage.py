import json
import logging
import os
import sqlite3
from datetime import datetime
from typing import Any, Dict, Optional

import pandas as pd

logger = logging.getLogger(__name__)


class ReportStorage:
    def __init__(self, db_path: str = "data/littleent.db"):
        directory = os.path.dirname(db_path)
        if directory:
            os.makedirs(directory, exist_ok=True)

        self.db_path = db_path
        self.conn = None
        self.initialize_database()

    def initialize_database(self) -> None:
        try:
            self.conn = sqlite3.connect(self.db_path)
            cursor = self.conn.cursor()

            cursor.execute('''
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                timestamp TEXT NOT NULL,
                command TEXT NOT NULL,
                seed INTEGER,
                config JSON,
                report JSON,
                exit_code INTEGER
            )
            ''')

            cursor.execute('''
            CREATE TABLE IF NOT EXISTS run_checks (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER NOT NULL REFERENCES runs(id),
                suite TEXT NOT NULL,
                total INTEGER,
                passed INTEGER
            )
            ''')

            self.conn.commit()
        except sqlite3.Error as e:
            logger.error(f"Database initialization error: {e}")

    def record_run(self, command: str, seed: Optional[int], config: Dict[str, Any],
                   report: Dict[str, Any], exit_code: int) -> Optional[int]:
        if not self.conn:
            self.initialize_database()

        try:
            cursor = self.conn.cursor()
            cursor.execute('''
            INSERT INTO runs (timestamp, command, seed, config, report, exit_code)
            VALUES (?, ?, ?, ?, ?, ?)
            ''', (
                datetime.now().isoformat(),
                command,
                seed,
                json.dumps(config, default=str),
                json.dumps(report, default=str),
                exit_code,
            ))
            run_id = cursor.lastrowid

            for suite in report.get("suites", []):
                cursor.execute('''
                INSERT INTO run_checks (run_id, suite, total, passed)
                VALUES (?, ?, ?, ?)
                ''', (run_id, suite.get("name", ""), suite.get("total", 0), suite.get("passed", 0)))

            self.conn.commit()
            return run_id
        except sqlite3.Error as e:
            logger.error(f"Error storing run: {e}")
            return None

    def get_run_history(self, command: Optional[str] = None, limit: int = 100) -> pd.DataFrame:
        if not self.conn:
            self.initialize_database()

        try:
            query = "SELECT id, timestamp, command, seed, exit_code FROM runs"
            params = []

            if command is not None:
                query += " WHERE command = ?"
                params.append(command)

            query += " ORDER BY id DESC LIMIT ?"
            params.append(limit)

            df = pd.read_sql_query(query, self.conn, params=params)
            df['timestamp'] = pd.to_datetime(df['timestamp'])
            return df
        except (sqlite3.Error, pd.errors.DatabaseError) as e:
            logger.error(f"Error retrieving run history: {e}")
            return pd.DataFrame()

    def get_suite_history(self, suite: Optional[str] = None) -> pd.DataFrame:
        if not self.conn:
            self.initialize_database()

        try:
            query = """
            SELECT r.id AS run_id, r.timestamp, r.seed, c.suite, c.total, c.passed
            FROM run_checks c JOIN runs r ON r.id = c.run_id
            """
            params = []

            if suite is not None:
                query += " WHERE c.suite = ?"
                params.append(suite)

            query += " ORDER BY r.id"

            df = pd.read_sql_query(query, self.conn, params=params)
            df['timestamp'] = pd.to_datetime(df['timestamp'])
            return df
        except (sqlite3.Error, pd.errors.DatabaseError) as e:
            logger.error(f"Error retrieving suite history: {e}")
            return pd.DataFrame()

    def get_report(self, run_id: int) -> Optional[Dict[str, Any]]:
        if not self.conn:
            self.initialize_database()

        try:
            cursor = self.conn.cursor()
            cursor.execute("SELECT report FROM runs WHERE id = ?", (run_id,))
            row = cursor.fetchone()
            return json.loads(row[0]) if row else None
        except sqlite3.Error as e:
            logger.error(f"Error retrieving report {run_id}: {e}")
            return None

    def close(self) -> None:
        if self.conn:
            self.conn.close()
            self.conn = None
