#!/usr/bin/env python3
"""
Database Module for LPR-ADER
Handles the SQLite run registry: runs, their error norms and convergence studies
"""

import sqlite3
import logging
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, Tuple

logger = logging.getLogger('LPR-ADER.Database')

SCHEMA = (
    '''
    CREATE TABLE IF NOT EXISTS runs (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        case_name TEXT NOT NULL,
        degree INTEGER NOT NULL CHECK (degree IN (1, 2, 3)),
        generator TEXT NOT NULL,
        h REAL NOT NULL,
        h_max REAL,
        cells INTEGER,
        dofs INTEGER,
        t_final REAL,
        steps INTEGER,
        wall_time REAL,
        max_troubled_fraction REAL DEFAULT 0,
        created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
    )
    ''',
    '''
    CREATE TABLE IF NOT EXISTS error_norms (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        run_id INTEGER NOT NULL,
        field TEXT NOT NULL,
        p INTEGER NOT NULL CHECK (p IN (1, 2)),
        value REAL NOT NULL,
        FOREIGN KEY (run_id) REFERENCES runs (id),
        UNIQUE(run_id, field, p)
    )
    ''',
    '''
    CREATE TABLE IF NOT EXISTS studies (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        case_name TEXT NOT NULL,
        degree INTEGER NOT NULL,
        levels INTEGER NOT NULL,
        field TEXT NOT NULL,
        order_l1 REAL,
        order_l2 REAL,
        created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
    )
    ''',
)


class DatabaseManager:
    """Run history store, one short transaction per record"""

    def __init__(self, db_path='lpr_ader_runs.db', timeout: float = 30.0):
        self.db_path = db_path
        self.timeout = timeout
        self.init_database()

    @contextmanager
    def transaction(self) -> Iterator[sqlite3.Connection]:
        """Connection committed on success, rolled back on error, closed in both cases"""
        conn = sqlite3.connect(self.db_path, timeout=self.timeout)
        try:
            conn.execute('PRAGMA foreign_keys=ON')
            with conn:
                yield conn
        finally:
            conn.close()

    def init_database(self):
        with self.transaction() as conn:
            # WAL lets a study read the registry while another process records a run
            conn.execute('PRAGMA journal_mode=WAL')
            for statement in SCHEMA:
                conn.execute(statement)
        logger.info(f"✅ Run registry ready at {self.db_path}")

    def record_run(self, case_name: str, degree: int, generator: str, h: float, h_max: float,
                   cells: int, dofs: int, t_final: float, steps: int, wall_time: float,
                   norms: Optional[Dict[Tuple[str, int], float]] = None,
                   max_troubled_fraction: float = 0.0) -> Optional[int]:
        """Insert a finished run and its error norms atomically, return the run id"""
        try:
            with self.transaction() as conn:
                cursor = conn.execute('''
                    INSERT INTO runs (case_name, degree, generator, h, h_max, cells, dofs, t_final, steps,
                                      wall_time, max_troubled_fraction)
                    VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                ''', (case_name, degree, generator, h, h_max, cells, dofs, t_final, steps, wall_time,
                      max_troubled_fraction))
                run_id = cursor.lastrowid
                conn.executemany('INSERT INTO error_norms (run_id, field, p, value) VALUES (?, ?, ?, ?)',
                                 [(run_id, field, p, value) for (field, p), value in (norms or {}).items()])
            return run_id
        except sqlite3.Error as e:
            logger.error(f"Error recording run of {case_name}: {e}")
            return None

    def record_study(self, case_name: str, degree: int, levels: int,
                     orders: Dict[Tuple[str, int], Optional[float]]) -> bool:
        """One row per field with the fitted L1 and L2 orders (NULL when exact)"""
        rows = [(case_name, degree, levels, field, orders.get((field, 1)), orders.get((field, 2)))
                for field in sorted({f for f, _ in orders})]
        try:
            with self.transaction() as conn:
                conn.executemany('''
                    INSERT INTO studies (case_name, degree, levels, field, order_l1, order_l2)
                    VALUES (?, ?, ?, ?, ?, ?)
                ''', rows)
            return True
        except sqlite3.Error as e:
            logger.error(f"Error recording study of {case_name}: {e}")
            return False

    def _select(self, query: str, args: Tuple = ()) -> List[Tuple]:
        try:
            with self.transaction() as conn:
                return conn.execute(query, args).fetchall()
        except sqlite3.Error as e:
            logger.error(f"Registry query failed: {e}")
            return []

    def get_runs(self, case_name: Optional[str] = None) -> List[Tuple]:
        """(id, case, degree, generator, h, h_max, steps) rows, newest last"""
        columns = 'SELECT id, case_name, degree, generator, h, h_max, steps FROM runs'
        if case_name is None:
            return self._select(f'{columns} ORDER BY id')
        return self._select(f'{columns} WHERE case_name = ? ORDER BY id', (case_name,))

    def get_error_norms(self, run_id: int) -> Dict[Tuple[str, int], float]:
        rows = self._select('SELECT field, p, value FROM error_norms WHERE run_id = ?', (run_id,))
        return {(field, p): value for field, p, value in rows}

    def get_studies(self, case_name: str) -> List[Tuple]:
        return self._select('SELECT degree, levels, field, order_l1, order_l2 FROM studies '
                            'WHERE case_name = ? ORDER BY id', (case_name,))
