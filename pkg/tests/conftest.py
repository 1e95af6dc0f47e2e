from __future__ import annotations

import sqlite3
from pathlib import Path

import pytest

from semlayer.catalog import open_catalog

CLINIC_DDL = [
    """CREATE TABLE client (
    client_id INTEGER PRIMARY KEY,
    name TEXT,
    birth_date TEXT,
    district_id INTEGER,
    FOREIGN KEY (district_id) REFERENCES district (district_id)
)""",
    """CREATE TABLE account (
    account_id INTEGER PRIMARY KEY,
    client_id INTEGER,
    balance REAL,
    frequency TEXT,
    opened_on TEXT,
    FOREIGN KEY (client_id) REFERENCES client (client_id)
)""",
    """CREATE TABLE district (
    district_id INTEGER PRIMARY KEY,
    A2 TEXT,
    A3 TEXT,
    A4 INTEGER
)""",
]

CLINIC_ROWS = {
    "district": [
        (1, "Pilsen", "west", 70699),
        (2, "Brno", "south", 387570),
        (3, "Liberec", "north", 103300),
    ],
    "client": [
        (1, "Anna Novak", "1970-12-13", 1),
        (2, "Petr Svoboda", "1945-02-04", 2),
        (3, "Eva Dvorak", "1983-07-22", 2),
        (4, "Jan Cerny", "1991-01-30", 3),
    ],
    "account": [
        (1, 1, 1500.5, "monthly", "1995-03-24"),
        (2, 2, 250.0, "weekly", "1996-07-01"),
        (3, 3, 9000.25, "monthly", "1997-11-15"),
        (4, 4, 12.75, "after transaction", "2000-01-02"),
    ],
}

RACING_DDL = [
    """CREATE TABLE drivers (
    driver_id INTEGER PRIMARY KEY,
    code TEXT,
    forename TEXT,
    surname TEXT,
    nationality TEXT
)""",
    """CREATE TABLE races (
    race_id INTEGER PRIMARY KEY,
    season INTEGER,
    round INTEGER,
    circuit TEXT
)""",
    """CREATE TABLE results (
    result_id INTEGER PRIMARY KEY,
    race_id INTEGER,
    driver_id INTEGER,
    laps INTEGER,
    rank INTEGER,
    points REAL,
    FOREIGN KEY (race_id) REFERENCES races (race_id),
    FOREIGN KEY (driver_id) REFERENCES drivers (driver_id)
)""",
]

RACING_ROWS = {
    "drivers": [
        (1, "HAM", "Lewis", "Hamilton", "British"),
        (2, "VER", "Max", "Verstappen", "Dutch"),
        (3, "ALO", "Fernando", "Alonso", "Spanish"),
    ],
    "races": [
        (1, 2023, 1, "Sakhir"),
        (2, 2023, 2, "Jeddah"),
    ],
    "results": [
        (1, 1, 1, 57, 2, 18.0),
        (2, 1, 2, 57, 1, 25.0),
        (3, 1, 3, 56, 3, 15.0),
        (4, 2, 1, 50, 1, 25.0),
        (5, 2, 2, 50, 2, 18.0),
    ],
}

RETAIL_DDL = [
    """CREATE TABLE orders (
    order_id INTEGER PRIMARY KEY,
    customer TEXT,
    amount REAL,
    placed_on TEXT,
    status TEXT
)""",
    """CREATE TABLE items (
    item_id INTEGER PRIMARY KEY,
    order_id INTEGER,
    sku TEXT,
    qty INTEGER,
    unit_price REAL,
    FOREIGN KEY (order_id) REFERENCES orders (order_id)
)""",
]

RETAIL_ROWS = {
    "orders": [
        (1, "acme", 99.99, "2021-05-01", "shipped"),
        (2, "globex", 12.5, "2021-05-03", "pending"),
        (3, "acme", 250.0, "2021-06-11", "shipped"),
    ],
    "items": [
        (1, 1, "SKU-1", 2, 25.0),
        (2, 1, "SKU-2", 1, 49.99),
        (3, 2, "SKU-1", 1, 12.5),
        (4, 3, "SKU-3", 10, 25.0),
    ],
}

FIXTURE_SPECS = {
    "clinic": (CLINIC_DDL, CLINIC_ROWS),
    "racing": (RACING_DDL, RACING_ROWS),
    "retail": (RETAIL_DDL, RETAIL_ROWS),
}


def build_db(path: Path, ddl: list[str], rows: dict[str, list[tuple]]) -> Path:
    conn = sqlite3.connect(path)
    try:
        for stmt in ddl:
            conn.execute(stmt)
        for table, table_rows in rows.items():
            if not table_rows:
                continue
            marks = ", ".join("?" * len(table_rows[0]))
            conn.executemany(f"INSERT INTO {table} VALUES ({marks})", table_rows)
        conn.commit()
    finally:
        conn.close()
    return path


def build_fixture_suite(root: Path) -> dict[str, Path]:
    """Create the three fixture databases under root/<db_id>.sqlite."""
    root.mkdir(parents=True, exist_ok=True)
    paths = {}
    for db_id, (ddl, rows) in FIXTURE_SPECS.items():
        paths[db_id] = build_db(root / f"{db_id}.sqlite", ddl, rows)
    return paths


@pytest.fixture
def fixture_dbs(tmp_path):
    return build_fixture_suite(tmp_path / "data")


@pytest.fixture
def clinic_catalog(fixture_dbs):
    return open_catalog(fixture_dbs["clinic"])


@pytest.fixture
def racing_catalog(fixture_dbs):
    return open_catalog(fixture_dbs["racing"])


@pytest.fixture
def retail_catalog(fixture_dbs):
    return open_catalog(fixture_dbs["retail"])
