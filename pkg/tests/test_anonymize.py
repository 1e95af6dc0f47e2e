from __future__ import annotations

import json
import sqlite3

import pytest

from semlayer.anonymize import (
    RenameConflict,
    UnresolvableIdentifier,
    anonymize_database,
    apply_to_database,
    build_rename_map,
    rewrite_query,
)
from semlayer.catalog import open_catalog
from semlayer.sqltext import UnsupportedSql

from conftest import build_db

# queries covering joins, aggregates, subqueries, ORDER BY, aliases
CLINIC_QUERIES = [
    "SELECT name FROM client",
    "SELECT 'name' FROM client",
    "SELECT name, birth_date FROM client ORDER BY birth_date",
    "SELECT name, balance FROM client JOIN account ON client.client_id = account.client_id WHERE frequency = 'monthly'",
    "SELECT c.name, a.balance FROM client AS c JOIN account a ON c.client_id = a.client_id ORDER BY a.balance DESC",
    "SELECT district_id, COUNT(*) AS cnt FROM client GROUP BY district_id HAVING COUNT(*) > 1 ORDER BY cnt DESC",
    "SELECT name FROM client WHERE client_id IN (SELECT client_id FROM account WHERE balance > 100)",
    "SELECT t.name FROM (SELECT name FROM client) AS t",
    "SELECT t.n FROM (SELECT name AS n FROM client) t ORDER BY t.n",
    "SELECT name FROM client c WHERE (SELECT COUNT(*) FROM account a WHERE a.client_id = c.client_id) > 0",
    "SELECT * FROM district ORDER BY district_id",
    "SELECT name FROM client UNION SELECT A2 FROM district",
    "SELECT CASE WHEN balance > 100 THEN 'high' ELSE 'low' END FROM account ORDER BY account_id",
    "SELECT name FROM client WHERE name LIKE '%a%'",
    "WITH rich AS (SELECT client_id, balance FROM account WHERE balance > 100) "
    "SELECT c.name, r.balance FROM client c JOIN rich r ON c.client_id = r.client_id",
    "SELECT a.name, b.name FROM client a, client b WHERE a.district_id = b.district_id AND a.client_id < b.client_id",
    "SELECT DISTINCT frequency FROM account",
    "SELECT name FROM client WHERE EXISTS (SELECT 1 FROM account WHERE account.client_id = client.client_id AND balance > 1000)",
    "SELECT AVG(balance), MAX(balance), MIN(balance) FROM account",
    "SELECT d.A2, COUNT(c.client_id) FROM district d LEFT JOIN client c ON c.district_id = d.district_id GROUP BY d.A2 ORDER BY 2 DESC, d.A2",
    "SELECT name FROM client WHERE district_id = (SELECT district_id FROM district WHERE A2 = 'Brno')",
    "SELECT sub.total FROM (SELECT client_id, SUM(balance) AS total FROM account GROUP BY client_id) sub WHERE sub.total > 50 ORDER BY sub.total",
    "SELECT COUNT(*) FROM (SELECT DISTINCT district_id FROM client)",
    "SELECT name || ' / ' || frequency FROM client JOIN account ON client.client_id = account.client_id ORDER BY account_id LIMIT 2",
    "SELECT balance FROM account ORDER BY balance LIMIT 2 OFFSET 1",
]

RACING_QUERIES = [
    "SELECT d.surname, r.points FROM drivers d JOIN results r ON d.driver_id = r.driver_id WHERE r.rank = 1 ORDER BY r.points DESC",
    "SELECT surname FROM drivers WHERE driver_id NOT IN (SELECT driver_id FROM results WHERE rank = 1)",
    "SELECT ra.circuit, MAX(re.points) FROM races ra JOIN results re ON ra.race_id = re.race_id GROUP BY ra.circuit",
    "SELECT nationality, COUNT(*) FROM drivers GROUP BY nationality ORDER BY nationality",
]


def run_sql(path, sql):
    conn = sqlite3.connect(path)
    try:
        return conn.execute(sql).fetchall()
    finally:
        conn.close()


@pytest.fixture
def clinic_anon(clinic_catalog, tmp_path):
    anon_catalog, rename_map, out_path = anonymize_database(
        clinic_catalog, out_dir=tmp_path / "anon"
    )
    return clinic_catalog, anon_catalog, rename_map


@pytest.fixture
def racing_anon(racing_catalog, tmp_path):
    anon_catalog, rename_map, out_path = anonymize_database(
        racing_catalog, out_dir=tmp_path / "anon"
    )
    return racing_catalog, anon_catalog, rename_map


def test_build_rename_map_positional(clinic_catalog):
    m = build_rename_map(clinic_catalog)
    assert m.target("client", "client_id") == "A1"
    assert m.target("client", "name") == "A2"
    assert m.target("client", "birth_date") == "A3"
    assert m.target("client", "district_id") == "A4"
    # per-table restart
    assert m.target("account", "account_id") == "A1"
    assert m.target("district", "district_id") == "A1"
    # already A-styled columns at their own position stay themselves
    assert m.target("district", "A2") == "A2"
    assert m.target("district", "A4") == "A4"


def test_rename_map_injective_on_all_fixtures(fixture_dbs):
    for path in fixture_dbs.values():
        m = build_rename_map(open_catalog(path))
        assert m.is_injective()


def test_rename_map_collision_suffix(tmp_path):
    path = build_db(
        tmp_path / "tricky.sqlite",
        ["CREATE TABLE t (foo TEXT, A1 TEXT)"],
        {},
    )
    m = build_rename_map(open_catalog(path))
    assert m.target("t", "foo") == "A1_x"
    assert m.target("t", "A1") == "A2"
    assert m.is_injective()


def test_apply_to_database_renames_only_names(clinic_anon, tmp_path):
    original, anon, m = clinic_anon
    assert anon.table_names() == original.table_names()
    for table in anon.tables:
        for j, col in enumerate(table.columns, start=1):
            assert col.name.startswith(f"A{j}")
    # row data preserved
    for table in original.tables:
        orig_rows = run_sql(original.path, f"SELECT * FROM {table.name}")
        anon_rows = run_sql(anon.path, f"SELECT * FROM {table.name}")
        assert orig_rows == anon_rows
    # original untouched
    assert open_catalog(original.path).find_table("client").column_names() == [
        "client_id",
        "name",
        "birth_date",
        "district_id",
    ]


def test_apply_preserves_types_and_keys(clinic_anon):
    original, anon, m = clinic_anon
    for orig_table in original.tables:
        anon_table = anon.find_table(orig_table.name)
        for orig_col, anon_col in zip(orig_table.columns, anon_table.columns):
            assert orig_col.declared_type == anon_col.declared_type
            assert orig_col.is_primary_key == anon_col.is_primary_key


def test_foreign_keys_map_through_renaming(clinic_anon):
    original, anon, m = clinic_anon
    # introspection diff oracle: every original FK must reappear renamed
    for orig_table in original.tables:
        anon_table = anon.find_table(orig_table.name)
        expected = {
            (
                m.target(orig_table.name, fk.column) or fk.column,
                fk.ref_table.lower(),
                (m.target(fk.ref_table, fk.ref_column) or fk.ref_column).lower(),
            )
            for fk in orig_table.foreign_keys
        }
        actual = {
            (fk.column, fk.ref_table.lower(), fk.ref_column.lower())
            for fk in anon_table.foreign_keys
        }
        assert actual == expected


def test_anonymized_map_is_identity(clinic_anon):
    _, anon, _ = clinic_anon
    m2 = build_rename_map(anon)
    for table in anon.tables:
        for col in table.columns:
            assert m2.target(table.name, col.name) == col.name


def test_manifest_written(clinic_catalog, tmp_path):
    _, m, out_path = anonymize_database(clinic_catalog, out_dir=tmp_path / "anon")
    manifest_path = out_path.parent / "clinic.anon.manifest.json"
    manifest = json.loads(manifest_path.read_text())
    assert manifest["scheme"] == "per-table-positional"
    assert manifest["tables"]["client"]["name"] == "A2"


def test_rewrite_simple_select(clinic_anon):
    original, anon, m = clinic_anon
    assert rewrite_query("SELECT name FROM client", m, original) == "SELECT A2 FROM client"


def test_rewrite_preserves_string_literals(clinic_anon):
    original, _, m = clinic_anon
    assert (
        rewrite_query("SELECT 'name' FROM client", m, original)
        == "SELECT 'name' FROM client"
    )


def test_rewrite_qualifies_ambiguous_references(clinic_anon):
    original, anon, m = clinic_anon
    sql = (
        "SELECT name, balance FROM client JOIN account"
        " ON client.client_id = account.client_id"
    )
    rewritten = rewrite_query(sql, m, original)
    assert "client.A2" in rewritten
    assert "account.A3" in rewritten
    run_sql(anon.path, rewritten)  # executes without ambiguity errors


@pytest.mark.parametrize("sql", CLINIC_QUERIES)
def test_execution_equivalence_clinic(clinic_anon, sql):
    original, anon, m = clinic_anon
    rewritten = rewrite_query(sql, m, original)
    assert run_sql(original.path, sql) == run_sql(anon.path, rewritten)


@pytest.mark.parametrize("sql", RACING_QUERIES)
def test_execution_equivalence_racing(racing_anon, sql):
    original, anon, m = racing_anon
    rewritten = rewrite_query(sql, m, original)
    assert run_sql(original.path, sql) == run_sql(anon.path, rewritten)


@pytest.mark.parametrize("sql", CLINIC_QUERIES)
def test_rewrite_idempotent_once_anonymized(clinic_anon, sql):
    original, _, m = clinic_anon
    once = rewrite_query(sql, m, original)
    twice = rewrite_query(once, m, original)
    assert twice == once


def test_unresolvable_identifier_reported(clinic_anon):
    original, _, m = clinic_anon
    with pytest.raises(UnresolvableIdentifier) as err:
        rewrite_query("SELECT ghost_column FROM client", m, original)
    assert "ghost_column" in str(err.value)
    assert err.value.pos == 7


def test_using_clause_refused(clinic_anon):
    original, _, m = clinic_anon
    with pytest.raises(UnsupportedSql):
        rewrite_query(
            "SELECT name FROM client JOIN account USING (client_id)", m, original
        )


def test_write_statement_refused(clinic_anon):
    original, _, m = clinic_anon
    with pytest.raises(UnsupportedSql):
        rewrite_query("DELETE FROM client", m, original)
