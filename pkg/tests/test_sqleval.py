from __future__ import annotations

import json

import pytest

from semlayer.catalog import ColumnRef, open_catalog
from semlayer.metastore import DifficultyLevel
from semlayer.sqleval import (
    ExecTimeout,
    Question,
    ScenarioConfig,
    ScenarioKind,
    SqlSyntaxError,
    Status,
    WriteAttempted,
    build_sql_prompt,
    clean_predicted_sql,
    execute,
    load_questions,
    rows_equal,
    run_eval,
    schema_with_descriptions,
)

from mockutil import seed_sql_mock
from questions import FIXTURE_QUESTIONS


@pytest.fixture
def catalogs(fixture_dbs):
    return {db_id: open_catalog(path) for db_id, path in fixture_dbs.items()}


def gold_descriptions(catalogs):
    return {
        (ref.db_id.lower(), ref.table.lower(), ref.column.lower()):
            f"The {ref.column} of the {ref.table}."
        for catalog in catalogs.values()
        for ref in catalog.all_column_refs()
    }


# -- prompt construction ------------------------------------------------


def test_prompt_no_descriptions_has_no_comments(catalogs):
    q = FIXTURE_QUESTIONS[0]
    prompt = build_sql_prompt(
        q, catalogs["clinic"], ScenarioConfig(ScenarioKind.NO_DESCRIPTIONS)
    )
    schema_part = prompt.split("Using valid SQL")[0]
    assert "--" not in schema_part
    assert "Question: How many clients are there?" in prompt


def test_prompt_gold_scenario_annotates_every_column(catalogs):
    catalog = catalogs["clinic"]
    descriptions = gold_descriptions(catalogs)
    schema = schema_with_descriptions(catalog, descriptions)
    for table in catalog.tables:
        for column in table.columns:
            assert f"-- The {column.name} of the {table.name}." in schema
    lines = [l for l in schema.split("\n") if " -- " in l]
    total_columns = sum(len(t.columns) for t in catalog.tables)
    assert len(lines) == total_columns


def test_prompt_missing_descriptions_rendered_absent(catalogs):
    catalog = catalogs["clinic"]
    descriptions = {
        ("clinic", "client", "name"): "The full name of the client.",
    }
    schema = schema_with_descriptions(catalog, descriptions)
    assert schema.count(" -- ") == 1
    assert "name TEXT, -- The full name of the client." in schema


def test_prompt_ends_with_requirement_line(catalogs):
    q = FIXTURE_QUESTIONS[0]
    prompt = build_sql_prompt(
        q, catalogs["clinic"], ScenarioConfig(ScenarioKind.NO_DESCRIPTIONS)
    )
    assert prompt.rstrip("\n").endswith("ONLY return the SQL query, nothing else.")


# -- execution ----------------------------------------------------------


def test_execute_select_one(catalogs):
    assert execute("SELECT 1", catalogs["clinic"]) == [(1,)]


def test_execute_syntax_error(catalogs):
    with pytest.raises(SqlSyntaxError):
        execute("SELEC 1", catalogs["clinic"])


def test_execute_write_rejected(catalogs):
    with pytest.raises(WriteAttempted):
        execute("DELETE FROM client", catalogs["clinic"])
    with pytest.raises(WriteAttempted):
        execute("DROP TABLE client", catalogs["clinic"])


def test_execute_timeout(catalogs):
    endless = (
        "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) "
        "SELECT COUNT(*) FROM c"
    )
    with pytest.raises(ExecTimeout):
        execute(endless, catalogs["clinic"], timeout=0.1)


def test_execute_runtime_error(catalogs):
    with pytest.raises(Exception) as err:
        execute("SELECT no_such_column FROM client", catalogs["clinic"])
    assert "no such column" in str(err.value)


# -- row comparison -----------------------------------------------------


def test_rows_equal_order_insensitive():
    assert rows_equal([(1,), (2,)], [(2,), (1,)])


def test_rows_equal_real_tolerance():
    assert rows_equal([(1.0,)], [(1.0000000001,)])
    assert not rows_equal([(1.0,)], [(1.1,)])


def test_rows_equal_duplicates_collapsed():
    assert rows_equal([(1,), (1,)], [(1,)])


def test_rows_equal_null_semantics():
    assert rows_equal([(None,)], [(None,)])
    assert not rows_equal([(None,)], [(0,)])
    assert not rows_equal([(None,)], [("",)])


def test_rows_equal_text_exact():
    assert not rows_equal([("a",)], [("A",)])
    assert not rows_equal([("1",)], [(1,)])


def test_rows_equal_column_order_significant():
    assert not rows_equal([(1, 2)], [(2, 1)])


def test_rows_equal_symmetric_reflexive(catalogs):
    grids = [
        [(1, "a"), (2, "b")],
        [(None,), (1.5,)],
        [],
        [(1,), (1,), (2,)],
    ]
    for g in grids:
        assert rows_equal(g, g)
    for g1 in grids:
        for g2 in grids:
            assert rows_equal(g1, g2) == rows_equal(g2, g1)


# -- full runs ----------------------------------------------------------


def test_gold_echo_run_is_perfect(catalogs, tmp_path):
    scenario = ScenarioConfig(ScenarioKind.NO_DESCRIPTIONS)
    spec = seed_sql_mock(FIXTURE_QUESTIONS, catalogs, scenario, tmp_path / "mock")
    run = run_eval(FIXTURE_QUESTIONS, scenario, spec, catalogs)
    assert run.n == 25
    assert run.accuracy == 1.0
    assert all(o.status is Status.CORRECT for o in run.outcomes)


def test_perturbation_mock_accuracy_fraction(catalogs, tmp_path):
    scenario = ScenarioConfig(ScenarioKind.NO_DESCRIPTIONS)
    corrupted = {2, 5, 11, 19, 24}  # hand-picked subset
    responses = {qid: "SELECT NULL" for qid in corrupted}
    spec = seed_sql_mock(
        FIXTURE_QUESTIONS, catalogs, scenario, tmp_path / "mock", responses=responses
    )
    run = run_eval(FIXTURE_QUESTIONS, scenario, spec, catalogs)
    assert run.correct == 25 - len(corrupted)
    assert run.accuracy == (25 - len(corrupted)) / 25
    wrong = {o.question_id for o in run.outcomes if o.status is not Status.CORRECT}
    assert wrong == corrupted


def test_reordered_rows_still_correct(catalogs, tmp_path):
    scenario = ScenarioConfig(ScenarioKind.NO_DESCRIPTIONS)
    q = Question(2, "clinic", "List all client names alphabetically.",
                 "SELECT name FROM client ORDER BY name")
    responses = {2: "SELECT name FROM client ORDER BY name DESC"}
    spec = seed_sql_mock([q], catalogs, scenario, tmp_path / "mock", responses=responses)
    run = run_eval([q], scenario, spec, catalogs)
    assert run.outcomes[0].status is Status.CORRECT


def test_invalid_prediction_counts_wrong(catalogs, tmp_path):
    scenario = ScenarioConfig(ScenarioKind.NO_DESCRIPTIONS)
    q = FIXTURE_QUESTIONS[0]
    responses = {q.question_id: "SELEC COUNT(*) FROM client"}
    spec = seed_sql_mock([q], catalogs, scenario, tmp_path / "mock", responses=responses)
    run = run_eval([q], scenario, spec, catalogs)
    assert run.outcomes[0].status is Status.PRED_EXEC_ERROR
    assert run.accuracy == 0.0


def test_gold_exec_error_surfaced(catalogs, tmp_path):
    scenario = ScenarioConfig(ScenarioKind.NO_DESCRIPTIONS)
    broken = Question(99, "clinic", "Broken gold.", "SELECT missing FROM client")
    spec = seed_sql_mock([broken], catalogs, scenario, tmp_path / "mock")
    run = run_eval([broken], scenario, spec, catalogs)
    assert run.outcomes[0].status is Status.GOLD_EXEC_ERROR
    assert run.gold_errors
    assert run.accuracy == 0.0


def test_accuracy_invariant_under_reordering(catalogs, tmp_path):
    scenario = ScenarioConfig(ScenarioKind.NO_DESCRIPTIONS)
    corrupted = {1, 13}
    responses = {qid: "SELECT NULL" for qid in corrupted}
    spec = seed_sql_mock(
        FIXTURE_QUESTIONS, catalogs, scenario, tmp_path / "mock", responses=responses
    )
    forward = run_eval(FIXTURE_QUESTIONS, scenario, spec, catalogs)
    backward = run_eval(list(reversed(FIXTURE_QUESTIONS)), scenario, spec, catalogs)
    assert forward.accuracy == backward.accuracy


def test_gold_scenario_prompts_differ_and_still_perfect(catalogs, tmp_path):
    scenario = ScenarioConfig(ScenarioKind.GOLD)
    descriptions = gold_descriptions(catalogs)
    spec = seed_sql_mock(
        FIXTURE_QUESTIONS, catalogs, scenario, tmp_path / "mock",
        descriptions=descriptions,
    )
    run = run_eval(
        FIXTURE_QUESTIONS, scenario, spec, catalogs, descriptions=descriptions
    )
    assert run.accuracy == 1.0
    assert run.scenario == "gold"


def test_difficulty_slices(catalogs, tmp_path):
    scenario = ScenarioConfig(ScenarioKind.NO_DESCRIPTIONS)
    questions = FIXTURE_QUESTIONS[:3]
    difficulties = {
        ("clinic", "client", "name"): DifficultyLevel.EASY,
        ("clinic", "district", "a2"): DifficultyLevel.VERY_HARD,
        ("clinic", "district", "a4"): DifficultyLevel.VERY_HARD,
    }
    spec = seed_sql_mock(questions, catalogs, scenario, tmp_path / "mock")
    run = run_eval(
        questions, scenario, spec, catalogs, difficulties=difficulties
    )
    assert run.by_difficulty["Very Hard"]["n"] == 1  # question 3 references A2
    assert run.by_difficulty["Easy"]["n"] == 1  # question 2 references name only
    assert run.by_difficulty["Unrated"]["n"] == 1  # question 1 references no rated col
    assert run.by_difficulty["Very Hard"]["accuracy"] == 1.0


def test_run_report_json_and_csv(catalogs, tmp_path):
    scenario = ScenarioConfig(ScenarioKind.NO_DESCRIPTIONS)
    spec = seed_sql_mock(FIXTURE_QUESTIONS, catalogs, scenario, tmp_path / "mock")
    run = run_eval(FIXTURE_QUESTIONS, scenario, spec, catalogs)
    payload = json.loads(run.to_json())
    assert payload["accuracy"] == 1.0
    assert len(payload["outcomes"]) == 25
    ids = [o["question_id"] for o in payload["outcomes"]]
    assert ids == sorted(ids)
    out = tmp_path / "summary.csv"
    run.write_summary_csv(out)
    assert "scenario,slice,n,correct,accuracy" in out.read_text()


def test_clean_predicted_sql_variants():
    assert clean_predicted_sql("```sql\nSELECT 1\n```") == "SELECT 1"
    assert clean_predicted_sql("SQL: SELECT 1") == "SELECT 1"
    assert clean_predicted_sql("  SELECT 1;  ") == "SELECT 1"
    assert clean_predicted_sql('"SELECT 1"') == "SELECT 1"


def test_load_questions_bird_field_names(tmp_path):
    payload = [
        {
            "question_id": 7,
            "db_id": "clinic",
            "question": "How many clients?",
            "SQL": "SELECT COUNT(*) FROM client",
            "evidence": "ignored entirely",
        }
    ]
    path = tmp_path / "dev.json"
    path.write_text(json.dumps(payload))
    (q,) = load_questions(path)
    assert q.question_id == 7
    assert q.gold_sql == "SELECT COUNT(*) FROM client"
    assert q.db_id == "clinic"
