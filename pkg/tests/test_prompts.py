from __future__ import annotations

from pathlib import Path

import pytest

from semlayer.prompts import (
    MissingVariable,
    PromptContext,
    TemplateKind,
    UnknownPlaceholder,
    render,
    required_variables,
    template_text,
)

GOLDEN_DIR = Path(__file__).parent / "golden"

FIXTURE_SCHEMA = (
    "CREATE TABLE client (\n"
    "    client_id INTEGER PRIMARY KEY,\n"
    "    name TEXT,\n"
    "    birth_date TEXT\n"
    ")"
)

GENERATE_CTX = PromptContext(
    database_schema=FIXTURE_SCHEMA,
    table="client",
    column="birth_date",
    example_data=(
        "client_id | name | birth_date\n"
        "1 | Anna Novak | 1970-12-13\n"
        "2 | Petr Svoboda | 1945-02-04"
    ),
    unique_data="1945-02-04, 1970-12-13",
)

IMPROVE_CTX = PromptContext(
    database_schema=FIXTURE_SCHEMA,
    table="client",
    column="birth_date",
    column_name="birth date",
    column_description="date of birth",
    example_data=GENERATE_CTX.example_data,
    unique_data=GENERATE_CTX.unique_data,
)

SQL_CTX = PromptContext(
    database_schema=FIXTURE_SCHEMA,
    question="How many clients?",
)

JUDGE_CTX = PromptContext(
    response="The birth date of the client.",
    gold_answer="The birth date of the client.",
)

CASES = [
    (TemplateKind.GENERATE_DESCRIPTION, GENERATE_CTX, "generate.golden.txt"),
    (TemplateKind.IMPROVE_DESCRIPTION, IMPROVE_CTX, "improve.golden.txt"),
    (TemplateKind.ZERO_SHOT_TEXT2SQL, SQL_CTX, "zero_shot.golden.txt"),
    (TemplateKind.JUDGE_DESCRIPTION, JUDGE_CTX, "judge.golden.txt"),
]


@pytest.mark.parametrize("kind,ctx,golden", CASES, ids=[k.value for k, _, _ in CASES])
def test_render_matches_golden_snapshot(kind, ctx, golden):
    rendered = render(kind, ctx)
    expected = (GOLDEN_DIR / golden).read_text(encoding="utf-8")
    assert rendered == expected


@pytest.mark.parametrize("kind,ctx,golden", CASES, ids=[k.value for k, _, _ in CASES])
def test_render_is_pure(kind, ctx, golden):
    assert render(kind, ctx) == render(kind, ctx)


def test_no_unresolved_placeholders():
    for kind, ctx, _ in CASES:
        rendered = render(kind, ctx)
        assert "{database_schema}" not in rendered
        assert "{table}" not in rendered
        assert "{question}" not in rendered


def test_instruction_strings_present_verbatim():
    gen = template_text(TemplateKind.GENERATE_DESCRIPTION)
    improve = template_text(TemplateKind.IMPROVE_DESCRIPTION)
    sql = template_text(TemplateKind.ZERO_SHOT_TEXT2SQL)
    judge = template_text(TemplateKind.JUDGE_DESCRIPTION)
    for text in (gen, improve):
        assert "DO NOT return anything else except the generated column description" in text
        assert "Not enough information to make a \nvalid prediction" in text.replace("\r", "") or (
            "Not enough information to make a" in text
        )
    assert "ONLY return the SQL query, nothing else." in sql
    assert "Your response must be RFC8259 compliant JSON" in judge
    assert '{{"reasoning": str, "correctness": int}}' in judge


def test_zero_shot_contains_question_line():
    rendered = render(TemplateKind.ZERO_SHOT_TEXT2SQL, SQL_CTX)
    assert "Question: How many clients?" in rendered


def test_judge_braces_unescaped_in_output():
    rendered = render(TemplateKind.JUDGE_DESCRIPTION, JUDGE_CTX)
    assert '{"reasoning": str, "correctness": int}' in rendered
    assert "{{" not in rendered


def test_improve_tolerates_empty_description():
    ctx = PromptContext(
        database_schema=FIXTURE_SCHEMA,
        table="client",
        column="birth_date",
        column_name="",
        column_description="",
        example_data="e",
        unique_data="u",
    )
    rendered = render(TemplateKind.IMPROVE_DESCRIPTION, ctx)
    assert "The previous column description is . " in rendered


def test_missing_variable():
    with pytest.raises(MissingVariable) as err:
        render(TemplateKind.ZERO_SHOT_TEXT2SQL, PromptContext(database_schema="s"))
    assert err.value.name == "question"


def test_required_variables():
    assert required_variables(TemplateKind.ZERO_SHOT_TEXT2SQL) == {
        "database_schema",
        "question",
    }
    assert required_variables(TemplateKind.JUDGE_DESCRIPTION) == {
        "response",
        "gold_answer",
    }
    assert required_variables(TemplateKind.IMPROVE_DESCRIPTION) == {
        "database_schema",
        "table",
        "column",
        "column_name",
        "column_description",
        "example_data",
        "unique_data",
    }


def test_unknown_placeholder(tmp_path, monkeypatch):
    import semlayer.prompts as prompts

    monkeypatch.setattr(prompts, "template_text", lambda kind: "Hello {nope}")
    with pytest.raises(UnknownPlaceholder):
        prompts.render(TemplateKind.GENERATE_DESCRIPTION, PromptContext())
