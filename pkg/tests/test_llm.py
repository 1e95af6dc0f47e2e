from __future__ import annotations

import json

import pytest

from semlayer.llm import (
    AuthError,
    Completion,
    MockMissingFixture,
    ModelSpec,
    ProviderError,
    RateLimited,
    RequestTimeout,
    SENTINEL,
    classify_generation,
    complete,
    prompt_hash,
    strip_wrappers,
    write_mock_fixture,
)


def ok_body(text: str) -> str:
    return json.dumps(
        {
            "model": "fake-model",
            "choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": 10, "completion_tokens": 5},
        }
    )


def http_spec(**overrides) -> ModelSpec:
    params = dict(
        name="fake-model",
        endpoint="https://example.invalid/v1/chat/completions",
        backoff_base=0.0,
    )
    params.update(overrides)
    return ModelSpec(**params)


def test_mock_provider_returns_fixture(tmp_path):
    spec = ModelSpec(name="mock", endpoint=f"mock:{tmp_path}")
    write_mock_fixture(tmp_path, "hello", "canned response")
    result = complete(spec, "hello")
    assert result.text == "canned response"
    assert result.latency == 0.0
    assert result.attempts == 1


def test_mock_provider_is_deterministic(tmp_path):
    spec = ModelSpec(name="mock", endpoint=f"mock:{tmp_path}")
    write_mock_fixture(tmp_path, "p", "r1")
    assert complete(spec, "p").text == complete(spec, "p").text


def test_mock_provider_missing_fixture(tmp_path):
    spec = ModelSpec(name="mock", endpoint=f"mock:{tmp_path}")
    with pytest.raises(MockMissingFixture) as err:
        complete(spec, "unmapped prompt")
    assert err.value.prompt_digest == prompt_hash("unmapped prompt")


def test_retry_then_success():
    calls = []

    def transport(spec, payload):
        calls.append(payload)
        if len(calls) < 3:
            return 500, "server exploded"
        return 200, ok_body("fine")

    result = complete(http_spec(), "prompt", transport=transport)
    assert result.text == "fine"
    assert result.attempts == 3
    assert len(calls) == 3


def test_rate_limit_exhausted():
    def transport(spec, payload):
        return 429, "slow down"

    with pytest.raises(RateLimited):
        complete(http_spec(max_attempts=3), "prompt", transport=transport)


def test_timeout_retried_then_raised():
    import requests

    def transport(spec, payload):
        raise requests.Timeout("too slow")

    with pytest.raises(RequestTimeout):
        complete(http_spec(max_attempts=2), "prompt", transport=transport)


def test_non_retryable_4xx_is_immediate():
    calls = []

    def transport(spec, payload):
        calls.append(1)
        return 400, "bad request"

    with pytest.raises(ProviderError):
        complete(http_spec(), "prompt", transport=transport)
    assert len(calls) == 1


def test_auth_error_before_network(monkeypatch):
    monkeypatch.delenv("SEMLAYER_TEST_KEY", raising=False)
    calls = []

    def transport(spec, payload):
        calls.append(1)
        return 200, ok_body("x")

    with pytest.raises(AuthError):
        complete(
            http_spec(api_key_env="SEMLAYER_TEST_KEY"), "prompt", transport=transport
        )
    assert calls == []


def test_payload_carries_sampling_params():
    seen = {}

    def transport(spec, payload):
        seen.update(payload)
        return 200, ok_body("x")

    complete(http_spec(seed=7, temperature=0.7), "the prompt", transport=transport)
    assert seen["temperature"] == 0.7
    assert seen["seed"] == 7
    assert seen["messages"] == [{"role": "user", "content": "the prompt"}]


def test_temperature_default_and_range():
    assert http_spec().temperature == 0.7
    with pytest.raises(ValueError):
        http_spec(temperature=2.5)


def test_empty_prompt_rejected():
    with pytest.raises(ValueError):
        complete(http_spec(), "")


def test_classify_generation_sentinel():
    assert classify_generation("Not enough information to make a valid prediction.") is None
    assert classify_generation("not enough INFORMATION to make a valid prediction") is None
    assert classify_generation(f"  {SENTINEL}. The column is unclear.") is None


def test_classify_generation_quote_stripping():
    assert (
        classify_generation('"The birth date of the client."')
        == "The birth date of the client."
    )


def test_classify_generation_fence_stripping():
    assert classify_generation("```The rank of the driver.```") == "The rank of the driver."
    assert (
        classify_generation("```text\nThe rank of the driver.\n```")
        == "The rank of the driver."
    )


def test_classify_generation_idempotent():
    samples = [
        '"The name of a client."',
        "```sql\nSELECT 1\n```",
        "   plain text  ",
        "'''nested'''",
    ]
    for s in samples:
        once = classify_generation(s)
        assert once is not None
        assert classify_generation(once) == once


def test_strip_wrappers_plain_text_untouched():
    assert strip_wrappers("The amount of money in the order.") == (
        "The amount of money in the order."
    )
    assert strip_wrappers('He said "hi" to her.') == 'He said "hi" to her.'
