import json
import random
import string
import threading
import time

import pytest

from predeval.prompting import PromptBundle, PromptMode, prompt_digest
from predeval.provider import (
    AuthError,
    BackendRefusal,
    CompletionRequest,
    HttpConfig,
    HttpProvider,
    MockProvider,
    MockScriptMiss,
    RateLimited,
    ResponseCache,
    RetryPolicy,
    TokenBucket,
    TransportError,
    cache_key,
    mock_provider,
)


def bundle(system="sys", user="user", version="v1"):
    return PromptBundle(
        system=system, user=user, template_version=version, mode=PromptMode.SINGLE_TURN
    )


def request(**kwargs):
    kwargs.setdefault("prompt", bundle())
    kwargs.setdefault("model_id", "m")
    return CompletionRequest(**kwargs)


class TestRequestValidation:
    def test_negative_temperature_rejected(self):
        with pytest.raises(ValueError):
            request(temperature=-1.0)

    def test_nonpositive_max_tokens_rejected(self):
        with pytest.raises(ValueError):
            request(max_tokens=0)

    def test_negative_latency_rejected(self):
        from predeval.provider import CompletionResponse

        with pytest.raises(ValueError):
            CompletionResponse(text="x", latency_ms=-1)


class TestMockProvider:
    def test_scripted_response_and_cache_hit_sequence(self, tmp_path):
        b = bundle()
        provider = MockProvider(
            {prompt_digest(b): "scripted!"}, cache=ResponseCache(tmp_path)
        )
        first = provider.complete(provider.request(b))
        again = provider.complete(provider.request(b))
        assert first.text == again.text == "scripted!"
        assert first.cache_hit is False
        assert again.cache_hit is True

    def test_strict_policy_unknown_digest(self):
        provider = mock_provider({})
        with pytest.raises(MockScriptMiss):
            provider.complete(provider.request(bundle()))

    def test_default_policy_returns_default(self):
        provider = mock_provider({}, policy="default", default_text="fallback")
        assert provider.complete(provider.request(bundle())).text == "fallback"

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError):
            mock_provider({}, policy="lenient")

    def test_hundred_randomized_entries_round_trip(self):
        rng = random.Random(77)
        bundles, script = [], {}
        for i in range(100):
            text = "".join(rng.choices(string.printable, k=rng.randint(1, 60)))
            b = bundle(system=f"sys {i}", user=f"user {rng.random()}")
            bundles.append((b, text))
            script[prompt_digest(b)] = text
        provider = MockProvider(script)
        for b, text in bundles:
            assert provider.complete(provider.request(b)).text == text

    def test_pure_function_of_script_and_request(self):
        b = bundle()
        p1 = MockProvider({prompt_digest(b): "same"})
        p2 = MockProvider({prompt_digest(b): "same"})
        assert p1.complete(p1.request(b)).text == p2.complete(p2.request(b)).text


class TestCache:
    def test_round_trip_bit_exact(self, tmp_path):
        cache = ResponseCache(tmp_path)
        text = 'unicode ☃, control \t chars, and json {"inside": [1, 2]}'
        cache.store("k" * 64, text, {"in": 3, "out": 7})
        loaded = cache.load("k" * 64)
        assert loaded == (text, {"in": 3, "out": 7})

    def test_missing_key(self, tmp_path):
        assert ResponseCache(tmp_path).load("absent") is None

    def test_key_digest_equality_oracle(self):
        # identical requests produce identical keys; any component change moves the key
        r1, r2 = request(), request()
        assert cache_key(r1) == cache_key(r2)
        assert cache_key(request(temperature=0.5)) != cache_key(r1)
        assert cache_key(request(max_tokens=99)) != cache_key(r1)
        assert cache_key(request(model_id="other")) != cache_key(r1)
        assert cache_key(request(prompt=bundle(user="changed"))) != cache_key(r1)
        assert cache_key(request(prompt=bundle(version="v2"))) != cache_key(r1)


class TestRetries:
    def make_provider(self, responses, **kwargs):
        """Provider with a scripted transport; ``responses`` yields
        (status, body) pairs or exceptions per attempt."""
        calls = []

        def transport(url, headers, payload, timeout):
            calls.append((url, json.dumps(payload, sort_keys=True)))
            action = responses[min(len(calls) - 1, len(responses) - 1)]
            if isinstance(action, Exception):
                raise action
            return action

        config = HttpConfig(endpoint="https://api.test", model_id="m", api_key="secret")
        provider = HttpProvider(
            config,
            transport=transport,
            retry=RetryPolicy(max_attempts=3, base_delay=0.01),
            sleeper=lambda s: None,
            **kwargs,
        )
        return provider, calls

    def ok_body(self, text="done"):
        return (200, {"choices": [{"message": {"content": text}}], "usage": {"total_tokens": 5}})

    def test_transient_failures_then_success(self):
        provider, calls = self.make_provider([(500, {}), (503, {}), self.ok_body()])
        resp = provider.complete(provider.request(bundle()))
        assert resp.text == "done"
        assert resp.usage == {"total_tokens": 5}
        assert len(calls) == 3
        # retries never change the request payload
        assert len({payload for _, payload in calls}) == 1

    def test_transport_error_after_cap(self):
        provider, calls = self.make_provider([(500, {})])
        with pytest.raises(TransportError):
            provider.complete(provider.request(bundle()))
        assert len(calls) == 3

    def test_rate_limit_exhaustion(self):
        provider, _ = self.make_provider([(429, {})])
        with pytest.raises(RateLimited):
            provider.complete(provider.request(bundle()))

    def test_auth_error_immediate(self):
        provider, calls = self.make_provider([(401, {})])
        with pytest.raises(AuthError):
            provider.complete(provider.request(bundle()))
        assert len(calls) == 1

    def test_backend_refusal_immediate(self):
        provider, calls = self.make_provider([(400, {"error": "bad request"})])
        with pytest.raises(BackendRefusal):
            provider.complete(provider.request(bundle()))
        assert len(calls) == 1

    def test_missing_credential(self):
        config = HttpConfig(endpoint="https://api.test", model_id="m", api_key="")
        provider = HttpProvider(config, transport=lambda *a: (200, {}))
        with pytest.raises(AuthError):
            provider.complete(provider.request(bundle()))

    def test_successful_response_cached(self, tmp_path):
        provider, calls = self.make_provider([self.ok_body()], cache=ResponseCache(tmp_path))
        b = bundle()
        provider.complete(provider.request(b))
        second = provider.complete(provider.request(b))
        assert second.cache_hit and second.text == "done"
        assert len(calls) == 1


class TestWireMapping:
    def capture(self, family):
        seen = {}

        def transport(url, headers, payload, timeout):
            seen.update(url=url, headers=headers, payload=payload)
            if family == "openai":
                return 200, {"choices": [{"message": {"content": "ok"}}]}
            return 200, {"content": [{"text": "ok"}]}

        config = HttpConfig(
            endpoint="https://api.test", model_id="m", family=family, api_key="secret"
        )
        provider = HttpProvider(config, transport=transport)
        provider.complete(provider.request(bundle(system="S", user="U")))
        return seen

    def test_openai_family_shape(self):
        seen = self.capture("openai")
        assert seen["url"].endswith("/chat/completions")
        assert seen["headers"]["Authorization"] == "Bearer secret"
        assert seen["payload"]["messages"][0] == {"role": "system", "content": "S"}
        assert seen["payload"]["messages"][1] == {"role": "user", "content": "U"}

    def test_anthropic_family_shape(self):
        seen = self.capture("anthropic")
        assert seen["url"].endswith("/v1/messages")
        assert seen["headers"]["x-api-key"] == "secret"
        assert seen["payload"]["system"] == "S"
        assert seen["payload"]["messages"] == [{"role": "user", "content": "U"}]

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            HttpConfig(endpoint="e", model_id="m", family="other")


class TestThrottling:
    def test_token_bucket_paces_requests(self):
        now = [0.0]
        naps = []

        def clock():
            return now[0]

        def sleeper(duration):
            naps.append(duration)
            now[0] += duration

        bucket = TokenBucket(60, clock=clock, sleeper=sleeper)  # 1 token/second
        for _ in range(60):
            bucket.acquire()
        assert naps == []  # burst capacity covers the first minute's worth
        bucket.acquire()
        assert len(naps) == 1 and naps[0] == pytest.approx(1.0)

    def test_in_flight_cap_bounds_concurrency(self):
        active = []
        peak = []
        lock = threading.Lock()

        class SlowMock(MockProvider):
            def _request(self, req):
                with lock:
                    active.append(1)
                    peak.append(len(active))
                time.sleep(0.01)
                with lock:
                    active.pop()
                return "ok", {}

        provider = SlowMock({}, policy="default", max_in_flight=2)
        threads = [
            threading.Thread(target=lambda: provider.complete(provider.request(bundle(user=str(i)))))
            for i in range(8)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert max(peak) <= 2
