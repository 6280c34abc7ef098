"""Backend facade: digests, cassettes, accounting, embeddings, and NLI."""
from __future__ import annotations

import hashlib
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from imitext.backends import (
    Backend,
    BackendRequest,
    Capability,
    Cassette,
    ComponentTag,
    DimensionMismatch,
    HttpTransport,
    NliStub,
    ReplayMiss,
    ScriptedTransport,
    TransportError,
    cosine,
    make_backend,
    offline_embedding,
    request_digest,
    text_digest,
)
from imitext.core import ValidationError

from conftest import FIXTURES, CannedTransport


def _request(payload: str = "Segment:\nhello there\n") -> BackendRequest:
    return BackendRequest(Capability.GENERATE, ComponentTag.CLARIFY, payload)


class TestDigests:
    def test_request_digest_matches_manual_sha256(self):
        request = _request("some payload")
        material = "\x1f".join(
            (Capability.GENERATE.value, ComponentTag.CLARIFY.value, "some payload")
        )
        assert request_digest(request) == hashlib.sha256(
            material.encode("utf-8")
        ).hexdigest()

    def test_digest_changes_with_any_component(self):
        base = request_digest(_request("p"))
        assert request_digest(_request("q")) != base
        other_tag = BackendRequest(Capability.GENERATE, ComponentTag.OUTLINE, "p")
        assert request_digest(other_tag) != base

    def test_separator_prevents_field_bleed(self):
        a = BackendRequest(Capability.GENERATE, ComponentTag.QA, "xy")
        b = BackendRequest(Capability.GENERATE, ComponentTag.QA, "x")
        assert request_digest(a) != request_digest(b)

    @given(st.text(min_size=1))
    def test_digest_is_stable(self, payload):
        request = BackendRequest(Capability.GENERATE, ComponentTag.WRITE, payload)
        assert request_digest(request) == request_digest(request)

    def test_empty_payload_rejected(self):
        with pytest.raises(ValidationError):
            BackendRequest(Capability.GENERATE, ComponentTag.CLARIFY, "")

    def test_text_digest_is_plain_sha256(self):
        assert text_digest("abc") == hashlib.sha256(b"abc").hexdigest()


class TestCassette:
    def test_record_then_replay_round_trip(self, tmp_path):
        path = tmp_path / "tape.jsonl"
        recording = Backend(
            transport=ScriptedTransport(),
            cassette=Cassette(path, "record"),
            profile_name="mock",
        )
        request = _request()
        first = recording.complete(request)
        assert path.exists()

        replaying = Backend(cassette=Cassette(path, "replay"), profile_name="replay")
        assert replaying.complete(request) == first

    def test_fresh_cassette_records_first_call(self, tmp_path):
        """An empty cassette must still be consulted (len()==0 is not 'absent')."""
        path = tmp_path / "tape.jsonl"
        cassette = Cassette(path, "record")
        assert len(cassette) == 0
        backend = Backend(transport=ScriptedTransport(), cassette=cassette)
        backend.complete(_request())
        assert path.exists()
        rows = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(rows) == 1
        assert rows[0]["component_tag"] == "clarify"
        assert set(rows[0]) == {"digest", "component_tag", "response"}

    def test_identical_calls_are_stored_once(self, tmp_path):
        path = tmp_path / "tape.jsonl"
        backend = Backend(
            transport=ScriptedTransport(), cassette=Cassette(path, "record")
        )
        backend.complete(_request())
        backend.complete(_request())
        assert len(path.read_text().splitlines()) == 1

    def test_replay_miss_names_the_digest(self, tmp_path):
        path = tmp_path / "tape.jsonl"
        path.write_text("")
        backend = Backend(cassette=Cassette(path, "replay"))
        request = _request()
        with pytest.raises(ReplayMiss) as excinfo:
            backend.complete(request)
        assert request_digest(request) in str(excinfo.value)

    def test_replay_without_file_raises(self, tmp_path):
        with pytest.raises(ReplayMiss):
            Cassette(tmp_path / "missing.jsonl", "replay")

    def test_invalid_mode_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            Cassette(tmp_path / "tape.jsonl", "stream")

    def test_replay_needs_no_transport(self, tmp_path):
        path = tmp_path / "tape.jsonl"
        Backend(
            transport=ScriptedTransport(), cassette=Cassette(path, "record")
        ).complete(_request())
        offline = Backend(cassette=Cassette(path, "replay"))
        assert offline.transport is None
        assert offline.complete(_request())

    def test_no_cassette_and_no_transport_fails(self):
        backend = Backend()
        with pytest.raises(TransportError):
            backend.complete(_request())


class TestCallAccounting:
    def test_stats_count_whitespace_tokens(self):
        backend = canned = Backend(
            transport=CannedTransport("three word reply"), profile_name="canned"
        )
        backend.complete(_request("five words in this payload"))
        stats = canned.call_stats()
        per_tag = stats.per_tag()
        assert per_tag["clarify"].calls == 1
        assert per_tag["clarify"].prompt_tokens == 5
        assert per_tag["clarify"].completion_tokens == 3

    def test_totals_sum_over_tags(self):
        backend = Backend(transport=CannedTransport("a b"), profile_name="canned")
        backend.complete(_request("one"))
        backend.complete(
            BackendRequest(Capability.GENERATE, ComponentTag.OUTLINE, "two tokens")
        )
        totals = backend.call_stats().totals()
        assert totals.calls == 2
        assert totals.prompt_tokens == 3
        assert totals.completion_tokens == 4

    def test_cost_multiplies_completion_tokens_by_rate(self):
        backend = Backend(
            transport=CannedTransport("t1 t2 t3 t4 t5 t6 t7 t8 t9 t10"),
            profile_name="canned",
        )
        backend.complete(_request("p"))
        rate = 15.0 / 1_000_000  # dollars per completion token
        assert backend.call_stats().cost(rate) == pytest.approx(10 * rate)

    def test_count_scope_isolates_nested_sections(self):
        backend = Backend(transport=CannedTransport("ok"), profile_name="canned")
        with backend.count_scope() as outer:
            backend.complete(_request("a"))
            with backend.count_scope() as inner:
                backend.complete(_request("bb"))
            backend.complete(_request("ccc"))
        assert inner.calls == 1
        assert outer.calls == 3
        assert backend.call_stats().totals().calls == 3


class TestOfflineEmbedding:
    def test_dimension_and_determinism(self):
        a = offline_embedding("the quick brown fox")
        b = offline_embedding("the quick brown fox")
        assert len(a) == 256
        assert a == b

    def test_token_counts_accumulate(self):
        once = offline_embedding("word")
        twice = offline_embedding("word word")
        assert sum(once) == 1.0
        assert sum(twice) == 2.0

    def test_punctuation_variants_share_a_vector(self):
        assert offline_embedding("Old Mill") == offline_embedding("old mill.")

    def test_empty_text_rejected(self):
        with pytest.raises(ValidationError):
            offline_embedding("   ")

    def test_custom_dimension(self):
        assert len(offline_embedding("abc", dim=32)) == 32

    @given(st.text(min_size=1).filter(lambda t: any(ch.isalnum() for ch in t)))
    def test_self_cosine_is_one(self, text):
        vector = offline_embedding(text)
        assert cosine(vector, vector) == pytest.approx(1.0, abs=1e-12)

    def test_cosine_of_zero_vector_is_zero(self):
        assert cosine([0.0, 0.0], [1.0, 2.0]) == 0.0

    def test_cosine_matches_manual_formula(self):
        a, b = [1.0, 2.0, 0.0], [2.0, 1.0, 1.0]
        expected = (1 * 2 + 2 * 1) / (math.sqrt(5) * math.sqrt(6))
        assert cosine(a, b) == pytest.approx(expected, abs=1e-12)

    def test_backend_embed_uses_offline_profile(self, offline_backend):
        vector = offline_backend.embed("steppe lakes")
        assert vector == offline_embedding("steppe lakes")

    def test_transport_embedding_dimension_is_checked(self):
        class ShortEmbedTransport(CannedTransport):
            def embed(self, text):
                return [1.0, 2.0]

        backend = Backend(transport=ShortEmbedTransport("x"), embed_dim=256)
        with pytest.raises(DimensionMismatch):
            backend.embed("anything")


class TestNliStub:
    def test_fixture_rows_answer_exactly(self):
        stub = NliStub.from_jsonl(FIXTURES / "nli_stub.jsonl")
        premise = (
            "Davlekanovsky District is a district of Bashkortostan. "
            "Its population is 41000. The Dyoma River flows through it."
        )
        assert stub.classify(premise, "Davlekanovsky District is a district of Bashkortostan.") == "entail"
        assert stub.classify(premise, "Its population is 95000.") == "contradict"
        assert stub.classify(premise, "The district is known for cheese.") == "neutral"

    def test_reflexive_entailment(self):
        stub = NliStub()
        assert stub.classify("The sky is blue.", "The sky is blue.") == "entail"

    def test_default_is_neutral(self):
        stub = NliStub()
        assert stub.classify("A premise.", "An unrelated claim.") == "neutral"

    def test_strict_mode_raises_on_unknown_pair(self):
        stub = NliStub(strict=True)
        with pytest.raises(ReplayMiss):
            stub.classify("A premise.", "An unrelated claim.")
        assert stub.classify("Same.", "Same.") == "entail"

    def test_label_aliases_normalize_on_load(self, tmp_path):
        path = tmp_path / "nli.jsonl"
        rows = [
            {"premise_digest": text_digest("p"), "hypothesis_digest": text_digest("h1"),
             "label": "ENTAILMENT"},
            {"premise_digest": text_digest("p"), "hypothesis_digest": text_digest("h2"),
             "label": "Contradiction"},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        stub = NliStub.from_jsonl(path)
        assert stub.classify("p", "h1") == "entail"
        assert stub.classify("p", "h2") == "contradict"

    def test_bad_fixture_row_names_the_line(self, tmp_path):
        path = tmp_path / "nli.jsonl"
        path.write_text('{"premise_digest": "x"}\n')
        with pytest.raises(ValidationError) as excinfo:
            NliStub.from_jsonl(path)
        assert "1" in str(excinfo.value)

    def test_backend_validates_empty_nli_inputs(self, offline_backend):
        with pytest.raises(ValidationError):
            offline_backend.classify_nli("", "h")
        with pytest.raises(ValidationError):
            offline_backend.classify_nli("p", "  ")


class TestHttpTransport:
    def test_generate_response_schema(self, monkeypatch):
        transport = HttpTransport("http://127.0.0.1:9")
        monkeypatch.setattr(
            transport, "_post", lambda capability, body: {"text": "generated"}
        )
        assert transport.complete(_request()) == "generated"

    def test_generate_missing_field_raises(self, monkeypatch):
        transport = HttpTransport("http://127.0.0.1:9")
        monkeypatch.setattr(transport, "_post", lambda capability, body: {"oops": 1})
        with pytest.raises(TransportError):
            transport.complete(_request())

    def test_embed_schema_and_coercion(self, monkeypatch):
        transport = HttpTransport("http://127.0.0.1:9")
        monkeypatch.setattr(
            transport, "_post", lambda capability, body: {"vector": [1, 2.5]}
        )
        assert transport.embed("x") == [1.0, 2.5]

    def test_embed_rejects_non_numeric_vector(self, monkeypatch):
        transport = HttpTransport("http://127.0.0.1:9")
        monkeypatch.setattr(
            transport, "_post", lambda capability, body: {"vector": ["a"]}
        )
        with pytest.raises(TransportError):
            transport.embed("x")

    def test_nli_label_aliases_normalize(self, monkeypatch):
        transport = HttpTransport("http://127.0.0.1:9")
        monkeypatch.setattr(
            transport, "_post", lambda capability, body: {"label": "NEUTRAL"}
        )
        assert transport.classify_nli("p", "h") == "neutral"

    def test_nli_unknown_label_raises(self, monkeypatch):
        transport = HttpTransport("http://127.0.0.1:9")
        monkeypatch.setattr(
            transport, "_post", lambda capability, body: {"label": "maybe"}
        )
        with pytest.raises(TransportError):
            transport.classify_nli("p", "h")


class TestMakeBackend:
    def test_profiles_exist(self):
        assert make_backend("mock").profile_name == "mock"
        assert make_backend("offline").profile_name == "offline"

    def test_unknown_profile_rejected(self):
        with pytest.raises(ValidationError):
            make_backend("quantum")

    def test_http_profile_requires_base_url(self):
        with pytest.raises(ValidationError):
            make_backend("http")

    def test_replay_mode_requires_existing_cassette(self, tmp_path):
        with pytest.raises(ReplayMiss):
            make_backend(
                "offline",
                cassette_path=tmp_path / "missing.jsonl",
                cassette_mode="replay",
            )

    def test_nli_fixture_is_wired_through(self):
        backend = make_backend("offline", nli_fixture=FIXTURES / "nli_stub.jsonl")
        premise = (
            "Davlekanovsky District is a district of Bashkortostan. "
            "Its population is 41000. The Dyoma River flows through it."
        )
        assert (
            backend.classify_nli(premise, "Its population is 95000.") == "contradict"
        )
