"""Task record validation, JSONL round trips, and pipeline configuration."""
from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from imitext.core import (
    Ablation,
    ConfigError,
    EmptySourceText,
    IdenticalTopics,
    ImitextError,
    MissingField,
    PipelineConfig,
    Strategy,
    TaskInstance,
    ValidationError,
    dump_tasks,
    load_tasks,
    read_jsonl,
    validate_instance,
    write_jsonl,
)


def _record(**overrides) -> dict:
    base = {
        "id": "t1",
        "source_topic": "Old Mill",
        "target_topic": "New Mill",
        "source_text": "The mill stands. It is old.",
        "gold_text": "The new mill stands.",
    }
    base.update(overrides)
    return base


class TestValidateInstance:
    def test_valid_record_round_trips(self):
        instance = validate_instance(_record())
        assert instance.id == "t1"
        assert instance.gold_text == "The new mill stands."
        assert validate_instance(instance.to_record()) == instance

    def test_gold_text_is_optional(self):
        record = _record()
        del record["gold_text"]
        instance = validate_instance(record)
        assert instance.gold_text is None

    @pytest.mark.parametrize("field", ["id", "source_topic", "target_topic", "source_text"])
    def test_missing_required_field(self, field):
        record = _record()
        del record[field]
        with pytest.raises(MissingField) as excinfo:
            validate_instance(record)
        assert field in str(excinfo.value)

    @pytest.mark.parametrize("field", ["id", "source_topic", "target_topic"])
    def test_blank_required_field(self, field):
        with pytest.raises(MissingField):
            validate_instance(_record(**{field: "   "}))

    def test_whitespace_source_text(self):
        with pytest.raises(EmptySourceText) as excinfo:
            validate_instance(_record(source_text="  \n "))
        assert "t1" in str(excinfo.value)

    def test_identical_topics_casefold_and_trim(self):
        with pytest.raises(IdenticalTopics):
            validate_instance(
                _record(source_topic="Paris ", target_topic="paris")
            )

    def test_distinct_topics_differing_only_in_punctuation_are_allowed(self):
        instance = validate_instance(
            _record(source_topic="Mill", target_topic="Mill.")
        )
        assert instance.target_topic == "Mill."

    def test_validation_errors_are_imitext_errors(self):
        assert issubclass(MissingField, ValidationError)
        assert issubclass(EmptySourceText, ValidationError)
        assert issubclass(IdenticalTopics, ValidationError)
        assert issubclass(ValidationError, ImitextError)
        assert issubclass(ConfigError, ImitextError)


class TestTaskIo:
    def test_load_tasks_reports_line_numbers(self, tmp_path):
        path = tmp_path / "tasks.jsonl"
        rows = [_record(), _record(id="t2", source_text="")]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        with pytest.raises(ValidationError) as excinfo:
            load_tasks(path)
        assert "2" in str(excinfo.value)

    def test_dump_then_load_is_identity(self, tmp_path):
        instances = [
            validate_instance(_record()),
            validate_instance(_record(id="t2", gold_text=None)),
        ]
        path = tmp_path / "tasks.jsonl"
        dump_tasks(path, instances)
        assert load_tasks(path) == instances

    def test_read_jsonl_skips_blank_lines_and_numbers_rows(self, tmp_path):
        path = tmp_path / "rows.jsonl"
        path.write_text('{"a": 1}\n\n{"a": 2}\n')
        rows = list(read_jsonl(path))
        assert [lineno for lineno, _ in rows] == [1, 3]
        assert [row["a"] for _, row in rows] == [1, 2]

    def test_read_jsonl_rejects_bad_json_with_line_number(self, tmp_path):
        path = tmp_path / "rows.jsonl"
        path.write_text('{"a": 1}\nnot json\n')
        with pytest.raises(ValidationError) as excinfo:
            list(read_jsonl(path))
        assert "2" in str(excinfo.value)

    def test_write_jsonl_round_trip(self, tmp_path):
        path = tmp_path / "out.jsonl"
        rows = [{"x": "жизнь"}, {"y": [1, 2]}]
        write_jsonl(path, rows)
        back = [row for _, row in read_jsonl(path)]
        assert back == rows

    @given(
        st.lists(
            st.fixed_dictionaries(
                {
                    "id": st.uuids().map(str),
                    "source_topic": st.just("A Topic"),
                    "target_topic": st.just("B Topic"),
                    "source_text": st.text(min_size=1).filter(lambda t: t.strip()),
                }
            ),
            min_size=1,
            max_size=5,
            unique_by=lambda r: r["id"],
        )
    )
    def test_any_valid_batch_survives_a_round_trip(self, records):
        import tempfile

        instances = [validate_instance(r) for r in records]
        with tempfile.TemporaryDirectory() as tmp:
            path = f"{tmp}/tasks.jsonl"
            dump_tasks(path, instances)
            assert load_tasks(path) == instances


class TestPipelineConfig:
    def test_defaults(self):
        config = PipelineConfig()
        assert config.theta == 0.6
        assert config.stm_window == 2
        assert config.strategy is Strategy.REPA
        assert config.retrieval_enabled is True
        assert config.sr_iterations == 4
        assert config.ablations == frozenset()

    @pytest.mark.parametrize(
        "overrides",
        [
            {"theta": 1.01},
            {"theta": -0.01},
            {"stm_window": 0},
            {"sr_iterations": -1},
        ],
    )
    def test_out_of_range_values(self, overrides):
        with pytest.raises(ConfigError):
            PipelineConfig(**overrides)

    def test_theta_boundaries_are_inclusive(self):
        assert PipelineConfig(theta=0.0).theta == 0.0
        assert PipelineConfig(theta=1.0).theta == 1.0

    def test_string_enums_are_coerced(self):
        config = PipelineConfig(strategy="self_refine", ablations=frozenset({"no_outline"}))
        assert config.strategy is Strategy.SELF_REFINE
        assert Ablation.NO_OUTLINE in config.ablations

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigError) as excinfo:
            PipelineConfig.from_dict({"theta": 0.5, "bogus_key": 1})
        assert "bogus_key" in str(excinfo.value)

    def test_to_dict_round_trip(self):
        config = PipelineConfig(
            theta=0.25,
            strategy="rom",
            ablations=frozenset({"no_refusal", "no_segment"}),
        )
        clone = PipelineConfig.from_dict(config.to_dict())
        assert clone == config
        assert clone.to_dict()["strategy"] == "rom"
        assert sorted(clone.to_dict()["ablations"]) == ["no_refusal", "no_segment"]

    def test_ablated_helper(self):
        config = PipelineConfig(ablations=frozenset({"no_outline"}))
        assert config.ablated(Ablation.NO_OUTLINE)
        assert not config.ablated(Ablation.NO_REFUSAL)
