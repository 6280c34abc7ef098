"""End-to-end pipeline runs: call budgets, traces, failure handling, I/O."""
from __future__ import annotations

import json

import pytest

from imitext.backends import Backend, BackendRequest, TransportError
from imitext.core import PipelineConfig, TaskInstance, ValidationError
from imitext.pipeline import (
    StepFailure,
    read_results,
    result_from_dict,
    result_to_dict,
    run,
    run_baseline,
    run_repa,
    write_results,
)
from imitext.planner import substitute_topic
from imitext.segmentation import split_sentences

from conftest import CannedTransport


def _count(task, store, templates, backend, **config_kwargs) -> int:
    config = PipelineConfig(**config_kwargs)
    result = run(task, config, backend, templates=templates, store=store)
    return result.call_count


class TestCallBudgets:
    """The call count of every strategy is an exact function of the segment
    count T; these are the budgets the cost table is built on."""

    def test_segment_count_of_the_shared_task(self, district_task):
        assert len(split_sentences(district_task.source_text)) == 3

    def test_repa_is_six_calls_per_segment(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        assert _count(district_task, retrieval_store, templates, mock_backend) == 18

    def test_llm_baseline_is_one_call(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        count = _count(
            district_task, retrieval_store, templates, mock_backend, strategy="llm"
        )
        assert count == 1

    def test_rom_baseline_is_one_call_per_segment(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        count = _count(
            district_task, retrieval_store, templates, mock_backend, strategy="rom"
        )
        assert count == 3

    def test_self_refine_is_one_plus_two_per_iteration(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        count = _count(
            district_task,
            retrieval_store,
            templates,
            mock_backend,
            strategy="self_refine",
        )
        assert count == 3 * (1 + 2 * 4)

    def test_self_refine_iteration_knob(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        count = _count(
            district_task,
            retrieval_store,
            templates,
            mock_backend,
            strategy="self_refine",
            sr_iterations=1,
        )
        assert count == 3 * (1 + 2 * 1)

    def test_default_strategy_makes_no_calls(
        self, district_task, templates, mock_backend
    ):
        count = _count(
            district_task, None, templates, mock_backend, strategy="default"
        )
        assert count == 0
        assert mock_backend.call_stats().totals().calls == 0

    @pytest.mark.parametrize(
        "ablation,per_segment",
        [
            ("no_clarify_stm", 5),
            ("no_outline", 4),
            ("no_refusal", 6),
            ("no_revise_ltm", 4),
        ],
    )
    def test_ablation_budgets(
        self,
        district_task,
        retrieval_store,
        templates,
        mock_backend,
        ablation,
        per_segment,
    ):
        count = _count(
            district_task,
            retrieval_store,
            templates,
            mock_backend,
            ablations=frozenset({ablation}),
        )
        assert count == 3 * per_segment

    def test_no_segment_treats_the_text_as_one_segment(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        config = PipelineConfig(ablations=frozenset({"no_segment"}))
        result = run(
            district_task, config, mock_backend, templates=templates, store=retrieval_store
        )
        assert result.call_count == 6
        assert len(result.segments) == 1
        assert len(result.trace) == 1


class TestOutputsAndTraces:
    def test_output_is_segments_joined_by_single_spaces(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        result = run(
            district_task,
            PipelineConfig(),
            mock_backend,
            templates=templates,
            store=retrieval_store,
        )
        assert result.output_text == " ".join(result.segments)
        assert len(result.segments) == 3

    def test_default_strategy_is_word_boundary_substitution(
        self, district_task, templates, mock_backend
    ):
        result = run(
            district_task,
            PipelineConfig(strategy="default"),
            mock_backend,
            templates=templates,
        )
        expected = substitute_topic(
            district_task.source_text,
            district_task.source_topic,
            district_task.target_topic,
        )
        assert result.output_text == expected
        assert "Belebeyevsky District" not in result.output_text
        assert "Davlekanovsky District" in result.output_text

    def test_trace_snapshots_show_memory_entering_each_step(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        result = run_repa(
            district_task,
            PipelineConfig(),
            mock_backend,
            templates=templates,
            store=retrieval_store,
        )
        assert [t.step for t in result.trace] == [1, 2, 3]
        first, second = result.trace[0], result.trace[1]
        assert first.stm_snapshot == ()
        assert first.ltm_snapshot == ""
        # what entered step 2 is what step 1 produced
        assert second.stm_snapshot == (first.clarified,)
        assert second.ltm_snapshot != "" or second.ltm_snapshot == first.output[:0]

    def test_trace_records_questions_and_kept_facts(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        result = run_repa(
            district_task,
            PipelineConfig(),
            mock_backend,
            templates=templates,
            store=retrieval_store,
        )
        for step_trace in result.trace:
            assert step_trace.questions
            assert step_trace.output
            for fact in step_trace.facts:
                assert fact.kept == (fact.confidence >= 0.6)

    def test_repa_without_store_fails_fast(self, district_task, templates, mock_backend):
        with pytest.raises(StepFailure) as excinfo:
            run(
                district_task,
                PipelineConfig(),
                mock_backend,
                templates=templates,
                store=None,
            )
        assert excinfo.value.step == 1
        assert excinfo.value.partial_segments == ()

    def test_midway_transport_failure_preserves_partial_progress(
        self, district_task, retrieval_store, templates
    ):
        from imitext.backends import ScriptedTransport

        scripted = ScriptedTransport()
        calls = {"n": 0}

        def flaky(request: BackendRequest) -> str:
            calls["n"] += 1
            if calls["n"] > 6:  # first segment completes, second does not
                raise TransportError("connection dropped")
            return scripted.complete(request)

        backend = Backend(transport=CannedTransport(flaky), profile_name="canned")
        with pytest.raises(StepFailure) as excinfo:
            run_repa(
                district_task,
                PipelineConfig(),
                backend,
                templates=templates,
                store=retrieval_store,
            )
        failure = excinfo.value
        assert failure.instance_id == district_task.id
        assert failure.step == 2
        assert len(failure.partial_segments) == 1
        assert len(failure.partial_trace) == 1
        assert isinstance(failure.cause, TransportError)


class TestResultIo:
    def _result(self, district_task, retrieval_store, templates, mock_backend):
        return run(
            district_task,
            PipelineConfig(),
            mock_backend,
            templates=templates,
            store=retrieval_store,
        )

    def test_dict_round_trip_preserves_everything(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        result = self._result(district_task, retrieval_store, templates, mock_backend)
        clone = result_from_dict(result_to_dict(result))
        assert clone == result

    def test_trace_can_be_omitted(self, district_task, retrieval_store, templates, mock_backend):
        result = self._result(district_task, retrieval_store, templates, mock_backend)
        row = result_to_dict(result, include_trace=False)
        assert "trace" not in row
        clone = result_from_dict(row)
        assert clone.trace == ()
        assert clone.output_text == result.output_text

    def test_write_then_read_results(
        self, tmp_path, district_task, retrieval_store, templates, mock_backend
    ):
        result = self._result(district_task, retrieval_store, templates, mock_backend)
        path = tmp_path / "results.jsonl"
        write_results(str(path), [result])
        assert read_results(str(path)) == [result]

    def test_read_results_rejects_failure_rows(self, tmp_path):
        path = tmp_path / "results.jsonl"
        failure_row = {
            "instance_id": "broken",
            "failed_at_step": 2,
            "error": "TransportError: connection dropped",
            "partial_segments": ["one segment"],
        }
        path.write_text(json.dumps(failure_row) + "\n")
        with pytest.raises(ValidationError) as excinfo:
            read_results(str(path))
        assert "broken" in str(excinfo.value)

    def test_failures_serialize_alongside_results(
        self, tmp_path, district_task, retrieval_store, templates
    ):
        def failing(request: BackendRequest) -> str:
            raise TransportError("down")

        backend = Backend(transport=CannedTransport(failing), profile_name="canned")
        with pytest.raises(StepFailure) as excinfo:
            run_repa(
                district_task,
                PipelineConfig(),
                backend,
                templates=templates,
                store=retrieval_store,
            )
        path = tmp_path / "results.jsonl"
        write_results(str(path), [excinfo.value])
        row = json.loads(path.read_text().splitlines()[0])
        assert row["failed_at_step"] == 1
        assert row["instance_id"] == district_task.id
        assert "TransportError" in row["error"]


class TestBaselineShapes:
    def test_llm_baseline_substitutes_topic_in_prompt(
        self, district_task, templates, mock_backend
    ):
        result = run_baseline(
            district_task,
            PipelineConfig(strategy="llm", retrieval_enabled=False),
            mock_backend,
            templates=templates,
        )
        assert result.instance_id == district_task.id
        assert result.output_text
        assert result.call_count == 1

    def test_rom_outputs_one_segment_per_source_sentence(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        result = run_baseline(
            district_task,
            PipelineConfig(strategy="rom"),
            mock_backend,
            templates=templates,
            store=retrieval_store,
        )
        assert len(result.segments) == 3
        assert result.output_text == " ".join(result.segments)

    def test_run_dispatches_on_strategy(
        self, district_task, retrieval_store, templates, mock_backend
    ):
        repa = run(
            district_task,
            PipelineConfig(),
            mock_backend,
            templates=templates,
            store=retrieval_store,
        )
        assert repa.call_count == 18
