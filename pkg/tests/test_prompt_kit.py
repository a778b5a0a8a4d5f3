import pytest

from sotkit.errors import ConfigError, TemplateError
from sotkit.prompt_kit import (
    VERY_SHORTLY,
    ModelProfile,
    PromptTemplate,
    RequestPayload,
    assemble_normal_request,
    assemble_point_request,
    assemble_router_prompt,
    assemble_skeleton_request,
    build_multiround_history,
)

Q = "What are the typical types of Chinese dishes?"


class TestSkeletonRequest:
    def test_demos_included(self):
        payload = assemble_skeleton_request(Q, ModelProfile(include_demos=True))
        user_text = payload.messages[0][1]
        assert "What are the typical types of Chinese dishes?" in user_text
        assert "reduce their carbon emissions" in user_text
        assert user_text.rstrip().endswith("Skeleton:")
        assert payload.partial_answer == "1."

    def test_no_demos_single_question_occurrence(self):
        payload = assemble_skeleton_request("x", ModelProfile(include_demos=False))
        user_text = payload.messages[0][1]
        assert user_text.count("x\nSkeleton:") == 1
        assert payload.partial_answer == "1."

    def test_question_appears_exactly_once_without_demos(self):
        q = "a unique marker question zzqq"
        payload = assemble_skeleton_request(q, ModelProfile(include_demos=False))
        assert payload.rendered_prompt.count(q) == 1

    def test_instruction_appendix_mode(self):
        profile = ModelProfile(include_demos=False,
                               partial_answer_mode="instruction-appendix")
        payload = assemble_skeleton_request(Q, profile)
        text = payload.messages[-1][1]
        assert text.endswith('Please start your answer from "1." and do not '
                             'output other things before that')

    def test_assistant_message_mode(self):
        payload = assemble_skeleton_request(Q, ModelProfile())
        assert payload.messages[-1] == ("assistant", "1.")

    def test_continuation_suffix_concatenation(self):
        profile = ModelProfile(partial_answer_mode="continuation-suffix",
                               user_marker="USER: ", assistant_marker=" ASSISTANT:")
        payload = assemble_skeleton_request(Q, profile)
        text = payload.messages[0][1]
        assert text.startswith("USER: ")
        assert text.endswith(" ASSISTANT:1.")

    def test_empty_question_rejected(self):
        with pytest.raises(TemplateError):
            assemble_skeleton_request("", ModelProfile())

    def test_deterministic(self):
        a = assemble_skeleton_request(Q, ModelProfile())
        b = assemble_skeleton_request(Q, ModelProfile())
        assert a == b

    def test_demo_toggle_only_changes_demo_block(self):
        with_demos = assemble_skeleton_request(Q, ModelProfile(include_demos=True))
        without = assemble_skeleton_request(Q, ModelProfile(include_demos=False))
        suffix = f"{Q}\nSkeleton:"
        assert with_demos.messages[0][1].endswith(suffix)
        assert without.messages[0][1].endswith(suffix)


class TestPointRequest:
    def test_partial_answer_format(self):
        payload = assemble_point_request(Q, "1. A\n2. B\n3. Dim Sum.", 3,
                                         "Dim Sum.", ModelProfile())
        assert payload.partial_answer == "3. Dim Sum."

    def test_very_shortly_toggle(self):
        on = assemble_point_request(Q, "1. A", 1, "A", ModelProfile())
        off = assemble_point_request(Q, "1. A", 1, "A",
                                     ModelProfile(include_very_shortly=False))
        assert VERY_SHORTLY in on.rendered_prompt
        assert VERY_SHORTLY not in off.rendered_prompt

    def test_single_point_case(self):
        payload = assemble_point_request(Q, "1. Only.", 1, "Only.", ModelProfile())
        assert "1. Only." in payload.rendered_prompt
        assert payload.partial_answer == "1. Only."

    def test_indices_vary_only_in_substitutions(self):
        skeleton = "1. A\n2. B\n3. C"
        payloads = [assemble_point_request(Q, skeleton, i, t, ModelProfile())
                    for i, t in [(1, "A"), (2, "B"), (3, "C")]]
        bodies = [p.messages[0][1] for p in payloads]
        assert bodies[0].replace("point 1.", "point 2.") == bodies[1]
        assert [p.partial_answer for p in payloads] == ["1. A", "2. B", "3. C"]

    def test_empty_point_skeleton_rejected(self):
        with pytest.raises(TemplateError):
            assemble_point_request(Q, "1. A", 1, "", ModelProfile())


class TestRouterPrompt:
    def test_contains_three_options_and_question_once(self):
        payload = assemble_router_prompt("How do trains work?")
        text = payload.rendered_prompt
        assert text.count("How do trains work?") == 1
        for option in ("A. Organize", "B. Organize", "C. Do not organize"):
            assert option in text

    def test_newline_preserved(self):
        payload = assemble_router_prompt("line one\nline two")
        assert "line one\nline two" in payload.rendered_prompt

    def test_empty_question_rejected(self):
        with pytest.raises(TemplateError):
            assemble_router_prompt("")


class TestMultiRoundHistory:
    def test_two_message_history(self):
        assert build_multiround_history("hi", "1. A\n2. B") == (
            ("user", "hi"), ("assistant", "1. A\n2. B"))

    def test_history_has_no_scaffolding(self):
        history = build_multiround_history(Q, "1. Dumplings. Yes.\n\n2. Noodles. Yes.")
        assert len(history) == 2
        assert "provide the skeleton" not in history[0][1]

    def test_round_trip_keeps_alternation_valid(self):
        history = build_multiround_history("q1", "a1")
        payload = assemble_normal_request("q2", ModelProfile(), history=history)
        roles = [r for r, _ in payload.messages]
        assert roles == ["user", "assistant", "user"]

    def test_empty_inputs_rejected(self):
        with pytest.raises(ConfigError):
            build_multiround_history("", "a")


class TestPayloadInvariants:
    def test_role_alternation_enforced(self):
        with pytest.raises(ConfigError):
            RequestPayload(messages=(("assistant", "a"), ("assistant", "b")))

    def test_unknown_placeholder_rejected(self):
        with pytest.raises(TemplateError):
            PromptTemplate(name="bad", body="hello {nope}")

    def test_user_text_with_braces_passes_through(self):
        payload = assemble_normal_request("code: {x: 1}", ModelProfile())
        assert "{x: 1}" in payload.rendered_prompt

    def test_continuation_suffix_requires_markers(self):
        with pytest.raises(ConfigError):
            ModelProfile(partial_answer_mode="continuation-suffix")

    def test_bad_partial_answer_mode(self):
        with pytest.raises(ConfigError):
            ModelProfile(partial_answer_mode="bogus")
