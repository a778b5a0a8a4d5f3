import pytest

from sotkit.backend import BackendConfig, MockBackend, MockEntry, MockScript
from sotkit.prompt_kit import ModelProfile

QUESTION = "Describe three memorable things about visiting a new city."


def pipeline_entries(normal_text: str | None = None) -> list[MockEntry]:
    """Scripted three-point pipeline used across the suite.

    Skeleton: 60 decode tokens at 2.0 s total; points: 100 decode tokens at
    1.0 / 1.2 / 0.9 s; normal: 600 decode tokens at 0.01 s/token = 6.0 s.
    Prefill accounting: normal 10, skeleton 150, points 243 + 243 + 244 = 730.
    """
    if normal_text is None:
        normal_text = "A long sequential answer. " * 40
    return [
        MockEntry(match="provide the skeleton",
                  text="1. Alpha.\n2. Beta.\n3. Gamma.",
                  decode_per_token=2.0 / 60, completion_tokens=60,
                  prompt_tokens=150),
        MockEntry(match="writing of point 1.", text=" First detail sentence.",
                  decode_per_token=0.01, completion_tokens=100,
                  prompt_tokens=243),
        MockEntry(match="writing of point 2.", text=" Second detail sentence.",
                  decode_per_token=0.012, completion_tokens=100,
                  prompt_tokens=243),
        MockEntry(match="writing of point 3.", text=" Third detail sentence.",
                  decode_per_token=0.009, completion_tokens=100,
                  prompt_tokens=244),
        MockEntry(match="Just say A, B, or C", text="A"),
        MockEntry(match=QUESTION, exact=True, text=normal_text,
                  decode_per_token=0.01, completion_tokens=600,
                  prompt_tokens=10),
    ]


@pytest.fixture
def profile() -> ModelProfile:
    return ModelProfile(model_id="mock", include_demos=True,
                        partial_answer_mode="assistant-message")


@pytest.fixture
def mock_backend() -> MockBackend:
    return MockBackend(BackendConfig(kind="mock"), MockScript(pipeline_entries()))
