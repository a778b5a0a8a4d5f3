"""Request assembly: templates plus per-model adaptation rules.

Every payload in the pipeline (skeleton, point-expanding, router, normal) is
built here. Templates are plain UTF-8 files with "{name}" placeholders drawn
from a fixed set; per-model differences (demonstrations, the "**very
shortly**" phrase, how the partial answer is attached, conversation markers)
live in ModelProfile so prompts can be swapped without touching code.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .datasets import approx_tokens
from .errors import ConfigError, TemplateError

PLACEHOLDERS = ("question", "skeleton", "point_index", "point_skeleton")

_PLACEHOLDER_RE = re.compile(r"\{(%s)\}" % "|".join(PLACEHOLDERS))

PARTIAL_ANSWER_MODES = ("continuation-suffix", "assistant-message", "instruction-appendix")

VERY_SHORTLY = "**very shortly**"


def render(text: str, bindings: dict[str, str]) -> str:
    """Single-pass substitution of the named placeholders.

    Substituted values are never rescanned, so user text containing braces
    passes through verbatim. An unbound placeholder is a template error.
    """

    def _sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in bindings:
            raise TemplateError(f"unbound placeholder {{{name}}}")
        return bindings[name]

    rendered = _PLACEHOLDER_RE.sub(_sub, text)
    if _PLACEHOLDER_RE.search(rendered):
        raise TemplateError("residual placeholder marker after rendering")
    return rendered


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    partial_answer: str = ""

    def __post_init__(self):
        for chunk in (self.body, self.partial_answer):
            for match in re.finditer(r"\{(\w+)\}", chunk):
                if match.group(1) not in PLACEHOLDERS:
                    raise TemplateError(
                        f"template {self.name!r}: unknown placeholder "
                        f"{{{match.group(1)}}}")

    def render_body(self, **bindings: str) -> str:
        return render(self.body, bindings)

    def render_partial(self, **bindings: str) -> str:
        return render(self.partial_answer, bindings)


def _read_template(name: str, directory: str | Path | None = None) -> PromptTemplate:
    if directory is not None:
        base = Path(directory)
        body = (base / f"{name}.txt").read_text(encoding="utf-8")
        partial_path = base / f"{name}.partial.txt"
        partial = partial_path.read_text(encoding="utf-8") if partial_path.exists() else ""
    else:
        pkg = resources.files(__package__) / "templates"
        body = (pkg / f"{name}.txt").read_text(encoding="utf-8")
        partial_file = pkg / f"{name}.partial.txt"
        partial = partial_file.read_text(encoding="utf-8") if partial_file.is_file() else ""
    return PromptTemplate(name=name, body=body, partial_answer=partial)


@dataclass(frozen=True)
class TemplateSet:
    skeleton: PromptTemplate
    skeleton_demos: PromptTemplate
    point_expand: PromptTemplate
    router: PromptTemplate
    normal: PromptTemplate

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "TemplateSet":
        return cls(
            skeleton=_read_template("skeleton", directory),
            skeleton_demos=_read_template("skeleton_demos", directory),
            point_expand=_read_template("point_expand", directory),
            router=_read_template("router", directory),
            normal=_read_template("normal", directory),
        )


_DEFAULT_TEMPLATES: TemplateSet | None = None


def default_templates() -> TemplateSet:
    global _DEFAULT_TEMPLATES
    if _DEFAULT_TEMPLATES is None:
        _DEFAULT_TEMPLATES = TemplateSet.load()
    return _DEFAULT_TEMPLATES


@dataclass(frozen=True)
class ModelProfile:
    model_id: str = "mock"
    include_demos: bool = True
    include_very_shortly: bool = True
    partial_answer_mode: str = "assistant-message"
    user_marker: str = ""
    assistant_marker: str = ""
    use_system_message: bool = False
    system_message: str = ""
    max_new_tokens: int | None = None
    temperature: float | None = None

    def __post_init__(self):
        if self.partial_answer_mode not in PARTIAL_ANSWER_MODES:
            raise ConfigError(
                f"partial_answer_mode must be one of {PARTIAL_ANSWER_MODES}, "
                f"got {self.partial_answer_mode!r}")
        if self.partial_answer_mode == "continuation-suffix":
            if not self.user_marker or not self.assistant_marker:
                raise ConfigError(
                    "continuation-suffix mode needs user_marker and assistant_marker")


def load_profile(path: str | Path) -> ModelProfile:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return ModelProfile(**doc)
    except TypeError as exc:
        raise ConfigError(f"bad profile {path}: {exc}") from exc


@dataclass(frozen=True)
class RequestPayload:
    messages: tuple[tuple[str, str], ...]
    max_new_tokens: int | None = None
    temperature: float | None = None
    model: str = ""
    partial_answer: str = ""

    def __post_init__(self):
        prev_role = None
        for role, _text in self.messages:
            if role not in ("system", "user", "assistant"):
                raise ConfigError(f"bad message role {role!r}")
            if role != "system" and role == prev_role:
                raise ConfigError("messages must alternate roles")
            prev_role = role

    @property
    def rendered_prompt(self) -> str:
        return "\n".join(text for _role, text in self.messages)

    @property
    def rendered_prompt_token_estimate(self) -> int:
        return approx_tokens(self.rendered_prompt)

    def to_json(self) -> dict:
        return {
            "messages": [{"role": r, "content": t} for r, t in self.messages],
            "max_new_tokens": self.max_new_tokens,
            "temperature": self.temperature,
            "model": self.model,
            "partial_answer": self.partial_answer,
        }


START_FROM_SENTENCE = (
    'Please start your answer from "{partial}" and do not output other things before that')


def _attach_partial(prompt_text: str, partial: str,
                    profile: ModelProfile) -> tuple[tuple[str, str], ...]:
    """Attach the assistant-side answer prefix per the profile's mode."""
    mode = profile.partial_answer_mode
    if not partial:
        return (("user", prompt_text),)
    if mode == "assistant-message":
        return (("user", prompt_text), ("assistant", partial))
    if mode == "continuation-suffix":
        merged = f"{profile.user_marker}{prompt_text}{profile.assistant_marker}{partial}"
        return (("user", merged),)
    # instruction-appendix
    sentence = START_FROM_SENTENCE.replace("{partial}", partial)
    return (("user", f"{prompt_text}\n{sentence}"),)


def _payload(messages: tuple[tuple[str, str], ...], profile: ModelProfile,
             partial: str,
             history: tuple[tuple[str, str], ...] = ()) -> RequestPayload:
    system: tuple[tuple[str, str], ...] = ()
    if profile.use_system_message and profile.system_message:
        system = (("system", profile.system_message),)
    return RequestPayload(
        messages=system + tuple(history) + messages,
        max_new_tokens=profile.max_new_tokens,
        temperature=profile.temperature,
        model=profile.model_id,
        partial_answer=partial,
    )


def assemble_skeleton_request(q: str, profile: ModelProfile,
                              templates: TemplateSet | None = None,
                              history: tuple[tuple[str, str], ...] = ()) -> RequestPayload:
    if not q:
        raise TemplateError("question must be non-empty")
    templates = templates or default_templates()
    tpl = templates.skeleton_demos if profile.include_demos else templates.skeleton
    body = tpl.render_body(question=q)
    partial = tpl.render_partial(question=q)
    messages = _attach_partial(body, partial, profile)
    return _payload(messages, profile, partial, history=history)


def assemble_point_request(q: str, skeleton_text: str, index: int,
                           point_skeleton: str, profile: ModelProfile,
                           templates: TemplateSet | None = None) -> RequestPayload:
    if index < 1:
        raise ConfigError("point index must be >= 1")
    if not point_skeleton:
        raise TemplateError("point skeleton must be non-empty")
    templates = templates or default_templates()
    tpl = templates.point_expand
    if not profile.include_very_shortly:
        tpl = replace(tpl, body=tpl.body.replace(f" {VERY_SHORTLY}", "").replace(VERY_SHORTLY, ""))
    bindings = dict(question=q, skeleton=skeleton_text,
                    point_index=str(index), point_skeleton=point_skeleton)
    body = render(tpl.body, bindings)
    partial = render(tpl.partial_answer, bindings)
    messages = _attach_partial(body, partial, profile)
    return _payload(messages, profile, partial)


def assemble_router_prompt(q: str, templates: TemplateSet | None = None,
                           profile: ModelProfile | None = None) -> RequestPayload:
    if not q:
        raise TemplateError("question must be non-empty")
    templates = templates or default_templates()
    body = templates.router.render_body(question=q)
    profile = profile or ModelProfile(use_system_message=False)
    return _payload((("user", body),), profile, "")


def assemble_normal_request(q: str, profile: ModelProfile,
                            templates: TemplateSet | None = None,
                            history: tuple[tuple[str, str], ...] = ()) -> RequestPayload:
    if not q:
        raise TemplateError("question must be non-empty")
    templates = templates or default_templates()
    body = templates.normal.render_body(question=q)
    messages = _attach_partial(body, "", profile)
    return _payload(messages, profile, "", history=history)


def build_multiround_history(q: str, final_answer: str) -> tuple[tuple[str, str], ...]:
    """History for the next round: the question and the aggregated answer only.

    None of the skeleton or point-expanding scaffolding is kept, so one
    round of skeleton-first generation adds no prefill cost to later rounds.
    """
    if not q or not final_answer:
        raise ConfigError("question and final answer must be non-empty")
    return (("user", q), ("assistant", final_answer))
