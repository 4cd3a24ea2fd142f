"""Prompt templates and rendering.

A template file is UTF-8 text with a YAML front-matter header between ``---``
lines, followed by the body::

    ---
    id: tree-gpt-v1
    kind: tree            # tree | coder
    family: gpt
    affirmative_markers: [relevant, yes]
    negative_markers: [not relevant, no]
    candidate_line_format: "- {description}"
    system: optional system message
    ---
    ...{case_note}...{code_descriptions}...

Placeholders are substituted in a single pass, so braces inside the case note
are never interpreted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import yaml

from treecoder.corpus import CaseNote

CASE_NOTE = "{case_note}"
CODE_DESCRIPTIONS = "{code_descriptions}"
_PLACEHOLDER = re.compile(r"\{case_note\}|\{code_descriptions\}")

BUILTIN_TEMPLATES = {
    "tree-gpt": "tree_gpt.txt",
    "tree-llama": "tree_llama.txt",
    "coder": "coder.txt",
}


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    kind: str
    family: str
    body: str
    affirmative_markers: tuple[str, ...] = ("relevant", "yes")
    negative_markers: tuple[str, ...] = ("not relevant", "irrelevant", "no")
    candidate_line_format: str = "- {description}"
    system_text: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("tree", "coder"):
            raise TemplateError(f"{self.template_id}: kind must be 'tree' or 'coder', got {self.kind!r}")
        if self.body.count(CASE_NOTE) != 1:
            raise TemplateError(f"{self.template_id}: body must contain {CASE_NOTE} exactly once")
        n_desc = self.body.count(CODE_DESCRIPTIONS)
        if self.kind == "tree" and n_desc != 1:
            raise TemplateError(f"{self.template_id}: tree body must contain {CODE_DESCRIPTIONS} exactly once")
        if self.kind == "coder" and n_desc:
            raise TemplateError(f"{self.template_id}: coder body must not contain {CODE_DESCRIPTIONS}")
        if self.kind == "tree":
            if not self.affirmative_markers or not self.negative_markers:
                raise TemplateError(f"{self.template_id}: marker lists must be non-empty")
            overlap = {m.casefold() for m in self.affirmative_markers} & {
                m.casefold() for m in self.negative_markers
            }
            if overlap:
                raise TemplateError(f"{self.template_id}: markers in both lists: {sorted(overlap)}")
            if "{description}" not in self.candidate_line_format:
                raise TemplateError(f"{self.template_id}: candidate_line_format lacks {{description}}")


def parse_template(text: str, default_id: str = "template") -> PromptTemplate:
    if not text.startswith("---"):
        raise TemplateError(f"{default_id}: missing front-matter header")
    try:
        _, header, body = text.split("---\n", 2)
    except ValueError:
        raise TemplateError(f"{default_id}: unterminated front-matter header") from None
    meta = yaml.safe_load(header) or {}
    kwargs = {
        "template_id": str(meta.get("id", default_id)),
        "kind": meta.get("kind", "tree"),
        "family": str(meta.get("family", "generic")),
        "body": body,
        "system_text": meta.get("system"),
    }
    for key in ("affirmative_markers", "negative_markers"):
        if key in meta:
            kwargs[key] = tuple(str(m) for m in meta[key])
    if "candidate_line_format" in meta:
        kwargs["candidate_line_format"] = meta["candidate_line_format"]
    return PromptTemplate(**kwargs)


def load_template(source: str | Path) -> PromptTemplate:
    """Load a template file, or a built-in by name (``tree-gpt``, ``tree-llama``, ``coder``)."""
    name = str(source)
    if name in BUILTIN_TEMPLATES:
        text = resources.files("treecoder.templates").joinpath(BUILTIN_TEMPLATES[name]).read_text("utf-8")
        return parse_template(text, name)
    path = Path(source)
    return parse_template(path.read_text(encoding="utf-8"), path.stem)


def _fill(body: str, values: dict[str, str]) -> str:
    return _PLACEHOLDER.sub(lambda m: values[m.group(0)], body)


def format_candidates(template: PromptTemplate, candidates: Sequence[tuple[str, str]]) -> str:
    return "\n".join(template.candidate_line_format.format(description=desc) for _, desc in candidates)


def render_tree_prompt(
    template: PromptTemplate, note: CaseNote, candidates: Sequence[tuple[str, str]]
) -> str:
    if template.kind != "tree":
        raise TemplateError(f"{template.template_id} is a {template.kind} template, not a tree template")
    if not candidates:
        raise ValueError("render_tree_prompt needs at least one candidate")
    return _fill(
        template.body,
        {CASE_NOTE: note.text, CODE_DESCRIPTIONS: format_candidates(template, candidates)},
    )


def render_coder_prompt(template: PromptTemplate, note: CaseNote) -> str:
    if template.kind != "coder":
        raise TemplateError(f"{template.template_id} is a {template.kind} template, not a coder template")
    return _fill(template.body, {CASE_NOTE: note.text})
