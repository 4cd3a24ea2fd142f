"""Single-prompt clinical-coder baseline.

The model is asked for codes directly and its answer is resolved either by
code IDs or by exact ontology descriptions. A model that pairs a right code
with a wrong description (or the reverse) scores differently under the two
modes.
"""

from __future__ import annotations

from typing import Sequence

from treecoder.corpus import CaseNote
from treecoder.llm.base import Backend, BackendError, CompletionRequest
from treecoder.ontology import Ontology
from treecoder.parsing import (
    RELEVANT,
    ParsedDecision,
    extract_codes_by_description,
    extract_codes_by_id,
)
from treecoder.prompting import PromptTemplate, render_coder_prompt
from treecoder.search import (
    CorpusRun,
    GenerationParams,
    SearchError,
    SearchResult,
    SearchStep,
    SearchTrace,
    run_documents,
    sibling_conflicts,
)

MODES = ("match-codes", "match-descriptions")


def code_document(
    note: CaseNote,
    ontology: Ontology,
    backend: Backend,
    template: PromptTemplate,
    mode: str = "match-codes",
    *,
    params: GenerationParams = GenerationParams(),
) -> SearchResult:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    trace = SearchTrace(template_id=template.template_id, backend_id=backend.backend_id)
    request = CompletionRequest(
        user_text=render_coder_prompt(template, note),
        system_text=template.system_text,
        model_id=params.model_id,
        temperature=params.temperature,
        max_output_tokens=params.max_output_tokens,
        doc_id=note.doc_id,
    )
    try:
        response = backend.complete(request)
    except BackendError as exc:
        partial = SearchResult(note.doc_id, [], trace, error=str(exc))
        raise SearchError(str(exc), partial) from exc

    if mode == "match-codes":
        codes = sorted(extract_codes_by_id(response.text, ontology))
    else:
        codes = sorted(extract_codes_by_description(response.text, ontology))
    decisions = [ParsedDecision(code, RELEVANT, "") for code in codes]
    trace.steps.append(SearchStep(0, ontology.root, [], response.text, decisions))
    for code in codes:
        trace.relevant_by_level.setdefault(ontology.level(code), set()).add(code)
    if not codes:
        reason = "empty response" if not response.text.strip() else "no codes recognised"
        trace.parse_warnings.append({"doc_id": note.doc_id, "prompt_index": 0, "reason": reason})
    return SearchResult(
        doc_id=note.doc_id,
        assigned_codes=codes,
        trace=trace,
        sibling_conflicts=sibling_conflicts(codes, ontology),
    )


def run_baseline(
    notes: Sequence[CaseNote],
    ontology: Ontology,
    backend: Backend,
    template: PromptTemplate,
    mode: str = "match-codes",
    workers: int = 1,
    *,
    params: GenerationParams = GenerationParams(),
) -> CorpusRun:
    return run_documents(
        notes, lambda note: code_document(note, ontology, backend, template, mode, params=params), workers
    )
