"""LLM-guided tree search over the ontology.

Starting from the root's children, each step shows the model one parent's
children as candidate descriptions, parses which ones it judged relevant,
collects relevant assignable codes, and queues relevant internal codes for
expansion. The loop stops when the queue is empty or the prompt budget is
spent.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from treecoder.corpus import CaseNote, write_predictions
from treecoder.llm.base import Backend, BackendError, CompletionRequest
from treecoder.ontology import Ontology
from treecoder.parsing import ParsedDecision, match_code_descriptions, parse_warning
from treecoder.prompting import PromptTemplate, render_tree_prompt

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 50


@dataclass(frozen=True)
class GenerationParams:
    model_id: str = "default"
    temperature: float = 0.0
    max_output_tokens: int = 1024


@dataclass
class SearchStep:
    prompt_index: int
    parent_code: str
    candidate_codes: list[str]
    raw_response: str
    decisions: list[ParsedDecision]

    def to_dict(self) -> dict:
        return {
            "prompt_index": self.prompt_index,
            "parent_code": self.parent_code,
            "candidate_codes": list(self.candidate_codes),
            "raw_response": self.raw_response,
            "decisions": [
                {"code": d.code, "polarity": d.polarity, "matched_line": d.matched_line}
                for d in self.decisions
            ],
        }


@dataclass
class SearchTrace:
    steps: list[SearchStep] = field(default_factory=list)
    relevant_by_level: dict[int, set[str]] = field(default_factory=dict)
    parse_warnings: list[dict] = field(default_factory=list)
    template_id: str = ""
    backend_id: str = ""

    @property
    def prompts_used(self) -> int:
        return len(self.steps)


@dataclass
class SearchResult:
    doc_id: str
    assigned_codes: list[str]
    trace: SearchTrace
    truncated: bool = False
    sibling_conflicts: list[dict] = field(default_factory=list)
    error: str | None = None

    @property
    def codes(self) -> frozenset[str]:
        return frozenset(self.assigned_codes)

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "template_id": self.trace.template_id,
            "backend_id": self.trace.backend_id,
            "prompts_used": self.trace.prompts_used,
            "truncated": self.truncated,
            "assigned_codes": sorted(self.assigned_codes),
            "relevant_by_level": {
                str(level): sorted(codes) for level, codes in sorted(self.trace.relevant_by_level.items())
            },
            "sibling_conflicts": self.sibling_conflicts,
            "parse_warnings": self.trace.parse_warnings,
            "error": self.error,
            "steps": [s.to_dict() for s in self.trace.steps],
        }


class SearchError(RuntimeError):
    """A document's search aborted; ``partial`` keeps the trace so far."""

    def __init__(self, message: str, partial: SearchResult):
        super().__init__(message)
        self.partial = partial


def sibling_conflicts(codes: Sequence[str], ontology: Ontology) -> list[dict]:
    """Groups of assigned codes sharing a parent.

    Siblings are often mutually exclusive (with/without complication); they
    are reported, not suppressed.
    """
    by_parent: dict[str, list[str]] = {}
    for code in codes:
        by_parent.setdefault(ontology.parent(code) or "", []).append(code)
    return [
        {"parent": parent, "codes": sorted(kids)}
        for parent, kids in sorted(by_parent.items())
        if len(kids) > 1
    ]


def search_tree(
    note: CaseNote,
    ontology: Ontology,
    backend: Backend,
    template: PromptTemplate,
    budget: int | None = DEFAULT_BUDGET,
    *,
    params: GenerationParams = GenerationParams(),
    frontier: str = "fifo",
    token_boundary: bool = False,
) -> SearchResult:
    """Assign codes to one note. ``budget=None`` removes the prompt limit."""
    if budget is not None and budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if frontier not in ("fifo", "lifo"):
        raise ValueError(f"frontier must be 'fifo' or 'lifo', got {frontier!r}")

    trace = SearchTrace(template_id=template.template_id, backend_id=backend.backend_id)
    assigned: list[str] = []
    queue: deque[str] = deque()
    queued: set[str] = set()
    parent = ontology.root
    truncated = False

    def result(error: str | None = None) -> SearchResult:
        return SearchResult(
            doc_id=note.doc_id,
            assigned_codes=list(assigned),
            trace=trace,
            truncated=truncated,
            sibling_conflicts=sibling_conflicts(assigned, ontology),
            error=error,
        )

    while True:
        candidates = [(c.code, c.description) for c in ontology.children(parent)]
        if candidates:
            request = CompletionRequest(
                user_text=render_tree_prompt(template, note, candidates),
                system_text=template.system_text,
                model_id=params.model_id,
                temperature=params.temperature,
                max_output_tokens=params.max_output_tokens,
                doc_id=note.doc_id,
                candidate_codes=tuple(code for code, _ in candidates),
            )
            try:
                response = backend.complete(request)
            except BackendError as exc:
                log.warning("doc %s: backend failed at prompt %d: %s", note.doc_id, trace.prompts_used, exc)
                raise SearchError(str(exc), result(error=str(exc))) from exc

            parsed = match_code_descriptions(
                response.text,
                candidates,
                template.affirmative_markers,
                template.negative_markers,
                token_boundary=token_boundary,
            )
            decisions: list[ParsedDecision] = []
            seen: set[str] = set()
            for d in parsed:
                if d.code not in seen:
                    seen.add(d.code)
                    decisions.append(d)
            prompt_index = trace.prompts_used
            trace.steps.append(
                SearchStep(prompt_index, parent, [c for c, _ in candidates], response.text, decisions)
            )
            reason = parse_warning(response.text, decisions)
            if reason:
                trace.parse_warnings.append({"doc_id": note.doc_id, "prompt_index": prompt_index, "reason": reason})

            for d in decisions:
                if not d.relevant:
                    continue
                trace.relevant_by_level.setdefault(ontology.level(d.code), set()).add(d.code)
                if ontology.is_assignable(d.code):
                    if d.code not in assigned:
                        assigned.append(d.code)
                elif d.code not in queued:
                    queued.add(d.code)
                    queue.append(d.code)

        if not queue:
            break
        if budget is not None and trace.prompts_used >= budget:
            truncated = True
            break
        parent = queue.popleft() if frontier == "fifo" else queue.pop()

    return result()


@dataclass
class CorpusRun:
    results: dict[str, SearchResult]
    failures: dict[str, SearchResult]

    @property
    def predictions(self) -> dict[str, frozenset[str]]:
        return {doc: r.codes for doc, r in self.results.items()}

    def prompts_used(self) -> int:
        return sum(r.trace.prompts_used for r in [*self.results.values(), *self.failures.values()])


def run_documents(
    notes: Sequence[CaseNote], one: Callable[[CaseNote], SearchResult], workers: int = 1
) -> CorpusRun:
    """Apply ``one`` to every note, ``workers`` documents at a time."""
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    def guarded(note: CaseNote) -> tuple[SearchResult, bool]:
        try:
            return one(note), True
        except SearchError as exc:
            return exc.partial, False

    if workers == 1:
        outcomes = [guarded(n) for n in notes]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(guarded, notes))
    results = {r.doc_id: r for r, ok in sorted(outcomes, key=lambda o: o[0].doc_id) if ok}
    failures = {r.doc_id: r for r, ok in sorted(outcomes, key=lambda o: o[0].doc_id) if not ok}
    return CorpusRun(results, failures)


def run_corpus(
    notes: Sequence[CaseNote],
    ontology: Ontology,
    backend: Backend,
    template: PromptTemplate,
    budget: int | None = DEFAULT_BUDGET,
    workers: int = 1,
    *,
    params: GenerationParams = GenerationParams(),
    frontier: str = "fifo",
    token_boundary: bool = False,
) -> CorpusRun:
    return run_documents(
        notes,
        lambda note: search_tree(
            note,
            ontology,
            backend,
            template,
            budget,
            params=params,
            frontier=frontier,
            token_boundary=token_boundary,
        ),
        workers,
    )


def write_run(run: CorpusRun, output_dir: str | Path) -> None:
    """Write ``predictions.tsv``, ``traces/<doc_id>.json`` and ``failures.json``."""
    out = Path(output_dir)
    traces = out / "traces"
    traces.mkdir(parents=True, exist_ok=True)
    write_predictions(out / "predictions.tsv", run.predictions)
    for result in [*run.results.values(), *run.failures.values()]:
        (traces / f"{result.doc_id}.json").write_text(
            json.dumps(result.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    failures = [{"doc_id": doc, "error": r.error} for doc, r in run.failures.items()]
    (out / "failures.json").write_text(json.dumps(failures, indent=2) + "\n", encoding="utf-8")


def load_traces(trace_dir: str | Path) -> dict[str, dict[int, frozenset[str]]]:
    """Read ``relevant_by_level`` from every trace file in ``trace_dir``."""
    out = {}
    for path in sorted(Path(trace_dir).glob("*.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        out[data["doc_id"]] = {int(k): frozenset(v) for k, v in data["relevant_by_level"].items()}
    return out
