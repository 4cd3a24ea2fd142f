"""Ground-truth oracle backend with optional false-negative/false-positive noise.

A candidate is truly relevant to a document when it is one of the document's
gold codes or an ancestor of one. Noise draws are keyed on
``(seed, doc_id, code)`` so a seeded run gives the same decisions regardless of
how documents are scheduled across workers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping, Sequence

from treecoder.llm.base import Backend, BackendError, CompletionRequest, CompletionResponse
from treecoder.ontology import Ontology


@dataclass(frozen=True)
class OracleConfig:
    gold: Mapping[str, frozenset[str]]
    false_negative_rate: float = 0.0
    false_positive_rate: float = 0.0
    rng_seed: int = 0
    affirmative: str = "relevant"
    negative: str = "not relevant"
    line_format: str = "- {description}"

    def __post_init__(self) -> None:
        for name in ("false_negative_rate", "false_positive_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


def keyed_uniform(seed: int, *parts: str) -> float:
    """Deterministic uniform draw in [0, 1) from a seed and a key."""
    digest = hashlib.sha256("\x1f".join((str(seed), *parts)).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def relevant_set(oracle: OracleConfig, doc_id: str, ontology: Ontology) -> frozenset[str]:
    try:
        gold = oracle.gold[doc_id]
    except KeyError:
        raise BackendError(f"oracle has no gold labels for doc {doc_id!r}") from None
    relevant = set(gold)
    for code in gold:
        relevant.update(ontology.ancestors(code))
    return frozenset(relevant)


def oracle_decisions(
    oracle: OracleConfig, doc_id: str, candidate_codes: Sequence[str], ontology: Ontology
) -> list[tuple[str, bool]]:
    truth = relevant_set(oracle, doc_id, ontology)
    out = []
    for code in candidate_codes:
        u = keyed_uniform(oracle.rng_seed, doc_id, code)
        if code in truth:
            out.append((code, u >= oracle.false_negative_rate))
        else:
            out.append((code, u < oracle.false_positive_rate))
    return out


def oracle_complete(
    oracle: OracleConfig, doc_id: str, candidate_codes: Sequence[str], ontology: Ontology
) -> CompletionResponse:
    lines = []
    for code, relevant in oracle_decisions(oracle, doc_id, candidate_codes, ontology):
        bullet = oracle.line_format.format(description=ontology.description(code))
        lines.append(f"{bullet}: {oracle.affirmative if relevant else oracle.negative}")
    return CompletionResponse(text="\n".join(lines), backend_id="oracle")


def oracle_coder_complete(oracle: OracleConfig, doc_id: str, ontology: Ontology) -> CompletionResponse:
    """Answer a clinical-coder prompt: one ``CODE - description`` line per kept gold code."""
    if doc_id not in oracle.gold:
        raise BackendError(f"oracle has no gold labels for doc {doc_id!r}")
    lines = []
    for code in sorted(oracle.gold[doc_id]):
        if keyed_uniform(oracle.rng_seed, doc_id, "coder", code) >= oracle.false_negative_rate:
            lines.append(f"{code} - {ontology.description(code)}")
    return CompletionResponse(text="\n".join(lines), backend_id="oracle")


class OracleBackend(Backend):
    def __init__(self, oracle: OracleConfig, ontology: Ontology):
        super().__init__()
        self.oracle = oracle
        self.ontology = ontology
        self.backend_id = (
            f"oracle(fn={oracle.false_negative_rate},fp={oracle.false_positive_rate},seed={oracle.rng_seed})"
        )

    def _complete(self, request: CompletionRequest) -> CompletionResponse:
        if request.doc_id is None:
            raise BackendError("oracle backend needs request.doc_id")
        if request.candidate_codes:
            resp = oracle_complete(self.oracle, request.doc_id, request.candidate_codes, self.ontology)
        else:
            resp = oracle_coder_complete(self.oracle, request.doc_id, self.ontology)
        return CompletionResponse(text=resp.text, backend_id=self.backend_id)
