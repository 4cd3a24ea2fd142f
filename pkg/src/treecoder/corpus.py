"""Case-note documents and document-level gold labels."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path

from treecoder.ontology import Ontology
from treecoder.text import canonical_code

log = logging.getLogger(__name__)


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CaseNote:
    doc_id: str
    text: str


@dataclass
class FilterReport:
    """Counts of gold (doc, code) pairs dropped or kept during ingestion."""

    unknown: int = 0
    non_assignable: int = 0
    kept: int = 0
    distinct_codes_before: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


def load_documents(directory: str | Path) -> list[CaseNote]:
    directory = Path(directory)
    if not directory.is_dir():
        raise CorpusError(f"{directory}: not a directory")
    notes: dict[str, CaseNote] = {}
    for path in directory.iterdir():
        if path.suffix != ".txt" or not path.is_file():
            continue
        doc_id = path.stem
        if doc_id in notes:
            raise CorpusError(f"duplicate doc_id {doc_id!r} in {directory}")
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise CorpusError(f"{path}: unreadable ({exc})") from exc
        if not text.strip():
            raise CorpusError(f"{path}: empty document")
        notes[doc_id] = CaseNote(doc_id, text)
    if not notes:
        raise CorpusError(f"{directory}: no .txt documents found")
    return [notes[k] for k in sorted(notes)]


def read_label_pairs(path: str | Path) -> list[tuple[str, str]]:
    """Read raw ``doc_id<TAB>code`` rows, canonicalizing codes."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"{path}: unreadable ({exc})") from exc
    pairs = []
    for line_no, line in enumerate(lines, 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0].strip() or not fields[1].strip():
            raise CorpusError(f"{path}:{line_no}: malformed row {line!r}, expected doc_id<TAB>code")
        pairs.append((fields[0].strip(), canonical_code(fields[1])))
    return pairs


def load_gold_labels(
    path: str | Path, ontology: Ontology
) -> tuple[dict[str, frozenset[str]], FilterReport]:
    """Group label rows per document, keeping only assignable ontology codes.

    Documents whose every label was filtered still appear with an empty set.
    """
    pairs = set(read_label_pairs(path))
    report = FilterReport(distinct_codes_before=len({code for _, code in pairs}))
    gold: dict[str, set[str]] = {}
    for doc_id, code in sorted(pairs):
        codes = gold.setdefault(doc_id, set())
        if code not in ontology:
            report.unknown += 1
        elif not ontology.is_assignable(code):
            report.non_assignable += 1
        else:
            report.kept += 1
            codes.add(code)
    if report.unknown or report.non_assignable:
        log.info(
            "gold filter: dropped %d unknown and %d non-assignable labels, kept %d",
            report.unknown,
            report.non_assignable,
            report.kept,
        )
    return {doc: frozenset(codes) for doc, codes in sorted(gold.items())}, report


def read_predictions(path: str | Path) -> dict[str, frozenset[str]]:
    """Read a predictions TSV without ontology filtering."""
    grouped: dict[str, set[str]] = defaultdict(set)
    for doc_id, code in read_label_pairs(path):
        grouped[doc_id].add(code)
    return {doc: frozenset(codes) for doc, codes in sorted(grouped.items())}


def write_predictions(path: str | Path, predictions: dict[str, frozenset[str]] | dict[str, set[str]]) -> None:
    rows = sorted((doc, code) for doc, codes in predictions.items() for code in codes)
    Path(path).write_text("".join(f"{doc}\t{code}\n" for doc, code in rows), encoding="utf-8")
