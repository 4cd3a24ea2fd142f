"""Turn raw completion text into code decisions.

Three matchers live here: the tree-search matcher, which resolves each response
line to at most one of the prompt's candidate descriptions (longest first), and
the two clinical-coder baseline matchers, which look for code IDs or for exact
ontology descriptions anywhere in a free-form answer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from treecoder.ontology import Ontology
from treecoder.text import canonical_code, normalize_text

__all__ = [
    "ParsedDecision",
    "extract_codes_by_description",
    "extract_codes_by_id",
    "match_code_descriptions",
    "normalize_text",
    "parse_warning",
]

RELEVANT = "relevant"
NOT_RELEVANT = "not_relevant"

CODE_TOKEN = re.compile(r"(?<![0-9A-Za-z.])([A-Za-z][0-9A-Za-z]{2}(?:\.?[0-9A-Za-z]{1,4})?)(?![0-9A-Za-z])")
_LIST_MARKER = re.compile(r"^\s*(?:[-*•·+]+|\(?\d+[.)])\s*")
_LEADING_CODE = re.compile(r"^([A-Za-z]\d[0-9A-Za-z](?:\.?[0-9A-Za-z]{1,4})?)\s*(?:[-–—:]\s*|\s+)")


@dataclass(frozen=True)
class ParsedDecision:
    code: str
    polarity: str
    matched_line: str

    @property
    def relevant(self) -> bool:
        return self.polarity == RELEVANT


def _marker_pattern(markers: Sequence[str]) -> re.Pattern | None:
    parts = sorted({normalize_text(m) for m in markers if m.strip()}, key=len, reverse=True)
    if not parts:
        return None
    return re.compile(r"(?<!\w)(?:" + "|".join(re.escape(p) for p in parts) + r")(?!\w)")


def match_code_descriptions(
    response: str,
    candidates: Sequence[tuple[str, str]],
    affirmative_markers: Sequence[str] = ("relevant", "yes"),
    negative_markers: Sequence[str] = ("not relevant", "irrelevant", "no"),
    *,
    token_boundary: bool = False,
) -> list[ParsedDecision]:
    """Resolve each line of ``response`` to at most one candidate code.

    Candidates are tried longest normalized description first (ties keep
    prompt order), so a line naming "Nonpneumonic Legionnaires' disease" is
    never credited to "Legionnaires' disease". After a match the rest of the
    line is scanned for a negative marker, then an affirmative one; a line
    with neither counts as relevant. Candidates no line mentions get no
    decision.
    """
    normalized = [(code, normalize_text(desc)) for code, desc in candidates]
    order = sorted(range(len(normalized)), key=lambda i: (-len(normalized[i][1]), i))
    neg = _marker_pattern(negative_markers)
    # affirmative_markers never change the outcome: unmarked lines already count as relevant
    boundary = (
        {i: re.compile(r"(?<!\w)" + re.escape(normalized[i][1]) + r"(?!\w)") for i in order}
        if token_boundary
        else None
    )

    decisions = []
    for line in response.splitlines():
        text = normalize_text(line)
        if not text:
            continue
        for i in order:
            code, desc = normalized[i]
            if not desc:
                continue
            if boundary is not None:
                if not boundary[i].search(text):
                    continue
                residual = boundary[i].sub(" ", text, count=1)
            else:
                if desc not in text:
                    continue
                residual = text.replace(desc, " ", 1)
            if neg is not None and neg.search(residual):
                polarity = NOT_RELEVANT
            else:
                polarity = RELEVANT
            decisions.append(ParsedDecision(code, polarity, line))
            break
    return decisions


def parse_warning(response: str, decisions: Sequence[ParsedDecision]) -> str | None:
    """Reason string when a tree-search response yielded nothing usable."""
    if not response.strip():
        return "empty response"
    if not decisions:
        return "no candidate description matched"
    return None


def extract_codes_by_id(response: str, ontology: Ontology) -> set[str]:
    found = set()
    for match in CODE_TOKEN.finditer(response):
        code = canonical_code(match.group(1))
        if code in ontology and ontology.is_assignable(code):
            found.add(code)
    return found


def _description_keys(line: str) -> list[str]:
    stripped = _LIST_MARKER.sub("", line, count=1).strip()
    variants = [stripped, _LEADING_CODE.sub("", stripped, count=1)]
    keys = []
    for v in variants:
        key = normalize_text(v)
        keys.append(key)
        keys.append(key.rstrip(".;,").strip())
    return keys


def extract_codes_by_description(response: str, ontology: Ontology) -> set[str]:
    found = set()
    index = ontology.description_index
    for line in response.splitlines():
        for key in _description_keys(line):
            code = index.get(key)
            if code is not None and ontology.is_assignable(code):
                found.add(code)
                break
    return found
