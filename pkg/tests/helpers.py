from __future__ import annotations

import random

from treecoder.ontology import ROOT, Ontology, OntologyRow

WORDS = (
    "acute chronic benign malignant viral bacterial congenital traumatic "
    "renal hepatic cardiac pulmonary ocular dermal spinal gastric neural "
    "fever pain infection lesion disorder syndrome neoplasm injury"
).split()


def make_ontology(triples: list[tuple[str, str, str]]) -> Ontology:
    """Build from (code, parent, description) triples; levels and flags derived."""
    parents = {p for _, p, _ in triples}
    level = {ROOT: 0}
    rows = [OntologyRow(ROOT, None, 0, False, "", 1)]
    for i, (code, parent, desc) in enumerate(triples, 2):
        level[code] = level[parent] + 1
        rows.append(OntologyRow(code, parent, level[code], code not in parents, desc, i))
    return Ontology.from_rows(rows)


def toy_ontology() -> Ontology:
    """root -> {C1, C2}, C1 -> {L1}, C2 -> {L2, L3}."""
    return make_ontology(
        [
            ("C1", ROOT, "First chapter"),
            ("L1", "C1", "Leaf one"),
            ("C2", ROOT, "Second chapter"),
            ("L2", "C2", "Leaf two"),
            ("L3", "C2", "Leaf three"),
        ]
    )


def chain_ontology(depth: int = 4, distractors: int = 2) -> Ontology:
    """One root-to-leaf chain of ``depth`` levels, each level padded with leaf distractors."""
    triples = []
    parent = ROOT
    for lvl in range(1, depth + 1):
        code = f"N{lvl}"
        triples.append((code, parent, f"Chain node at level {lvl}"))
        if lvl < depth:
            for j in range(distractors):
                triples.append((f"D{lvl}.{j}", parent, f"Distractor {j} at level {lvl}"))
        parent = code
    return make_ontology(triples)


def random_ontology(rng: random.Random, max_depth: int = 6, max_nodes: int = 500) -> Ontology:
    triples = []
    counter = 0
    frontier = [(ROOT, 0)]
    while frontier and counter < max_nodes:
        parent, lvl = frontier.pop(0)
        if lvl >= max_depth:
            continue
        k = rng.randint(1, 5) if lvl == 0 else rng.choice([0, 0, 1, 2, 3, 4])
        for _ in range(k):
            if counter >= max_nodes:
                break
            counter += 1
            code = f"K{counter:04d}"
            desc = f"Concept {counter:04d} {rng.choice(WORDS)} {rng.choice(WORDS)}"
            triples.append((code, parent, desc))
            frontier.append((code, lvl + 1))
    return make_ontology(triples)


def random_gold(rng: random.Random, ontology: Ontology, n_docs: int, max_codes: int = 5) -> dict[str, frozenset[str]]:
    leaves = sorted(ontology.assignable_codes)
    return {
        f"doc{d:03d}": frozenset(rng.sample(leaves, rng.randint(1, min(max_codes, len(leaves)))))
        for d in range(n_docs)
    }


def uniform_ontology(rng: random.Random, depth: int = 4, max_branch: int = 3, chapters: int = 6) -> Ontology:
    """Every leaf sits at ``depth``; internal nodes have 1..max_branch children."""
    triples = []
    counter = 0

    def grow(parent: str, lvl: int) -> None:
        nonlocal counter
        for _ in range(chapters if lvl == 1 else rng.randint(1, max_branch)):
            counter += 1
            code = f"U{counter:04d}"
            triples.append((code, parent, f"Unit {counter:04d} {rng.choice(WORDS)}"))
            if lvl < depth:
                grow(code, lvl + 1)

    grow(ROOT, 1)
    return make_ontology(triples)


def distinct_chapter_gold(rng: random.Random, ontology: Ontology, n_docs: int, max_codes: int = 3) -> dict[str, frozenset[str]]:
    """Gold sets whose codes all lie in different chapters."""
    by_chapter: dict[str, list[str]] = {}
    for code in sorted(ontology.assignable_codes):
        by_chapter.setdefault(ontology.ancestor_at_level(code, 1), []).append(code)
    chapters = sorted(by_chapter)
    out = {}
    for d in range(n_docs):
        picked = rng.sample(chapters, rng.randint(1, min(max_codes, len(chapters))))
        out[f"doc{d:03d}"] = frozenset(rng.choice(by_chapter[c]) for c in picked)
    return out
