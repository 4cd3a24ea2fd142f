"""In-memory concept tree loaded from the flat ontology file.

File format, UTF-8, one tab-separated record per line::

    code  parent_code  level  assignable(0|1)  description

The root sentinel is the literal code ``ROOT`` with an empty parent and level
0. Lines starting with ``#`` are comments, blank lines are ignored, and line
order defines child order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from treecoder.text import normalize_text

log = logging.getLogger(__name__)

ROOT = "ROOT"

LEVEL_NAMES = {
    1: "Chapter",
    2: "Block",
    3: "Category",
    4: "Subcategory",
    5: "Extension I",
    6: "Extension II",
}


def level_name(level: int) -> str:
    return LEVEL_NAMES.get(level, f"Level {level}")


class OntologyError(ValueError):
    pass


class UnknownCodeError(OntologyError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown code"


@dataclass(frozen=True)
class ConceptNode:
    code: str
    description: str
    level: int
    parent: str | None
    children: tuple[str, ...]
    assignable: bool

    @property
    def level_name(self) -> str:
        return level_name(self.level)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class OntologyRow:
    code: str
    parent: str | None
    level: int
    assignable: bool
    description: str
    line_no: int = 0


class Ontology:
    """Immutable tree of :class:`ConceptNode` keyed by code.

    Build one with :func:`load_ontology` or :meth:`from_rows`; both validate
    every structural invariant before returning.
    """

    def __init__(self, nodes: dict[str, ConceptNode], root: str = ROOT):
        self._nodes = nodes
        self.root = root
        self.description_index = self._build_description_index()
        self.max_level = max((n.level for n in nodes.values()), default=0)
        self._assignable = frozenset(c for c, n in nodes.items() if n.assignable)

    @classmethod
    def from_rows(
        cls, rows: Iterable[OntologyRow], *, strict_assignable: bool = True
    ) -> "Ontology":
        """Validate ``rows`` and assemble the tree.

        With ``strict_assignable`` (the default) the assignable flag must agree
        with leafness; pass False to let the file mark internal nodes
        assignable.
        """
        rows = list(rows)
        by_code: dict[str, OntologyRow] = {}
        for row in rows:
            if row.code in by_code:
                raise OntologyError(
                    f"line {row.line_no}: duplicate code {row.code!r} "
                    f"(first defined on line {by_code[row.code].line_no})"
                )
            by_code[row.code] = row

        roots = [r for r in rows if r.code == ROOT]
        if not roots:
            raise OntologyError(f"no {ROOT} sentinel row")
        if roots[0].parent:
            raise OntologyError(f"line {roots[0].line_no}: {ROOT} must have an empty parent")
        if roots[0].level != 0:
            raise OntologyError(f"line {roots[0].line_no}: {ROOT} must have level 0")

        children: dict[str, list[str]] = {code: [] for code in by_code}
        for row in rows:
            if row.code == ROOT:
                continue
            if not row.parent:
                raise OntologyError(
                    f"line {row.line_no}: {row.code!r} has no parent; only {ROOT} may be parentless"
                )
            if row.parent not in by_code:
                raise OntologyError(
                    f"line {row.line_no}: orphan row {row.code!r}, parent {row.parent!r} is not defined"
                )
            if not row.description.strip():
                raise OntologyError(f"line {row.line_no}: {row.code!r} has an empty description")
            children[row.parent].append(row.code)

        _check_acyclic(by_code)

        for row in rows:
            if row.code == ROOT:
                continue
            parent_level = by_code[row.parent].level  # type: ignore[index]
            if row.level != parent_level + 1:
                raise OntologyError(
                    f"line {row.line_no}: {row.code!r} has level {row.level}, "
                    f"expected {parent_level + 1} (parent {row.parent!r})"
                )

        nodes: dict[str, ConceptNode] = {}
        for row in rows:
            kids = tuple(children[row.code])
            assignable = row.assignable if row.code != ROOT else False
            if strict_assignable and row.code != ROOT and assignable != (not kids):
                kind = "leaf" if not kids else "internal node"
                raise OntologyError(
                    f"line {row.line_no}: {kind} {row.code!r} has assignable={int(assignable)}; "
                    "the default loader requires assignable == leaf"
                )
            nodes[row.code] = ConceptNode(
                code=row.code,
                description=row.description,
                level=row.level,
                parent=row.parent or None,
                children=kids,
                assignable=assignable,
            )
        return cls(nodes)

    def _build_description_index(self) -> dict[str, str]:
        index: dict[str, str] = {}
        collisions: dict[str, list[str]] = {}
        for code, node in self._nodes.items():
            if code == self.root:
                continue
            key = normalize_text(node.description)
            if key in index:
                collisions.setdefault(key, [index[key]]).append(code)
            else:
                index[key] = code
        if collisions:
            listing = "; ".join(f"{k!r}: {', '.join(v)}" for k, v in sorted(collisions.items()))
            raise OntologyError(f"duplicate normalized descriptions: {listing}")
        return index

    # lookups

    def __contains__(self, code: object) -> bool:
        return code in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self) -> Iterator[str]:
        return iter(self._nodes)

    def node(self, code: str) -> ConceptNode:
        try:
            return self._nodes[code]
        except KeyError:
            raise UnknownCodeError(f"unknown code {code!r}") from None

    def children(self, code: str) -> list[ConceptNode]:
        return [self._nodes[c] for c in self.node(code).children]

    def parent(self, code: str) -> str | None:
        return self.node(code).parent

    def is_assignable(self, code: str) -> bool:
        return self.node(code).assignable

    @property
    def assignable_codes(self) -> frozenset[str]:
        return self._assignable

    def level(self, code: str) -> int:
        return self.node(code).level

    def description(self, code: str) -> str:
        if code == self.root:
            raise OntologyError("the root sentinel has no description")
        return self.node(code).description

    def ancestors(self, code: str) -> list[str]:
        """Strict ancestors below the root, nearest first."""
        out = []
        parent = self.node(code).parent
        while parent is not None and parent != self.root:
            out.append(parent)
            parent = self._nodes[parent].parent
        return out

    def ancestor_at_level(self, code: str, level: int) -> str | None:
        """Ancestor-or-self of ``code`` at ``level``; None if ``code`` sits above it."""
        if level < 1:
            raise ValueError(f"level must be >= 1, got {level}")
        node = self.node(code)
        if node.level < level:
            return None
        while node.level > level:
            node = self._nodes[node.parent]  # type: ignore[index]
        return node.code

    def walk(self) -> Iterator[ConceptNode]:
        """Depth-first pre-order traversal from the root, in file order."""
        stack = [self.root]
        while stack:
            node = self._nodes[stack.pop()]
            yield node
            stack.extend(reversed(node.children))


def _check_acyclic(by_code: dict[str, OntologyRow]) -> None:
    state: dict[str, int] = {ROOT: 2}
    for start in by_code:
        path = []
        code = start
        while state.get(code) != 2:
            if state.get(code) == 1:
                cycle = path[path.index(code):] + [code]
                raise OntologyError(f"cycle detected: {' -> '.join(cycle)}")
            state[code] = 1
            path.append(code)
            code = by_code[code].parent  # type: ignore[assignment]
        for c in path:
            state[c] = 2


def parse_rows(lines: Sequence[str] | Iterable[str]) -> Iterator[OntologyRow]:
    for line_no, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise OntologyError(
                f"line {line_no}: malformed row, expected 5 tab-separated fields, got {len(fields)}"
            )
        code, parent, level, assignable, desc = fields
        code = code.strip()
        if not code:
            raise OntologyError(f"line {line_no}: malformed row, empty code")
        try:
            level_int = int(level)
        except ValueError:
            raise OntologyError(f"line {line_no}: malformed row, level {level!r} is not an integer") from None
        if assignable not in ("0", "1"):
            raise OntologyError(f"line {line_no}: malformed row, assignable must be 0 or 1, got {assignable!r}")
        yield OntologyRow(code, parent.strip() or None, level_int, assignable == "1", desc, line_no)


def load_ontology(source: str | Path, *, strict_assignable: bool = True) -> Ontology:
    path = Path(source)
    with path.open(encoding="utf-8") as fh:
        ontology = Ontology.from_rows(parse_rows(fh), strict_assignable=strict_assignable)
    log.debug("loaded %d nodes from %s", len(ontology), path)
    return ontology


def dump_rows(ontology: Ontology) -> str:
    """Serialize an ontology back to the flat format (pre-order, file order)."""
    out = []
    for node in ontology.walk():
        parent = node.parent or ""
        desc = node.description if node.code != ontology.root else ""
        out.append(f"{node.code}\t{parent}\t{node.level}\t{int(node.assignable)}\t{desc}")
    return "\n".join(out) + "\n"
