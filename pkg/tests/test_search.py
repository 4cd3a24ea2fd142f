import json
import random

import pytest

from conftest import DEMO
from helpers import chain_ontology, random_gold, random_ontology
from treecoder.corpus import CaseNote, load_documents
from treecoder.llm import Backend, BackendError, OracleBackend, OracleConfig, ReplayBackend
from treecoder.llm.oracle import oracle_decisions
from treecoder.ontology import ROOT
from treecoder.prompting import load_template
from treecoder.search import (
    GenerationParams,
    SearchError,
    run_corpus,
    search_tree,
    sibling_conflicts,
    write_run,
)

TEMPLATE = load_template("tree-gpt")
PARAMS = GenerationParams(model_id="gpt-4-0613")


def note(doc="d"):
    return CaseNote(doc, "some case note text")


def oracle(ontology, gold, fn=0.0, fp=0.0, seed=0):
    return OracleBackend(OracleConfig(gold, fn, fp, seed), ontology)


def brute_force_search(ontology, config, doc):
    """Codes whose whole root path the oracle judges relevant, and the internal
    nodes that would be expanded, computed without running the search loop."""

    def judged(code):
        return dict(oracle_decisions(config, doc, [code], ontology))[code]

    assigned, expanded = set(), {ROOT}
    for node in ontology.walk():
        path = [node.code, *ontology.ancestors(node.code)]
        if all(judged(c) for c in path):
            if node.assignable:
                assigned.add(node.code)
            elif node.children:
                expanded.add(node.code)
    return assigned, expanded


def test_perfect_oracle_recovers_gold(toy):
    gold = {"d": frozenset({"L2"})}
    r = search_tree(note(), toy, oracle(toy, gold), TEMPLATE)
    assert r.codes == {"L2"}
    assert [s.parent_code for s in r.trace.steps] == [ROOT, "C2"]
    assert not r.truncated
    assert r.trace.relevant_by_level == {1: {"C2"}, 2: {"L2"}}


def test_budget_one_truncates(toy):
    r = search_tree(note(), toy, oracle(toy, {"d": frozenset({"L2"})}), TEMPLATE, budget=1)
    assert r.codes == frozenset()
    assert r.truncated
    assert r.trace.prompts_used == 1


def test_budget_one_not_truncated_when_nothing_queued(toy):
    r = search_tree(note(), toy, oracle(toy, {"d": frozenset()}), TEMPLATE, budget=1)
    assert r.codes == frozenset() and not r.truncated


def test_invalid_arguments(toy):
    with pytest.raises(ValueError):
        search_tree(note(), toy, oracle(toy, {}), TEMPLATE, budget=0)
    with pytest.raises(ValueError):
        search_tree(note(), toy, oracle(toy, {}), TEMPLATE, frontier="random")


def test_demo_walkthrough_common_cold(icd):
    notes = {n.doc_id: n for n in load_documents(DEMO / "docs")}
    backend = ReplayBackend.from_script(DEMO / "replay_tree_gpt.json")
    r = search_tree(notes["S0212-71992006000100006-1"], icd, backend, TEMPLATE, params=PARAMS)
    assert "J00" in r.codes
    parents = [s.parent_code for s in r.trace.steps]
    assert parents[0] == ROOT
    assert parents.index("10") < parents.index("J00-J06")
    step = r.trace.steps[parents.index("J00-J06")]
    assert any(d.code == "J00" and d.relevant for d in step.decisions)
    assert r.sibling_conflicts == [{"parent": "B27.8", "codes": ["B27.80", "B27.89"]}]


def test_replay_prompts_are_model_independent(icd):
    notes = load_documents(DEMO / "docs")
    backend = ReplayBackend.from_script(DEMO / "replay_tree_gpt.json")
    a = search_tree(notes[0], icd, backend, TEMPLATE, params=GenerationParams(model_id="x"))
    b = search_tree(notes[0], icd, backend, TEMPLATE, params=GenerationParams(model_id="y"))
    assert a.codes == b.codes


@pytest.mark.parametrize("seed", range(20))
def test_matches_brute_force_oracle(seed):
    rng = random.Random(seed)
    onto = random_ontology(rng, max_depth=5, max_nodes=120)
    gold = random_gold(rng, onto, 1)
    config = OracleConfig(gold, 0.2, 0.1, seed)
    r = search_tree(note("doc000"), onto, OracleBackend(config, onto), TEMPLATE, budget=None)
    assigned, expanded = brute_force_search(onto, config, "doc000")
    assert r.codes == assigned
    assert {s.parent_code for s in r.trace.steps} == expanded
    assert r.trace.prompts_used == len(expanded)


@pytest.mark.parametrize("seed", range(10))
def test_path_soundness(seed):
    rng = random.Random(100 + seed)
    onto = random_ontology(rng)
    gold = random_gold(rng, onto, 1)
    r = search_tree(note("doc000"), onto, oracle(onto, gold, 0.1, 0.1, seed), TEMPLATE)
    relevant = set().union(*r.trace.relevant_by_level.values()) if r.trace.relevant_by_level else set()
    for code in r.codes:
        assert onto.is_assignable(code)
        assert set(onto.ancestors(code)) <= relevant
    for step in r.trace.steps:
        assert step.parent_code == ROOT or step.parent_code in relevant
        assert step.candidate_codes == [c.code for c in onto.children(step.parent_code)]
    assert len({s.parent_code for s in r.trace.steps}) == len(r.trace.steps)


def test_fifo_expands_level_by_level():
    rng = random.Random(5)
    onto = random_ontology(rng)
    gold = random_gold(rng, onto, 1, max_codes=5)
    r = search_tree(note("doc000"), onto, oracle(onto, gold, 0, 0.2, 1), TEMPLATE, budget=None)
    levels = [0 if s.parent_code == ROOT else onto.level(s.parent_code) for s in r.trace.steps]
    assert levels == sorted(levels)


def test_lifo_is_depth_first():
    onto = chain_ontology(depth=4, distractors=0)
    gold = {"d": frozenset({"N4"})}
    r = search_tree(note(), onto, oracle(onto, gold), TEMPLATE, frontier="lifo")
    assert r.codes == {"N4"}
    rng = random.Random(9)
    big = random_ontology(rng)
    g = random_gold(rng, big, 1)
    fifo = search_tree(note("doc000"), big, oracle(big, g, 0, 0.3, 2), TEMPLATE, budget=None)
    lifo = search_tree(note("doc000"), big, oracle(big, g, 0, 0.3, 2), TEMPLATE, budget=None, frontier="lifo")
    # unbounded, both orders reach the same codes
    assert fifo.codes == lifo.codes
    # after a step that queued something, LIFO expands the last code it queued
    steps = lifo.trace.steps
    checked = 0
    for prev, nxt in zip(steps, steps[1:]):
        queued = [d.code for d in prev.decisions if d.relevant and not big.is_assignable(d.code)]
        if queued:
            assert nxt.parent_code == queued[-1]
            checked += 1
    assert checked > 0
    assert fifo.trace.prompts_used == lifo.trace.prompts_used


@pytest.mark.parametrize("seed", range(5))
def test_budget_monotone(seed):
    rng = random.Random(seed)
    onto = random_ontology(rng)
    gold = random_gold(rng, onto, 1)
    prev = frozenset()
    for budget in range(1, 40):
        r = search_tree(note("doc000"), onto, oracle(onto, gold, 0.1, 0.1, seed), TEMPLATE, budget=budget)
        assert prev <= r.codes
        assert r.trace.prompts_used <= budget
        prev = r.codes


def test_duplicate_decisions_first_wins(toy):
    class Doubled(Backend):
        def _complete(self, request):
            from treecoder.llm import CompletionResponse

            return CompletionResponse(
                "- Second chapter: relevant\n- Second chapter: not relevant\n- Leaf two: relevant", "x"
            )

    r = search_tree(note(), toy, Doubled(), TEMPLATE)
    assert r.trace.steps[0].decisions[0].relevant
    assert len(r.trace.steps[0].decisions) == 1
    assert r.codes == {"L2"}


def test_parse_warnings_recorded(toy):
    class Mute(Backend):
        def _complete(self, request):
            from treecoder.llm import CompletionResponse

            return CompletionResponse("", "mute")

    r = search_tree(note(), toy, Mute(), TEMPLATE)
    assert r.trace.parse_warnings == [{"doc_id": "d", "prompt_index": 0, "reason": "empty response"}]
    assert r.codes == frozenset()


class FailsFor(Backend):
    def __init__(self, inner, doc_id, after=0):
        super().__init__()
        self.inner, self.doc_id, self.after = inner, doc_id, after
        self.backend_id = inner.backend_id
        self.seen = 0

    def _complete(self, request):
        if request.doc_id == self.doc_id:
            if self.seen >= self.after:
                raise BackendError("503 forever")
            self.seen += 1
        return self.inner.complete(request)


def test_backend_failure_keeps_partial_trace(toy):
    gold = {"d": frozenset({"L2"})}
    with pytest.raises(SearchError) as info:
        search_tree(note(), toy, FailsFor(oracle(toy, gold), "d", after=1), TEMPLATE)
    partial = info.value.partial
    assert partial.trace.prompts_used == 1
    assert partial.error == "503 forever"
    assert partial.trace.relevant_by_level == {1: {"C2"}}


def test_corpus_isolates_failing_document(toy, tmp_path):
    gold = {"a": frozenset({"L1"}), "b": frozenset({"L2"}), "c": frozenset({"L3"})}
    notes = [note(d) for d in gold]
    run = run_corpus(notes, toy, FailsFor(oracle(toy, gold), "b"), TEMPLATE, workers=2)
    assert run.predictions == {"a": {"L1"}, "c": {"L3"}}
    assert list(run.failures) == ["b"]
    write_run(run, tmp_path)
    assert json.loads((tmp_path / "failures.json").read_text()) == [{"doc_id": "b", "error": "503 forever"}]
    assert (tmp_path / "predictions.tsv").read_text() == "a\tL1\nc\tL3\n"
    assert sorted(p.stem for p in (tmp_path / "traces").glob("*.json")) == ["a", "b", "c"]


def test_workers_do_not_change_output(tmp_path):
    rng = random.Random(3)
    onto = random_ontology(rng)
    gold = random_gold(rng, onto, 12)
    notes = [note(d) for d in gold]
    outputs = []
    for workers in (1, 3):
        out = tmp_path / str(workers)
        write_run(run_corpus(notes, onto, oracle(onto, gold, 0.2, 0.1, 4), TEMPLATE, workers=workers), out)
        outputs.append({p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    assert outputs[0] == outputs[1]


def test_sibling_conflicts(icd):
    assert sibling_conflicts(["J15.211", "J15.212", "J00"], icd) == [
        {"parent": "J15.21", "codes": ["J15.211", "J15.212"]}
    ]
    assert sibling_conflicts(["J00", "C63.2"], icd) == []


def test_trace_serializes(toy):
    r = search_tree(note(), toy, oracle(toy, {"d": frozenset({"L1", "L3"})}), TEMPLATE)
    data = json.loads(json.dumps(r.to_dict()))
    assert data["assigned_codes"] == ["L1", "L3"]
    assert data["relevant_by_level"] == {"1": ["C1", "C2"], "2": ["L1", "L3"]}
    assert data["steps"][0]["candidate_codes"] == ["C1", "C2"]
