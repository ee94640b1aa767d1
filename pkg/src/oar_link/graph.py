"""Object-Attribute-Relation scene graphs and their JSON line format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .vocab import Vocabulary

N_SLOTS = 30


@dataclass(frozen=True)
class ObjectNode:
    slot: int
    category: int
    attribute: int | None = None
    confidence: float = 1.0


@dataclass(frozen=True)
class RelationEdge:
    subject_slot: int
    object_slot: int
    predicate: int
    confidence: float = 1.0

    @property
    def pair(self) -> tuple[int, int]:
        return self.subject_slot, self.object_slot


@dataclass(frozen=True)
class OarGraph:
    nodes: tuple[ObjectNode, ...] = ()
    edges: tuple[RelationEdge, ...] = ()

    def __post_init__(self):
        # accept lists at construction, store tuples
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))

    def node_by_slot(self) -> dict[int, ObjectNode]:
        return {n.slot: n for n in self.nodes}

    def __len__(self) -> int:
        return len(self.nodes) + len(self.edges)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _structural_violations(g: OarGraph, n_slots: int) -> list[str]:
    out = []
    seen = set()
    for node in g.nodes:
        if not 0 <= node.slot < n_slots:
            out.append(f"slot out of range: {node.slot}")
        if node.slot in seen:
            out.append(f"duplicate slot: {node.slot}")
        seen.add(node.slot)
        if not 0.0 <= node.confidence <= 1.0:
            out.append(f"node confidence out of [0,1] at slot {node.slot}")
    pairs = set()
    for e in g.edges:
        if e.subject_slot == e.object_slot:
            out.append(f"self loop at slot {e.subject_slot}")
        if e.subject_slot not in seen or e.object_slot not in seen:
            out.append(f"dangling edge endpoint: {e.subject_slot}->{e.object_slot}")
        if e.pair in pairs:
            out.append(f"duplicate edge pair: {e.subject_slot}->{e.object_slot}")
        pairs.add(e.pair)
        if not 0.0 <= e.confidence <= 1.0:
            out.append(f"edge confidence out of [0,1] at {e.subject_slot}->{e.object_slot}")
    return out


def validate_graph(g: OarGraph, vocab: Vocabulary, n_slots: int = N_SLOTS) -> ValidationReport:
    """Check every graph invariant against ``vocab``; violations are returned, not raised."""
    out = _structural_violations(g, n_slots)
    for node in g.nodes:
        if not 0 <= node.category < vocab.n_entities:
            out.append(f"unknown entity category {node.category} at slot {node.slot}")
        elif node.attribute is not None and not vocab.compatible(node.category, node.attribute):
            out.append(f"incompatible attribute {node.attribute} at slot {node.slot}")
    for e in g.edges:
        if not 0 <= e.predicate < vocab.n_predicates:
            out.append(f"unknown predicate {e.predicate} at {e.subject_slot}->{e.object_slot}")
    return ValidationReport(out)


class GraphParseError(ValueError):
    def __init__(self, msg: str, offset: int | None = None):
        self.offset = offset
        super().__init__(msg if offset is None else f"{msg} (byte offset {offset})")


def graph_to_dict(g: OarGraph) -> dict:
    return {
        "nodes": [{"slot": n.slot, "category": n.category, "attribute": n.attribute,
                   "confidence": n.confidence} for n in g.nodes],
        "edges": [{"subject": e.subject_slot, "object": e.object_slot,
                   "predicate": e.predicate, "confidence": e.confidence} for e in g.edges],
    }


def serialize_graph(g: OarGraph) -> str:
    return json.dumps(graph_to_dict(g), separators=(",", ":"))


def graph_from_dict(data, n_slots: int = N_SLOTS) -> OarGraph:
    try:
        nodes = [ObjectNode(int(n["slot"]), int(n["category"]),
                            None if n.get("attribute") is None else int(n["attribute"]),
                            float(n.get("confidence", 1.0)))
                 for n in data["nodes"]]
        edges = [RelationEdge(int(e["subject"]), int(e["object"]), int(e["predicate"]),
                              float(e.get("confidence", 1.0)))
                 for e in data["edges"]]
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise GraphParseError(f"bad graph record: {exc!r}") from None
    g = OarGraph(nodes, edges)
    problems = _structural_violations(g, n_slots)
    if problems:
        raise GraphParseError(problems[0])
    return g


def parse_graph(text: str | bytes, n_slots: int = N_SLOTS) -> OarGraph:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise GraphParseError(exc.msg, offset) from None
    return graph_from_dict(data, n_slots)
