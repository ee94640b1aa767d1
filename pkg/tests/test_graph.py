import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oar_link.graph import (GraphParseError, ObjectNode, OarGraph, RelationEdge, parse_graph,
                            serialize_graph, validate_graph)
from oar_link.vocab import Vocabulary, VocabularyError, builtin_vocabulary
from oar_link.worldgen import SceneConfig, generate_scene


def test_builtin_vocab_sizes(vocab):
    assert vocab.n_entities == 150
    assert vocab.n_predicates == 50
    assert vocab.n_attributes == 95
    assert len(vocab.audio_event_categories) == 22
    assert vocab.problems() == []
    assert len(vocab.audio_emitting_entities) > 0


def test_vocab_roundtrip(tmp_path, vocab):
    path = tmp_path / "v.json"
    vocab.save(path)
    assert Vocabulary.load(path) == vocab
    data = json.loads(path.read_text())
    assert set(data["attr_compat"]) <= {str(i) for i in range(150)}


def test_vocab_rejects_duplicates():
    with pytest.raises(VocabularyError):
        Vocabulary(("a", "a"), ("p",), ("x",), ("e",), {})


def test_vocab_rejects_out_of_range_compat():
    base = builtin_vocabulary()
    with pytest.raises(VocabularyError, match="invalid attributes"):
        Vocabulary.from_dict({**base.to_dict(), "attr_compat": {"0": [999]}})


def test_empty_graph_is_valid(vocab):
    assert validate_graph(OarGraph([], []), vocab).ok


def test_dangling_edge(vocab):
    g = OarGraph([ObjectNode(0, 1)], [RelationEdge(0, 7, 0)])
    rep = validate_graph(g, vocab)
    assert any("dangling edge endpoint" in v for v in rep.violations)


def test_incompatible_attribute(vocab):
    bad_attr = next(a for a in range(vocab.n_attributes) if not vocab.compatible(0, a))
    rep = validate_graph(OarGraph([ObjectNode(0, 0, bad_attr)], []), vocab)
    assert any("incompatible attribute" in v for v in rep.violations)


def test_self_loop_and_duplicate_pair(vocab):
    g = OarGraph([ObjectNode(0, 1), ObjectNode(1, 2)],
                 [RelationEdge(0, 0, 1), RelationEdge(0, 1, 1), RelationEdge(0, 1, 2)])
    text = " ".join(validate_graph(g, vocab).violations)
    assert "self loop" in text and "duplicate edge pair" in text


def test_serialize_empty():
    assert serialize_graph(OarGraph([], [])) == '{"nodes":[],"edges":[]}'
    assert parse_graph('{"nodes":[],"edges":[]}') == OarGraph([], [])


def test_parse_duplicate_slot():
    text = '{"nodes":[{"slot":0,"category":1,"attribute":null,"confidence":1.0},' \
           '{"slot":0,"category":2,"attribute":null,"confidence":1.0}],"edges":[]}'
    with pytest.raises(GraphParseError, match="duplicate slot"):
        parse_graph(text)


def test_parse_error_has_byte_offset():
    with pytest.raises(GraphParseError) as info:
        parse_graph('{"nodes": [}')
    assert info.value.offset == 11


def test_parse_offset_counts_bytes_not_chars():
    with pytest.raises(GraphParseError) as info:
        parse_graph('{"é": [}')
    assert info.value.offset == len('{"é": ['.encode())


def test_roundtrip_1000_generated_graphs(vocab):
    for seed in range(1000):
        g = generate_scene(SceneConfig(seed=seed), vocab)
        assert parse_graph(serialize_graph(g)) == g


@st.composite
def graphs(draw):
    n = draw(st.integers(0, 8))
    slots = draw(st.lists(st.integers(0, 29), min_size=n, max_size=n, unique=True))
    nodes = [ObjectNode(s, draw(st.integers(0, 149)), draw(st.none() | st.integers(0, 94)),
                        draw(st.floats(0, 1))) for s in slots]
    pairs = [(a, b) for a in slots for b in slots if a != b]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=10)) if pairs else []
    edges = [RelationEdge(a, b, draw(st.integers(0, 49)), draw(st.floats(0, 1))) for a, b in chosen]
    return OarGraph(nodes, edges)


@settings(max_examples=200, deadline=None)
@given(graphs())
def test_roundtrip_property(g):
    assert parse_graph(serialize_graph(g)) == g
    assert parse_graph(serialize_graph(g).encode()) == g
