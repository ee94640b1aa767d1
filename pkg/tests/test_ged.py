import numpy as np
import pytest

from oar_link import kernels
from oar_link.ged import EXACT_NODE_LIMIT, GedCosts, InvalidCostError, ged
from oar_link.graph import ObjectNode, OarGraph, RelationEdge

import oracles


def chain():
    return OarGraph([ObjectNode(0, 0), ObjectNode(1, 1), ObjectNode(2, 2)],
                    [RelationEdge(0, 1, 0), RelationEdge(1, 2, 0)])


def test_identity():
    g = chain()
    r = ged(g, g)
    assert (r.raw, r.normalized, r.approximate) == (0.0, 0.0, False)


def test_worked_deletion_example():
    g2 = OarGraph([ObjectNode(0, 0), ObjectNode(1, 1)], [RelationEdge(0, 1, 0)])
    assert ged(chain(), g2).raw == 2.0
    assert oracles.brute_force_ged(chain(), g2) == 2.0
    assert ged(chain(), g2).normalized == pytest.approx(2 / 5)


def test_slots_do_not_matter():
    a = OarGraph([ObjectNode(3, 5), ObjectNode(9, 6)], [RelationEdge(3, 9, 1)])
    b = OarGraph([ObjectNode(0, 6), ObjectNode(1, 5)], [RelationEdge(1, 0, 1)])
    assert ged(a, b).raw == 0.0


def test_attribute_mismatch_costs_half():
    a = OarGraph([ObjectNode(0, 5, 1)], [])
    b = OarGraph([ObjectNode(0, 5, 2)], [])
    assert ged(a, b).raw == 0.5


def test_empty_graphs():
    r = ged(OarGraph([], []), OarGraph([], []))
    assert r.raw == 0.0 and r.normalized == 0.0


@pytest.mark.parametrize("field", ["node_sub", "node_indel", "edge_sub", "edge_indel", "attr_sub"])
def test_nonpositive_cost_rejected(field):
    with pytest.raises(InvalidCostError):
        GedCosts(**{field: 0.0})


def test_exact_matches_brute_force():
    rng = np.random.default_rng(21)
    for _ in range(150):
        a, b = oracles.random_graph(rng), oracles.random_graph(rng)
        assert ged(a, b, method="exact").raw == pytest.approx(oracles.brute_force_ged(a, b))


def test_symmetry_and_triangle():
    rng = np.random.default_rng(8)
    for _ in range(60):
        a, b, c = (oracles.random_graph(rng, 4) for _ in range(3))
        ab = ged(a, b, method="exact").raw
        assert ab == pytest.approx(ged(b, a, method="exact").raw)
        assert ged(a, c, method="exact").raw <= ab + ged(b, c, method="exact").raw + 1e-9


def test_custom_costs_match_oracle():
    rng = np.random.default_rng(2)
    costs = GedCosts(2.0, 1.5, 0.7, 1.2, 0.3)
    for _ in range(40):
        a, b = oracles.random_graph(rng, 4), oracles.random_graph(rng, 4)
        want = oracles.brute_force_ged(a, b, 2.0, 1.5, 0.7, 1.2, 0.3)
        assert ged(a, b, costs, method="exact").raw == pytest.approx(want)


def test_auto_switches_to_approx_above_limit():
    rng = np.random.default_rng(4)
    big = [oracles.random_graph(rng, 9) for _ in range(20)]
    big = [g for g in big if len(g.nodes) > EXACT_NODE_LIMIT // 2][:2]
    r = ged(big[0], big[1])
    assert r.approximate
    assert r.raw >= 0


def test_normalized_zero_iff_isomorphic():
    g = chain()
    h = OarGraph([ObjectNode(0, 0), ObjectNode(1, 1), ObjectNode(2, 2)],
                 [RelationEdge(0, 1, 0), RelationEdge(2, 1, 0)])
    assert ged(g, h).normalized > 0


def test_backends_agree():
    pytest.importorskip("numba")
    py, jit = kernels.python_kernels(), kernels.jit_kernels()
    rng = np.random.default_rng(17)
    for _ in range(40):
        a, b = oracles.random_graph(rng, 6, n_cat=4), oracles.random_graph(rng, 6, n_cat=4)
        for method in ("exact", "approx"):
            assert ged(a, b, method=method, backend=py).raw == ged(a, b, method=method, backend=jit).raw
