"""Graph edit distance inner loops.

Graphs arrive as dense arrays: ``lab`` is (n, 2) int64 holding (category,
attribute or -1) and ``adj`` is (n, n) int64 holding the predicate of edge
u->v or -1. ``costs`` is float64 [node_sub, node_indel, edge_sub, edge_indel,
attr_sub]. A mapping assigns each g1 node a g2 index or -1 (deleted); g2 nodes
not hit are inserted.

This file is loaded twice by ``oar_link.kernels``: once as plain Python and
once with every function below passed through ``numba.njit``.
"""

import numpy as np

EPS = 1e-9


def node_cost(c1, a1, c2, a2, costs):
    if c1 != c2:
        return costs[0]
    if a1 != a2:
        return costs[4]
    return 0.0


def edge_pair_cost(e1, e2, costs):
    if e1 < 0:
        if e2 < 0:
            return 0.0
        return costs[3]
    if e2 < 0:
        return costs[3]
    if e1 != e2:
        return costs[2]
    return 0.0


def mapping_cost(lab1, adj1, lab2, adj2, mapping, costs):
    n1 = lab1.shape[0]
    n2 = lab2.shape[0]
    inverse = np.full(n2, -1, dtype=np.int64)
    total = 0.0
    for i in range(n1):
        j = mapping[i]
        if j < 0:
            total += costs[1]
        else:
            inverse[j] = i
            total += node_cost(lab1[i, 0], lab1[i, 1], lab2[j, 0], lab2[j, 1], costs)
    for j in range(n2):
        if inverse[j] < 0:
            total += costs[1]
    for i in range(n1):
        mi = mapping[i]
        for k in range(n1):
            if i == k:
                continue
            mk = mapping[k]
            e2 = -1
            if mi >= 0 and mk >= 0:
                e2 = adj2[mi, mk]
            total += edge_pair_cost(adj1[i, k], e2, costs)
    for a in range(n2):
        for b in range(n2):
            if a != b and adj2[a, b] >= 0 and (inverse[a] < 0 or inverse[b] < 0):
                total += costs[3]
    return total


def perm_to_mapping(perm, n1, n2):
    mapping = np.empty(n1, dtype=np.int64)
    for i in range(n1):
        mapping[i] = perm[i] if perm[i] < n2 else -1
    return mapping


def refine_perm(lab1, adj1, lab2, adj2, perm, costs):
    """First-improvement pairwise-swap local search over an extended assignment.

    ``perm`` is a permutation of range(n1 + n2); entry i < n1 is the image of
    g1 node i (values >= n2 mean deletion). Returns (perm, cost); the cost is
    the exact edit cost of the final mapping, so it is an upper bound on GED.
    """
    n1 = lab1.shape[0]
    n2 = lab2.shape[0]
    perm = perm.copy()
    best = mapping_cost(lab1, adj1, lab2, adj2, perm_to_mapping(perm, n1, n2), costs)
    improved = True
    while improved:
        improved = False
        for p in range(n1):
            for q in range(p + 1, n1 + n2):
                if perm[p] >= n2 and perm[q] >= n2:
                    continue
                tmp = perm[p]
                perm[p] = perm[q]
                perm[q] = tmp
                c = mapping_cost(lab1, adj1, lab2, adj2, perm_to_mapping(perm, n1, n2), costs)
                if c < best - EPS:
                    best = c
                    improved = True
                else:
                    perm[q] = perm[p]
                    perm[p] = tmp
    return perm, best


def _node_bound(lab1, lab2, start, used, costs):
    # admissible bound on node costs for g1 nodes start.. and unused g2 nodes
    n1 = lab1.shape[0]
    n2 = lab2.shape[0]
    r1 = n1 - start
    r2 = 0
    taken = used.copy()
    for j in range(n2):
        if not used[j]:
            r2 += 1
    overlap = 0
    for i in range(start, n1):
        for j in range(n2):
            if not taken[j] and lab2[j, 0] == lab1[i, 0]:
                taken[j] = True
                overlap += 1
                break
    a = r1 - overlap
    b = r2 - overlap
    lo = a if a < b else b
    sub = costs[0] if costs[0] < 2.0 * costs[1] else 2.0 * costs[1]
    return lo * sub + abs(a - b) * costs[1]


def _assign_increment(lab1, adj1, lab2, adj2, mapping, i, j, costs):
    if j < 0:
        inc = costs[1]
    else:
        inc = node_cost(lab1[i, 0], lab1[i, 1], lab2[j, 0], lab2[j, 1], costs)
    for k in range(i):
        mk = mapping[k]
        out2 = -1
        in2 = -1
        if j >= 0 and mk >= 0:
            out2 = adj2[j, mk]
            in2 = adj2[mk, j]
        inc += edge_pair_cost(adj1[i, k], out2, costs)
        inc += edge_pair_cost(adj1[k, i], in2, costs)
    return inc


def _completion(adj2, used, costs):
    n2 = adj2.shape[0]
    total = 0.0
    for j in range(n2):
        if not used[j]:
            total += costs[1]
    for a in range(n2):
        for b in range(n2):
            if a != b and adj2[a, b] >= 0 and (not used[a] or not used[b]):
                total += costs[3]
    return total


def ged_exact(lab1, adj1, lab2, adj2, costs, init_mapping):
    """Depth-first branch and bound over node mappings.

    Nodes of g1 are assigned in index order, each to an unused g2 node or to
    deletion. Partial cost is exact for the assigned prefix; the bound adds a
    label-multiset estimate for the rest. ``init_mapping`` seeds the incumbent.
    Returns (cost, mapping).
    """
    n1 = lab1.shape[0]
    n2 = lab2.shape[0]
    best_map = init_mapping.copy()
    best = mapping_cost(lab1, adj1, lab2, adj2, best_map, costs)
    mapping = np.full(n1, -2, dtype=np.int64)
    used = np.zeros(n2, dtype=np.bool_)
    partial = np.zeros(n1 + 1)
    nxt = np.zeros(n1 + 1, dtype=np.int64)
    i = 0
    while i >= 0:
        if i == n1:
            total = partial[n1] + _completion(adj2, used, costs)
            if total < best - EPS:
                best = total
                best_map[:] = mapping
            i -= 1
            continue
        prev = mapping[i]
        if prev != -2:
            if prev >= 0:
                used[prev] = False
            mapping[i] = -2
        c = nxt[i]
        advanced = False
        while c <= n2:
            j = c if c < n2 else -1
            c += 1
            if j >= 0 and used[j]:
                continue
            g = partial[i] + _assign_increment(lab1, adj1, lab2, adj2, mapping, i, j, costs)
            if g >= best - EPS:
                continue
            if j >= 0:
                used[j] = True
            h = _node_bound(lab1, lab2, i + 1, used, costs)
            if g + h >= best - EPS:
                if j >= 0:
                    used[j] = False
                continue
            mapping[i] = j
            partial[i + 1] = g
            nxt[i] = c
            nxt[i + 1] = 0
            i += 1
            advanced = True
            break
        if not advanced:
            nxt[i] = 0
            i -= 1
    return best, best_map


KERNELS = (
    "node_cost", "edge_pair_cost", "mapping_cost", "perm_to_mapping",
    "refine_perm", "_node_bound", "_assign_increment", "_completion", "ged_exact",
)

if globals().get("USE_JIT", False):
    import numba as _numba

    for _name in KERNELS:
        globals()[_name] = _numba.njit(cache=True, nogil=True)(globals()[_name])
