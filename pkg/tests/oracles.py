"""Slow, obviously-correct reference computations used only by the tests."""

from collections import deque
from itertools import combinations

import numpy as np
from scipy.special import zeta


def scc_by_closure(n, edges):
    """SCC partition from the transitive closure of the adjacency matrix."""
    reach = np.eye(n, dtype=bool)
    for a, b in edges:
        reach[a, b] = True
    while True:
        nxt = reach | ((reach.astype(np.int64) @ reach.astype(np.int64)) > 0)
        if (nxt == reach).all():
            break
        reach = nxt
    mutual = reach & reach.T
    return {frozenset(np.flatnonzero(mutual[i]).tolist()) for i in range(n)}


def clustering_by_enumeration(n, edges):
    nbrs = [set() for _ in range(n)]
    for a, b in edges:
        if a != b:
            nbrs[a].add(b)
            nbrs[b].add(a)
    cv = []
    for v in range(n):
        k = len(nbrs[v])
        if k < 2:
            cv.append(0.0)
            continue
        links = sum(1 for x, y in combinations(sorted(nbrs[v]), 2) if y in nbrs[x])
        cv.append(2 * links / (k * (k - 1)))
    return cv


def bfs_mean_distance(n, edges, sources=None):
    """Mean hop distance from each source to every other vertex (connected graph)."""
    nbrs = [set() for _ in range(n)]
    for a, b in edges:
        if a != b:
            nbrs[a].add(b)
            nbrs[b].add(a)
    total = count = 0
    for s in range(n) if sources is None else sources:
        dist = {s: 0}
        q = deque([s])
        while q:
            v = q.popleft()
            for w in nbrs[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    q.append(w)
        total += sum(dist.values())
        count += len(dist) - 1
    return total / count


def naive_edges(transmissions, window=None):
    """``{(src, dst): (label_mask, first_seen)}`` by a plain dict pass."""
    bits = {("accepted", "ham"): 1, ("accepted", "spam"): 2}
    out = {}
    for s, r, ts, status, label in transmissions:
        if window is not None and not window.start <= ts < window.end:
            continue
        mask = 4 if status == "rejected" else bits.get((str(status), str(label)), 0)
        if not mask:
            continue
        m0, t0 = out.get((s, r), (0, ts))
        out[(s, r)] = (m0 | mask, min(t0, ts))
    return out


def sample_discrete_power_law(gamma, n, seed, k_max=10**6):
    """Inverse-CDF draws from p(k) = k^-gamma / zeta(gamma), k >= 1."""
    rng = np.random.default_rng(seed)
    k = np.arange(1, k_max + 1, dtype=float)
    cdf = 1.0 - zeta(gamma, k + 1.0) / zeta(gamma, 1.0)
    return np.searchsorted(cdf, rng.random(n)) + 1
