"""Clustering, shortest paths and component structure of email networks."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from emailnet.errors import UndefinedValueError, UsageError
from emailnet.network import EmailNetwork, mean_degree

EXACT_PATH_LIMIT = 50_000
_CLUSTER_BLOCK = 1 << 16
_BFS_BLOCK = 256


@dataclass(frozen=True)
class ClusteringResult:
    """Per-vertex arrays are indexed by vertex id of the undirected view."""

    per_vertex: np.ndarray
    average: float
    random_baseline: float
    triangle_edge_counts: np.ndarray
    degrees: np.ndarray

    @property
    def ratio_to_random(self) -> float:
        if self.random_baseline == 0:
            return 0.0
        return self.average / self.random_baseline


def _map_blocks(fn, n: int, block: int, threads: int) -> list:
    bounds = [(lo, min(lo + block, n)) for lo in range(0, n, block)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda b: fn(*b), bounds))
    return [fn(lo, hi) for lo, hi in bounds]


def clustering(net: EmailNetwork, threads: int = 1) -> ClusteringResult:
    """Local clustering ``C_v = 2 E_v / (k_v (k_v - 1))`` and its vertex average.

    Works on the undirected view with self-loops dropped. Vertices with fewer
    than two neighbours get ``C_v = 0`` and still count in the average. The
    random baseline is ``<k> / (|V| - 1)``, the clustering expected of an
    Erdos-Renyi graph of the same density.
    """
    und = net.undirected()
    n = und.n_vertices
    if n == 0:
        raise UndefinedValueError("clustering of an empty network")
    adj = und.adjacency(symmetric=True, self_loops=False)
    k = np.diff(adj.indptr).astype(np.int64)

    def closed_wedges(lo: int, hi: int) -> np.ndarray:
        rows = adj[lo:hi]
        # (A^2 o A) row sums count each edge between neighbours twice
        return np.asarray((rows @ adj).multiply(rows).sum(axis=1)).ravel()

    twice_ev = np.concatenate(_map_blocks(closed_wedges, n, _CLUSTER_BLOCK, threads)).astype(np.int64)
    ev = twice_ev // 2
    denom = k * (k - 1)
    cv = np.zeros(n, dtype=float)
    ok = k >= 2
    cv[ok] = twice_ev[ok] / denom[ok]
    baseline = mean_degree(und) / (n - 1) if n > 1 else 0.0
    return ClusteringResult(cv, _rational_mean(twice_ev[ok], denom[ok], n), float(baseline), ev, k)


def _rational_mean(num: np.ndarray, den: np.ndarray, n: int) -> float:
    """``sum(num / den) / n`` rounded once.

    Integer numerators are summed per distinct denominator; each group's
    rational is split into a float pair and the pairs are summed with fsum.
    """
    if len(num) == 0:
        return 0.0
    order = np.argsort(den, kind="stable")
    d_sorted = den[order]
    starts = np.flatnonzero(np.r_[True, d_sorted[1:] != d_sorted[:-1]])
    sums = np.add.reduceat(num[order], starts)
    terms = []
    for s, d in zip(sums.tolist(), d_sorted[starts].tolist()):
        q = Fraction(s, d * n)
        hi = float(q)
        terms += (hi, float(q - Fraction(hi)))
    return math.fsum(terms)


# -- components ------------------------------------------------------------

class ComponentMode(str, Enum):
    UNDIRECTED_CONNECTED = "undirected_connected"
    DIRECTED_STRONG = "directed_strong"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ComponentSummary:
    sizes: np.ndarray  # descending
    labels: np.ndarray  # component index per vertex, ordered like ``sizes``
    mode: ComponentMode

    @property
    def n_vertices(self) -> int:
        return int(self.sizes.sum())

    @property
    def n_components(self) -> int:
        return len(self.sizes)

    @property
    def giant_size(self) -> int:
        return int(self.sizes[0])

    @property
    def giant_fraction(self) -> float:
        return self.giant_size / self.n_vertices

    @property
    def second_largest(self) -> int:
        return int(self.sizes[1]) if len(self.sizes) > 1 else 0

    def giant_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 0)


def strongly_connected_components(indptr, indices, n: int) -> tuple[int, np.ndarray]:
    """Tarjan's algorithm over a CSR graph, driven by an explicit stack.

    Returns ``(count, labels)``. Recursion-free, so million-vertex chains are fine.
    """
    indptr = np.asarray(indptr).tolist()
    indices = np.asarray(indices).tolist()
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    stack: list[int] = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        work = [(root, indptr[root])]
        while work:
            v, i = work[-1]
            end = indptr[v + 1]
            descended = False
            while i < end:
                w = indices[i]
                i += 1
                if index[w] == -1:
                    work[-1] = (v, i)
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, indptr[w]))
                    descended = True
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            if descended:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
    return ncomp, np.asarray(comp, dtype=np.int64)


def _summarize(raw_labels: np.ndarray, mode: ComponentMode) -> ComponentSummary:
    counts = np.bincount(raw_labels)
    # largest first; ties broken by smallest member vertex so output is stable
    first_member = np.full(len(counts), np.iinfo(np.int64).max)
    np.minimum.at(first_member, raw_labels, np.arange(len(raw_labels)))
    order = np.lexsort((first_member, -counts))
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return ComponentSummary(counts[order], rank[raw_labels], mode)


def components(net: EmailNetwork, mode: ComponentMode | str = ComponentMode.UNDIRECTED_CONNECTED) -> ComponentSummary:
    """Connected components of the undirected view, or strongly connected
    components of a directed network. Self-loop-only vertices come out as
    size-1 components."""
    mode = ComponentMode(mode)
    if net.n_vertices == 0:
        raise UndefinedValueError("components of an empty network")
    if mode is ComponentMode.UNDIRECTED_CONNECTED:
        adj = net.undirected().adjacency(symmetric=True)
        _, labels = csgraph.connected_components(adj, directed=False)
    else:
        if not net.directed:
            raise UsageError("strongly connected components need a directed network")
        adj = net.adjacency(symmetric=False)
        _, labels = strongly_connected_components(adj.indptr, adj.indices, net.n_vertices)
    return _summarize(np.asarray(labels, dtype=np.int64), mode)


def component_size_histogram(summary: ComponentSummary) -> list[tuple[int, int, float]]:
    """``(size, n_components, fraction_of_vertices)`` rows, ascending size."""
    if summary.n_components == 0:
        raise UndefinedValueError("no components")
    sizes, counts = np.unique(summary.sizes, return_counts=True)
    total = summary.n_vertices
    return [(int(s), int(c), float(s * c / total)) for s, c in zip(sizes, counts)]


# -- shortest paths --------------------------------------------------------

@dataclass(frozen=True)
class PathLengthEstimate:
    mean: float
    sample_sources: int
    exact: bool
    component_size: int


def giant_component(net: EmailNetwork) -> tuple[sp.csr_array, np.ndarray]:
    """Adjacency of the largest connected component of the undirected view
    (self-loops dropped) and the vertex ids it covers."""
    summary = components(net, ComponentMode.UNDIRECTED_CONNECTED)
    verts = summary.giant_vertices()
    adj = net.undirected().adjacency(symmetric=True)
    return adj[verts][:, verts].tocsr(), verts


def _distance_sum(adj: sp.csr_array, sources: np.ndarray, threads: int) -> float:
    def chunk(lo: int, hi: int) -> float:
        d = csgraph.shortest_path(adj, method="D", unweighted=True, directed=False,
                                  indices=sources[lo:hi])
        return float(d.sum())

    return sum(_map_blocks(chunk, len(sources), _BFS_BLOCK, threads))


def average_path_length(
    net: EmailNetwork,
    sources: int | None = None,
    seed: int | None = None,
    force: bool = False,
    threads: int = 1,
) -> PathLengthEstimate:
    """Mean hop distance between distinct vertices of the giant component.

    With ``sources=None`` every vertex is a BFS root (exact); this is refused
    above ``EXACT_PATH_LIMIT`` vertices unless ``force``. Otherwise ``sources``
    roots are drawn uniformly without replacement using ``seed``.
    """
    adj, verts = giant_component(net)
    size = len(verts)
    if size < 2:
        raise UndefinedValueError("giant component has fewer than 2 vertices")
    if sources is None or sources >= size:
        if size > EXACT_PATH_LIMIT and not force:
            raise UsageError(
                f"exact path length on a {size}-vertex component exceeds {EXACT_PATH_LIMIT}; "
                "sample sources or force")
        roots = np.arange(size)
    else:
        if sources < 1:
            raise UsageError("need at least one source")
        rng = np.random.default_rng(seed)
        roots = np.sort(rng.choice(size, size=sources, replace=False))
    total = _distance_sum(adj, roots, threads)
    mean = total / (len(roots) * (size - 1))
    return PathLengthEstimate(float(mean), len(roots), len(roots) == size, size)


def reciprocity(net: EmailNetwork) -> float:
    """Share of directed non-loop edges whose reverse edge also exists."""
    if not net.directed:
        raise UsageError("reciprocity needs a directed network")
    keep = net.src != net.dst
    src, dst = net.src[keep], net.dst[keep]
    if len(src) == 0:
        raise UndefinedValueError("no non-loop edges")
    n = np.int64(max(net.n_vertices, 1))
    fwd = src * n + dst
    rev = dst * n + src
    return float(np.isin(rev, fwd, assume_unique=True).mean())
