"""Deduplicated email networks built from transmissions.

Vertices get dense integer ids in sorted-address order, so two networks with
the same vertex and edge sets are equal array for array no matter how they
were assembled. Edges are unique ordered pairs, sorted by (src, dst), each
carrying a label bit mask and the timestamp of its first transmission.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from emailnet.errors import UndefinedValueError, UsageError
from emailnet.ingest import Label, Status, Transmission

HAM = 1
SPAM = 2
REJECTED = 4
LABEL_BITS = {"ham": HAM, "spam": SPAM, "rejected": REJECTED}

DAY = 86_400


class Selector(str, Enum):
    ALL = "all"
    HAM = "ham"
    SPAM = "spam"
    REJECTED_PLUS_SPAM = "rejected_plus_spam"

    def __str__(self) -> str:
        return self.value

    @property
    def mask(self) -> int:
        return _SELECTOR_MASKS[self]


_SELECTOR_MASKS = {
    Selector.ALL: HAM | SPAM | REJECTED,
    Selector.HAM: HAM,
    Selector.SPAM: SPAM,
    Selector.REJECTED_PLUS_SPAM: SPAM | REJECTED,
}


def label_names(mask: int) -> list[str]:
    return [name for name, bit in LABEL_BITS.items() if mask & bit]


@dataclass(frozen=True)
class TimeWindow:
    """Half-open interval ``[start, end)`` of epoch seconds."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise UsageError(f"empty time window [{self.start}, {self.end})")

    def __contains__(self, ts: int) -> bool:
        return self.start <= ts < self.end

    @property
    def hours(self) -> float:
        return (self.end - self.start) / 3600

    @classmethod
    def day(
        cls,
        n: int,
        origin: int,
        hours: tuple[float, float] = (0, 24),
        tz_offset_hours: float = 0,
    ) -> "TimeWindow":
        """Window for local calendar day ``n`` (1-based) counted from ``origin``.

        ``origin`` is any timestamp on day 1; the day starts at local midnight
        given ``tz_offset_hours`` east of UTC.
        """
        if n < 1:
            raise UsageError("days are numbered from 1")
        lo, hi = hours
        if not 0 <= lo < hi <= 24:
            raise UsageError(f"bad hour range {lo}-{hi}")
        tz = int(round(tz_offset_hours * 3600))
        midnight = ((origin + tz) // DAY) * DAY - tz
        base = midnight + (n - 1) * DAY
        return cls(int(base + lo * 3600), int(base + hi * 3600))


class EmailNetwork:
    """Immutable edge-list network over (possibly anonymized) addresses.

    ``src``/``dst`` are int64 vertex ids, ``labels`` a uint8 mask per edge
    (bit0 ham, bit1 spam, bit2 rejected) and ``first_seen`` int64 seconds.
    Undirected networks store each pair once with ``src <= dst``.
    """

    __slots__ = ("addresses", "src", "dst", "labels", "first_seen", "directed", "transmissions", "_cache")

    def __init__(self, addresses, src, dst, labels, first_seen, directed=True, transmissions=0):
        self.addresses: tuple[str, ...] = tuple(addresses)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.labels = np.asarray(labels, dtype=np.uint8)
        self.first_seen = np.asarray(first_seen, dtype=np.int64)
        self.directed = bool(directed)
        self.transmissions = int(transmissions)
        self._cache: dict = {}
        for arr in (self.src, self.dst, self.labels, self.first_seen):
            arr.setflags(write=False)

    @classmethod
    def empty(cls, directed: bool = True) -> "EmailNetwork":
        z = np.zeros(0, dtype=np.int64)
        return cls((), z, z, z, z, directed)

    @classmethod
    def from_arrays(cls, addresses: Sequence[str], src, dst, labels, first_seen,
                    directed: bool = True, transmissions: int | None = None) -> "EmailNetwork":
        """Canonicalize raw (possibly duplicated, unsorted) edge arrays.

        ``src``/``dst`` index into ``addresses``; addresses not touched by any
        edge are dropped.
        """
        src = np.asarray(src, dtype=np.int64)
        n_tx = len(src) if transmissions is None else transmissions
        return _assemble(list(addresses), src, np.asarray(dst, dtype=np.int64),
                         np.asarray(labels, dtype=np.uint8), np.asarray(first_seen, dtype=np.int64),
                         directed, n_tx)

    @property
    def n_vertices(self) -> int:
        return len(self.addresses)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def n_self_loops(self) -> int:
        return int(np.count_nonzero(self.src == self.dst))

    def __len__(self) -> int:
        return self.n_edges

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"<EmailNetwork {kind} |V|={self.n_vertices} |E|={self.n_edges}>"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmailNetwork):
            return NotImplemented
        return (
            self.directed == other.directed
            and self.addresses == other.addresses
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.first_seen, other.first_seen)
        )

    __hash__ = None  # type: ignore[assignment]

    def undirected(self) -> "EmailNetwork":
        if not self.directed:
            return self
        if "undirected" not in self._cache:
            self._cache["undirected"] = _assemble(
                list(self.addresses), self.src, self.dst, self.labels, self.first_seen,
                False, self.transmissions, presorted=True)
        return self._cache["undirected"]

    def degrees(self, flavor: str = "undirected") -> np.ndarray:
        """Per-vertex degree.

        ``undirected`` works on the undirected view, a self-loop adding 2.
        ``in``/``out`` need a directed network; a self-loop adds 1 to each.
        ``total`` is in + out on a directed network.
        """
        n = self.n_vertices
        if flavor == "undirected":
            u = self.undirected()
            return np.bincount(u.src, minlength=n) + np.bincount(u.dst, minlength=n)
        if not self.directed:
            raise UsageError(f"{flavor}-degree needs a directed network")
        if flavor == "out":
            return np.bincount(self.src, minlength=n)
        if flavor == "in":
            return np.bincount(self.dst, minlength=n)
        if flavor == "total":
            return np.bincount(self.src, minlength=n) + np.bincount(self.dst, minlength=n)
        raise UsageError(f"unknown degree flavor {flavor!r}")

    def adjacency(self, symmetric: bool | None = None, self_loops: bool = False) -> sp.csr_array:
        """Binary CSR adjacency; symmetric by default for undirected networks."""
        key = ("adj", symmetric, self_loops)
        if key in self._cache:
            return self._cache[key]
        if symmetric is None:
            symmetric = not self.directed
        src, dst = self.src, self.dst
        if not self_loops:
            keep = src != dst
            src, dst = src[keep], dst[keep]
        if symmetric:
            src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
        n = self.n_vertices
        data = np.ones(len(src), dtype=np.int32)
        mat = sp.csr_array((data, (src, dst)), shape=(n, n))
        mat.sum_duplicates()
        mat.data[:] = 1
        mat.sort_indices()
        self._cache[key] = mat
        return mat

    def edge_triples(self) -> Iterator[tuple[str, str, int, int]]:
        """``(src_address, dst_address, label_mask, first_seen)`` per edge."""
        a = self.addresses
        for s, d, m, t in zip(self.src.tolist(), self.dst.tolist(), self.labels.tolist(),
                              self.first_seen.tolist()):
            yield a[s], a[d], m, t

    def to_transmissions(self) -> list[Transmission]:
        """One transmission per (edge, label bit); rebuilding gives back this network."""
        out = []
        for s, d, mask, ts in self.edge_triples():
            if mask & HAM:
                out.append(Transmission(s, d, ts, Status.ACCEPTED, Label.HAM))
            if mask & SPAM:
                out.append(Transmission(s, d, ts, Status.ACCEPTED, Label.SPAM))
            if mask & REJECTED:
                out.append(Transmission(s, d, ts, Status.REJECTED, Label.UNKNOWN))
        return out


def _assemble(addresses: list[str], src, dst, labels, ts, directed: bool, n_tx: int,
              presorted: bool = False) -> EmailNetwork:
    n = len(addresses)
    if len(src) == 0:
        return EmailNetwork.empty(directed)

    if presorted:
        # addresses already sorted and all used; only orientation/dedup needed
        new_addr = addresses
    else:
        used = np.zeros(n, dtype=bool)
        used[src] = True
        used[dst] = True
        live = np.flatnonzero(used)
        live_list = live.tolist()
        order = sorted(range(len(live_list)), key=lambda i: addresses[live_list[i]])
        new_ids = np.empty(n, dtype=np.int64)
        new_ids[live[order]] = np.arange(len(order), dtype=np.int64)
        new_addr = [addresses[live_list[i]] for i in order]
        src = new_ids[src]
        dst = new_ids[dst]

    if not directed:
        src, dst = np.minimum(src, dst), np.maximum(src, dst)

    m = np.int64(len(new_addr))
    key = src * m + dst
    perm = np.argsort(key, kind="stable")
    key = key[perm]
    starts = np.flatnonzero(np.concatenate(([True], key[1:] != key[:-1])))
    out_labels = np.bitwise_or.reduceat(np.asarray(labels)[perm], starts)
    out_ts = np.minimum.reduceat(np.asarray(ts)[perm], starts)
    uniq = key[starts]
    return EmailNetwork(new_addr, uniq // m, uniq % m, out_labels, out_ts, directed, n_tx)


def _mask(status, label) -> int:
    if status == "accepted":
        if label == "ham":
            return HAM
        if label == "spam":
            return SPAM
        return 0
    if status == "rejected":
        return REJECTED
    return 0


def build_network(transmissions: Iterable[Transmission], window: TimeWindow | None = None) -> EmailNetwork:
    """Directed network with one edge per ordered (sender, recipient) pair.

    An edge's label set is the union over its transmissions (a rejected
    transmission contributes ``rejected``); transmissions outside ``window``
    or without a usable label are skipped.
    """
    index: dict[str, int] = {}
    src: list[int] = []
    dst: list[int] = []
    lab: list[int] = []
    tss: list[int] = []
    lo, hi = (window.start, window.end) if window is not None else (None, None)
    for s, r, ts, status, label in transmissions:
        if lo is not None and not lo <= ts < hi:
            continue
        mask = _mask(status, label)
        if not mask:
            continue
        i = index.get(s)
        if i is None:
            i = index[s] = len(index)
        j = index.get(r)
        if j is None:
            j = index[r] = len(index)
        src.append(i)
        dst.append(j)
        lab.append(mask)
        tss.append(ts)
    return _assemble(list(index), np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                     np.array(lab, dtype=np.uint8), np.array(tss, dtype=np.int64), True, len(src))


def subnetwork(net: EmailNetwork, selector: Selector | str) -> EmailNetwork:
    """Edges whose label set meets the selector's labels, plus their endpoints."""
    selector = Selector(selector)
    if selector is Selector.ALL:
        return net
    keep = (net.labels & selector.mask) != 0
    return _assemble(list(net.addresses), net.src[keep], net.dst[keep], net.labels[keep],
                     net.first_seen[keep], net.directed, net.transmissions)


def merge(nets: Sequence[EmailNetwork]) -> EmailNetwork:
    """Union of vertex and edge sets; labels OR-ed, first-seen minimized."""
    nets = list(nets)
    if not nets:
        return EmailNetwork.empty()
    directed = nets[0].directed
    if any(n.directed != directed for n in nets):
        raise UsageError("cannot merge directed with undirected networks")
    index: dict[str, int] = {}
    srcs, dsts = [], []
    for net in nets:
        ids = np.fromiter((index.setdefault(a, len(index)) for a in net.addresses),
                          dtype=np.int64, count=net.n_vertices)
        srcs.append(ids[net.src])
        dsts.append(ids[net.dst])
    return _assemble(
        list(index),
        np.concatenate(srcs), np.concatenate(dsts),
        np.concatenate([n.labels for n in nets]),
        np.concatenate([n.first_seen for n in nets]),
        directed, sum(n.transmissions for n in nets))


def mean_degree(net: EmailNetwork) -> float:
    """Mean node degree, sum of degrees over |V|.

    On an undirected network this is 2|E|/|V| with self-loops counted once in
    |E|; on a directed network it is mean in+out degree, also 2|E|/|V|.
    """
    if net.n_vertices == 0:
        raise UndefinedValueError("mean degree of an empty network")
    flavor = "total" if net.directed else "undirected"
    return float(net.degrees(flavor).sum()) / net.n_vertices


def mean_degree_from_counts(n_vertices: int, n_edges: int) -> float:
    if n_vertices <= 0:
        raise UndefinedValueError("mean degree of an empty network")
    return 2.0 * n_edges / n_vertices


def network_stats(net: EmailNetwork) -> dict:
    """|V|, directed and undirected |E| and mean undirected degree."""
    und = net.undirected()
    return {
        "vertices": net.n_vertices,
        "edges_directed": net.n_edges if net.directed else None,
        "edges_undirected": und.n_edges,
        "self_loops": und.n_self_loops,
        "transmissions": net.transmissions,
        "mean_degree": mean_degree(und) if net.n_vertices else None,
    }


# -- serialization ---------------------------------------------------------

def write_network(net: EmailNetwork, fh: IO[str], with_addresses: bool = True) -> None:
    """``#emailnet v1`` text format: header, optional ``#v`` address lines, edges."""
    fh.write(f"#emailnet v1 directed={'true' if net.directed else 'false'} "
             f"|V|={net.n_vertices} |E|={net.n_edges}\n")
    if with_addresses:
        for i, a in enumerate(net.addresses):
            fh.write(f"#v\t{i}\t{a}\n")
    for s, d, m, t in zip(net.src.tolist(), net.dst.tolist(), net.labels.tolist(),
                          net.first_seen.tolist()):
        fh.write(f"{s}\t{d}\t{m}\t{t}\n")


def read_network(fh: IO[str]) -> EmailNetwork:
    header = fh.readline().split()
    if len(header) != 5 or header[0] != "#emailnet" or header[1] != "v1":
        raise UsageError("not an emailnet v1 file")
    fields = dict(tok.split("=", 1) for tok in header[2:])
    directed = fields["directed"] == "true"
    n, m = int(fields["|V|"]), int(fields["|E|"])
    addresses = [str(i) for i in range(n)]
    rows = []
    for line in fh:
        if line.startswith("#v\t"):
            _, i, a = line.rstrip("\n").split("\t", 2)
            addresses[int(i)] = a
        elif line.strip() and not line.startswith("#"):
            rows.append(line.split("\t"))
    if len(rows) != m:
        raise UsageError(f"header promises {m} edges, found {len(rows)}")
    arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
    net = EmailNetwork(addresses, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], directed)
    return net
