"""Seeded synthetic SMTP traffic with known social / non-social structure.

Ham grows a contact graph by preferential attachment with triad formation
(Holme-Kim) and samples emails along its edges, some of which get answered.
Spam is a set of spammers each mailing a uniform random sample of a victim
pool, with independent rejections and no replies. Every generator is a pure
function of its parameters and seed.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from emailnet.errors import UsageError
from emailnet.ingest import EmailEvent, Label, Status
from emailnet.network import DAY, HAM, EmailNetwork, TimeWindow

DEFAULT_START = 1_262_563_200  # Monday 2010-01-04 00:00 UTC


@dataclass(frozen=True)
class HamModelParams:
    n_users: int = 1000
    m: int = 2
    reciprocity: float = 0.3
    events_per_day: float = 1000.0
    seed: int = 0
    triad_prob: float = 0.1
    domain: str = "ham.example"

    def validate(self) -> None:
        if not 1 <= self.m < self.n_users:
            raise UsageError(f"need 1 <= m < n_users, got m={self.m} n_users={self.n_users}")
        if not 0.0 <= self.reciprocity <= 1.0:
            raise UsageError("reciprocity must lie in [0, 1]")
        if not 0.0 <= self.triad_prob <= 1.0:
            raise UsageError("triad_prob must lie in [0, 1]")
        if self.events_per_day < 0:
            raise UsageError("events_per_day must be >= 0")


@dataclass(frozen=True)
class SpamModelParams:
    n_spammers: int = 10
    fanout: int = 100
    target_pool: int = 10_000
    rejection_rate: float = 0.5
    seed: int = 0
    domain: str = "spam.example"
    target_domain: str = "victim.example"

    def validate(self) -> None:
        if self.n_spammers < 1:
            raise UsageError("need at least one spammer")
        if self.fanout < 1:
            raise UsageError("fanout must be >= 1")
        if self.fanout > self.target_pool:
            raise UsageError(f"fanout {self.fanout} exceeds target pool {self.target_pool}")
        if not 0.0 <= self.rejection_rate <= 1.0:
            raise UsageError("rejection_rate must lie in [0, 1]")


def contact_graph(n: int, m: int, triad_prob: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Undirected Holme-Kim graph as ``(u, v)`` arrays.

    Starts from a clique on ``m + 1`` vertices; each later vertex links to one
    degree-proportional target and then, for each of its other ``m - 1``
    links, closes a triangle through the last preferential target with
    probability ``triad_prob`` or attaches preferentially otherwise. With
    ``m = 1`` the result is a tree.
    """
    if not 1 <= m < n:
        raise UsageError(f"need 1 <= m < n, got m={m} n={n}")
    rnd = random.Random(seed)
    rand = rnd.random
    us: list[int] = []
    vs: list[int] = []
    ends: list[int] = []
    nbrs: list[list[int]] = [[] for _ in range(n)]

    def link(a: int, b: int) -> None:
        us.append(a)
        vs.append(b)
        ends.append(a)
        ends.append(b)
        nbrs[a].append(b)
        nbrs[b].append(a)

    for a in range(m + 1):
        for b in range(a + 1, m + 1):
            link(a, b)

    for v in range(m + 1, n):
        chosen: set[int] = set()
        last = -1
        for j in range(m):
            w = -1
            if j > 0 and rand() < triad_prob:
                cands = [x for x in nbrs[last] if x not in chosen]
                if cands:
                    w = cands[int(rand() * len(cands))]
            if w < 0:
                while True:
                    w = ends[int(rand() * len(ends))]
                    if w not in chosen:
                        break
                last = w
            chosen.add(w)
        for w in sorted(chosen):
            link(w, v)
    return np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64)


def _user_addresses(prefix: str, n: int, domain: str) -> list[str]:
    width = len(str(max(n - 1, 0)))
    return [f"{prefix}{i:0{width}d}@{domain}" for i in range(n)]


def _events_from_arrays(senders, recipients, ts, status, label) -> list[EmailEvent]:
    order = np.argsort(ts, kind="stable")
    return [EmailEvent(int(ts[i]), senders[i], (recipients[i],), status[i], label[i]) for i in order.tolist()]


def generate_ham(p: HamModelParams, window: TimeWindow) -> list[EmailEvent]:
    """Accepted ham sampled along contact-graph edges, time ordered.

    ``events_per_day * days`` emails pick a contact edge and direction
    uniformly at a uniform time; each is answered with probability
    ``reciprocity`` between one minute and six hours later (clipped to the
    window).
    """
    p.validate()
    u, v = contact_graph(p.n_users, p.m, p.triad_prob, p.seed)
    rng = np.random.default_rng([p.seed, 1])
    n_events = int(round(p.events_per_day * (window.end - window.start) / DAY))
    addr = _user_addresses("u", p.n_users, p.domain)

    e = rng.integers(0, len(u), n_events)
    flip = rng.random(n_events) < 0.5
    a = np.where(flip, v[e], u[e])
    b = np.where(flip, u[e], v[e])
    ts = rng.integers(window.start, window.end, n_events)
    answered = rng.random(n_events) < p.reciprocity
    delay = rng.integers(60, 6 * 3600, n_events)
    reply_ts = np.minimum(ts + delay, window.end - 1)[answered]

    send = np.concatenate([a, b[answered]])
    recv = np.concatenate([b, a[answered]])
    when = np.concatenate([ts, reply_ts])
    senders = [addr[i] for i in send.tolist()]
    recipients = [addr[i] for i in recv.tolist()]
    status = [Status.ACCEPTED] * len(send)
    label = [Label.HAM] * len(send)
    return _events_from_arrays(senders, recipients, when, status, label)


def generate_spam(p: SpamModelParams, window: TimeWindow, campaign: int = 0) -> list[EmailEvent]:
    """One campaign: every spammer mails ``fanout`` distinct pool addresses.

    Each transmission is rejected with probability ``rejection_rate``
    (status rejected, label unknown) and otherwise delivered as spam.
    ``campaign`` selects an independent random stream for the same seed.
    """
    p.validate()
    rng = np.random.default_rng([p.seed, 2, campaign])
    spammers = _user_addresses("s", p.n_spammers, p.domain)
    victims = _user_addresses("t", p.target_pool, p.target_domain)
    targets = np.concatenate([rng.choice(p.target_pool, p.fanout, replace=False)
                              for _ in range(p.n_spammers)])
    who = np.repeat(np.arange(p.n_spammers), p.fanout)
    n = len(targets)
    ts = rng.integers(window.start, window.end, n)
    rejected = rng.random(n) < p.rejection_rate
    senders = [spammers[i] for i in who.tolist()]
    recipients = [victims[i] for i in targets.tolist()]
    status = [Status.REJECTED if r else Status.ACCEPTED for r in rejected.tolist()]
    label = [Label.UNKNOWN if r else Label.SPAM for r in rejected.tolist()]
    return _events_from_arrays(senders, recipients, ts, status, label)


def generate_spam_days(p: SpamModelParams, start: int, days: int) -> list[EmailEvent]:
    """A fresh campaign on each of ``days`` consecutive days."""
    return interleave([
        generate_spam(p, TimeWindow(start + d * DAY, start + (d + 1) * DAY), campaign=d)
        for d in range(days)
    ])


def generate_random(n: int, edge_probability: float, seed: int | None = None) -> EmailNetwork:
    """Undirected Erdos-Renyi G(n, p) over ``n`` synthetic addresses.

    Vertices left isolated do not appear in the returned network.
    """
    if not 0.0 < edge_probability < 1.0:
        raise UsageError("edge_probability must lie in (0, 1)")
    if n < 2:
        raise UsageError("need at least two vertices")
    rng = np.random.default_rng(seed)
    pairs = n * (n - 1) // 2
    m = int(rng.binomial(pairs, edge_probability))
    flat = np.sort(rng.choice(pairs, size=m, replace=False)) if m else np.zeros(0, dtype=np.int64)
    rows = np.arange(n - 1, dtype=np.int64)
    offsets = rows * (2 * n - rows - 1) // 2
    i = np.searchsorted(offsets, flat, side="right") - 1
    j = flat - offsets[i] + i + 1
    addr = _user_addresses("r", n, "random.example")
    return EmailNetwork.from_arrays(addr, i, j, np.full(m, HAM), np.zeros(m, dtype=np.int64),
                                    directed=False)


def interleave(streams: Sequence[Iterable[EmailEvent]]) -> list[EmailEvent]:
    """Merge time-ordered streams; equal timestamps keep stream order."""
    streams = [list(s) for s in streams]
    for idx, s in enumerate(streams):
        for prev, cur in zip(s, s[1:]):
            if cur.timestamp < prev.timestamp:
                raise UsageError(f"stream {idx} is not time ordered")
    return list(heapq.merge(*streams, key=lambda e: e.timestamp))


def generate_mix(ham: HamModelParams, spam: SpamModelParams, start: int = DEFAULT_START,
                 days: int = 7) -> list[EmailEvent]:
    window = TimeWindow(start, start + days * DAY)
    return interleave([generate_ham(ham, window), generate_spam_days(spam, start, days)])
