"""SMTP session logs to classified email events.

Two line formats are understood, both UTF-8 and tab separated:

session log (one SMTP command per line, records of a session contiguous)::

    <unix_ts> <session_id> <verb> <argument>

with verb one of MAIL_FROM, RCPT_TO, DATA, DATA_END, LABEL, and the
pre-classified event log (one email per line)::

    <unix_ts> <sender> <recipient[,recipient...]> <status> <label>
"""

from __future__ import annotations

import hashlib
import hmac
import io
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Iterator, NamedTuple

from emailnet.errors import ConfigurationError

log = logging.getLogger(__name__)

MAIL_FROM = "MAIL_FROM"
RCPT_TO = "RCPT_TO"
DATA = "DATA"
DATA_END = "DATA_END"
LABEL = "LABEL"
COMMAND_VERBS = frozenset({MAIL_FROM, RCPT_TO, DATA, DATA_END})
VERBS = COMMAND_VERBS | {LABEL}

# 128-bit ids: birthday collision odds at 1e7 addresses are ~1e-25.
DIGEST_HEX_CHARS = 32


class Status(str, Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    INCOMPLETE = "incomplete"

    def __str__(self) -> str:
        return self.value


class Label(str, Enum):
    HAM = "ham"
    SPAM = "spam"
    UNKNOWN = "unknown"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SmtpSession:
    session_id: str
    timestamp: int
    commands: tuple[tuple[str, str], ...]
    label: Label = Label.UNKNOWN


@dataclass(frozen=True)
class EmailEvent:
    timestamp: int
    sender: str
    recipients: tuple[str, ...]
    status: Status
    label: Label

    def __post_init__(self) -> None:
        if not self.recipients:
            raise ValueError("an email event needs at least one recipient")
        if self.status is Status.ACCEPTED and self.label is Label.UNKNOWN:
            raise ValueError("accepted events must be labelled ham or spam")
        if self.status is not Status.ACCEPTED and self.label is not Label.UNKNOWN:
            raise ValueError(f"{self.status} events carry no content label")


class Transmission(NamedTuple):
    """One sender/recipient pair taken from an email."""

    sender: str
    recipient: str
    timestamp: int
    status: Status
    label: Label


@dataclass
class IngestStats:
    """Running counters; one instance may be shared across several calls."""

    lines: int = 0
    sessions: int = 0
    malformed: int = 0
    accepted: int = 0
    rejected: int = 0
    incomplete: int = 0
    null_sender: int = 0
    malformed_examples: list[str] = field(default_factory=list, repr=False)

    @property
    def events(self) -> int:
        return self.accepted + self.rejected

    def _bad(self, line: str) -> None:
        self.malformed += 1
        if len(self.malformed_examples) < 5:
            self.malformed_examples.append(line[:200])

    def summary(self) -> str:
        return (
            f"sessions={self.sessions} events={self.events} accepted={self.accepted} "
            f"rejected={self.rejected} incomplete={self.incomplete} "
            f"null_sender_skipped={self.null_sender} malformed={self.malformed}"
        )


def extract_address(argument: str) -> str:
    """Pull the bare address out of a MAIL FROM / RCPT TO argument.

    ``<a@x>`` and ``a@x SIZE=100`` both give ``a@x``; ``<>`` gives ``""``.
    """
    arg = argument.strip()
    if arg.startswith("<"):
        end = arg.find(">")
        return arg[1:end].strip() if end >= 0 else arg[1:].strip()
    return arg.split(None, 1)[0] if arg else ""


def normalize_address(address: str) -> str:
    return address.strip().lower()


def anonymize(address: str, key: bytes) -> str:
    """Keyed one-way digest of the normalized address (HMAC-SHA256, 128 bits)."""
    if not key:
        raise ConfigurationError("anonymization key must be non-empty")
    if isinstance(key, str):
        key = key.encode("utf-8")
    mac = hmac.new(key, normalize_address(address).encode("utf-8"), hashlib.sha256)
    return mac.hexdigest()[:DIGEST_HEX_CHARS]


def _text_lines(stream: IO | Iterable) -> Iterator[str | None]:
    """Yield decoded lines; ``None`` marks a line that is not valid UTF-8."""
    for raw in stream:
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                yield None
                continue
        yield raw.rstrip("\r\n")


def _parse_timestamp(text: str) -> int:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return int(value)


def parse_session_log(
    stream: IO | Iterable, stats: IngestStats | None = None
) -> Iterator[SmtpSession]:
    """Group session-log records into :class:`SmtpSession` objects, in file order.

    Bad lines (wrong field count, unknown verb, bad timestamp, a recipient or
    DATA before any MAIL_FROM, an unknown label) are counted in
    ``stats.malformed`` and skipped. A session that finished DATA_END but has
    no LABEL record cannot be classified and is counted as one malformed item.
    """
    stats = stats if stats is not None else IngestStats()
    current_id: str | None = None
    ts = 0
    commands: list[tuple[str, str]] = []
    label = Label.UNKNOWN
    seen_mail = False

    def flush() -> SmtpSession | None:
        if current_id is None:
            return None
        verbs = {v for v, _ in commands}
        lab = label
        if DATA_END not in verbs:
            lab = Label.UNKNOWN
        elif lab is Label.UNKNOWN:
            stats._bad(f"session {current_id}: DATA_END without LABEL")
            return None
        stats.sessions += 1
        return SmtpSession(current_id, ts, tuple(commands), lab)

    for line in _text_lines(stream):
        stats.lines += 1
        if line is None:
            stats._bad("<undecodable bytes>")
            continue
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) == 3:
            fields.append("")
        if len(fields) != 4:
            stats._bad(line)
            continue
        ts_text, session_id, verb, argument = fields
        try:
            line_ts = _parse_timestamp(ts_text)
        except ValueError:
            stats._bad(line)
            continue
        if not session_id or verb not in VERBS:
            stats._bad(line)
            continue

        if session_id != current_id:
            session = flush()
            if session is not None:
                yield session
            current_id, ts, commands, label, seen_mail = session_id, line_ts, [], Label.UNKNOWN, False

        if verb == LABEL:
            try:
                lab = Label(argument.strip().lower())
            except ValueError:
                lab = Label.UNKNOWN
            if lab is Label.UNKNOWN:
                stats._bad(line)
            else:
                label = lab
            continue
        if verb == MAIL_FROM:
            seen_mail = True
        elif not seen_mail or (verb == RCPT_TO and not extract_address(argument)):
            stats._bad(line)
            continue
        commands.append((verb, argument))

    session = flush()
    if session is not None:
        yield session


def classify_session(s: SmtpSession, stats: IngestStats | None = None) -> list[EmailEvent]:
    """Split a session into emails and classify each one.

    An email that reached DATA and DATA_END is accepted and inherits the
    session label; one with recipients but no completed data phase is
    rejected; anything without recipients is incomplete and emits nothing.
    Null-sender emails (``MAIL FROM:<>``) are dropped.
    """
    stats = stats if stats is not None else IngestStats()
    emails: list[list] = []
    for verb, arg in s.commands:
        if verb == MAIL_FROM:
            emails.append([extract_address(arg), [], False, False])
        elif not emails:
            continue
        elif verb == RCPT_TO:
            emails[-1][1].append(extract_address(arg))
        elif verb == DATA:
            emails[-1][2] = True
        elif verb == DATA_END and emails[-1][2]:
            emails[-1][3] = True

    if not emails:
        stats.incomplete += 1
        return []

    events = []
    for sender, rcpts, _, finished in emails:
        if not sender:
            stats.null_sender += 1
            continue
        if not rcpts:
            stats.incomplete += 1
            continue
        if finished:
            if s.label is Label.UNKNOWN:
                stats.incomplete += 1
                continue
            events.append(EmailEvent(s.timestamp, sender, tuple(rcpts), Status.ACCEPTED, s.label))
            stats.accepted += 1
        else:
            events.append(EmailEvent(s.timestamp, sender, tuple(rcpts), Status.REJECTED, Label.UNKNOWN))
            stats.rejected += 1
    return events


def expand_recipients(e: EmailEvent) -> list[Transmission]:
    return [Transmission(e.sender, r, e.timestamp, e.status, e.label) for r in e.recipients]


def anonymize_event(e: EmailEvent, key: bytes) -> EmailEvent:
    return EmailEvent(
        e.timestamp,
        anonymize(e.sender, key),
        tuple(anonymize(r, key) for r in e.recipients),
        e.status,
        e.label,
    )


def parse_event_log(
    stream: IO | Iterable, stats: IngestStats | None = None
) -> Iterator[EmailEvent]:
    """Read the pre-classified one-email-per-line format."""
    stats = stats if stats is not None else IngestStats()
    for line in _text_lines(stream):
        stats.lines += 1
        if line is None:
            stats._bad("<undecodable bytes>")
            continue
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            stats._bad(line)
            continue
        ts_text, sender, rcpt_text, status_text, label_text = fields
        try:
            ts = _parse_timestamp(ts_text)
            status = Status(status_text.strip().lower())
            label = Label(label_text.strip().lower())
        except ValueError:
            stats._bad(line)
            continue
        sender = extract_address(sender)
        if not sender:
            stats.null_sender += 1
            continue
        if status is Status.INCOMPLETE:
            stats.incomplete += 1
            continue
        rcpts = tuple(r.strip() for r in rcpt_text.split(",") if r.strip())
        try:
            event = EmailEvent(ts, sender, rcpts, status, label)
        except ValueError:
            stats._bad(line)
            continue
        if status is Status.ACCEPTED:
            stats.accepted += 1
        else:
            stats.rejected += 1
        yield event


def sniff_format(first_line: str) -> str:
    """``"events"`` for the pre-classified format, ``"sessions"`` otherwise."""
    return "events" if first_line.count("\t") == 4 else "sessions"


def read_events(stream: IO | Iterable, stats: IngestStats | None = None) -> Iterator[EmailEvent]:
    """Read either format, detected from the first non-blank line."""
    stats = stats if stats is not None else IngestStats()
    lines = iter(stream)
    head: list = []
    fmt = "events"
    for raw in lines:
        head.append(raw)
        text = raw.decode("utf-8", "replace") if isinstance(raw, bytes) else raw
        if text.strip():
            fmt = sniff_format(text.rstrip("\r\n"))
            break

    def chained() -> Iterator:
        yield from head
        yield from lines

    if fmt == "events":
        yield from parse_event_log(chained(), stats)
    else:
        for session in parse_session_log(chained(), stats):
            yield from classify_session(session, stats)


def format_event(e: EmailEvent) -> str:
    return f"{e.timestamp}\t{e.sender}\t{','.join(e.recipients)}\t{e.status}\t{e.label}\n"


def write_events(events: Iterable[EmailEvent], fh: IO[str]) -> int:
    n = 0
    for e in events:
        fh.write(format_event(e))
        n += 1
    return n


def events_to_text(events: Iterable[EmailEvent]) -> str:
    buf = io.StringIO()
    write_events(events, buf)
    return buf.getvalue()


def transmissions(events: Iterable[EmailEvent]) -> Iterator[Transmission]:
    for e in events:
        yield from expand_recipients(e)
