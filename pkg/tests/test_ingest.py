import io
import random
import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from emailnet.errors import ConfigurationError
from emailnet.ingest import (
    EmailEvent,
    IngestStats,
    Label,
    SmtpSession,
    Status,
    anonymize,
    classify_session,
    events_to_text,
    expand_recipients,
    extract_address,
    parse_event_log,
    parse_session_log,
    read_events,
)


def log_lines(*records):
    return io.BytesIO("".join("\t".join(map(str, r)) + "\n" for r in records).encode())


def complete(sid, ts=100, sender="<a@x>", rcpt="<b@y>", label="spam"):
    return [(ts, sid, "MAIL_FROM", sender), (ts, sid, "RCPT_TO", rcpt), (ts, sid, "DATA", ""),
            (ts, sid, "DATA_END", ""), (ts, sid, "LABEL", label)]


class TestParseSessionLog:
    def test_minimal_complete_session(self):
        sessions = list(parse_session_log(log_lines(*complete("s1"))))
        assert len(sessions) == 1
        assert [v for v, _ in sessions[0].commands] == ["MAIL_FROM", "RCPT_TO", "DATA", "DATA_END"]
        assert sessions[0].label is Label.SPAM

    def test_empty_stream(self):
        stats = IngestStats()
        assert list(parse_session_log(io.BytesIO(b""), stats)) == []
        assert stats.malformed == 0

    def test_garbage_line_counted(self):
        recs = complete("s1") + complete("s2") + complete("s3")
        body = log_lines(*recs).getvalue() + b"not a record at all\n"
        stats = IngestStats()
        sessions = list(parse_session_log(io.BytesIO(body), stats))
        assert len(sessions) == 3
        assert stats.malformed == 1
        # sessions plus malformed items account for every record group
        assert stats.sessions + stats.malformed == 4

    @pytest.mark.parametrize("line", [
        "100\ts1\tHELO\tfoo",               # unknown verb
        "abc\ts1\tMAIL_FROM\t<a@x>",        # bad timestamp
        "100\ts1\tRCPT_TO\t<b@y>",          # recipient before MAIL_FROM
        "100\ts1\tLABEL\tmaybe",            # label outside {ham, spam}
        "100\ts1",
    ])
    def test_malformed_variants(self, line):
        stats = IngestStats()
        list(parse_session_log(io.StringIO(line + "\n"), stats))
        assert stats.malformed == 1

    def test_argumentless_verbs_may_omit_the_last_field(self):
        recs = "1\ts\tMAIL_FROM\t<a@x>\n1\ts\tRCPT_TO\t<b@y>\n1\ts\tDATA\n1\ts\tDATA_END\n1\ts\tLABEL\tham\n"
        stats = IngestStats()
        (s,) = parse_session_log(io.StringIO(recs), stats)
        assert len(s.commands) == 4 and stats.malformed == 0

    def test_undecodable_bytes_are_malformed(self):
        stats = IngestStats()
        list(parse_session_log(io.BytesIO(b"\xff\xfe\tbad\n"), stats))
        assert stats.malformed == 1

    def test_completed_without_label_is_malformed(self):
        recs = complete("s1")[:-1]
        stats = IngestStats()
        assert list(parse_session_log(log_lines(*recs), stats)) == []
        assert stats.malformed == 1

    def test_label_dropped_when_not_delivered(self):
        recs = [(1, "s", "MAIL_FROM", "<a@x>"), (1, "s", "RCPT_TO", "<b@y>"), (1, "s", "LABEL", "spam")]
        (s,) = parse_session_log(log_lines(*recs))
        assert s.label is Label.UNKNOWN

    def test_fixture_file(self, fixtures_dir):
        stats = IngestStats()
        with open(fixtures_dir / "sessions.log", "rb") as fh:
            sessions = list(parse_session_log(fh, stats))
        assert [s.session_id for s in sessions] == ["s1", "s2", "s3", "s4", "s5"]
        assert stats.malformed == 1


class TestClassify:
    def session(self, cmds, label=Label.UNKNOWN):
        return SmtpSession("s", 7, tuple(cmds), label)

    def test_accepted_spam(self):
        s = self.session([("MAIL_FROM", "<a@x>"), ("RCPT_TO", "<b@y>"), ("DATA", ""), ("DATA_END", "")],
                         Label.SPAM)
        (e,) = classify_session(s)
        assert (e.status, e.label, e.sender, e.recipients) == (Status.ACCEPTED, Label.SPAM, "a@x", ("b@y",))

    def test_rejected(self):
        stats = IngestStats()
        (e,) = classify_session(self.session([("MAIL_FROM", "<a@x>"), ("RCPT_TO", "<b@y>")]), stats)
        assert e.status is Status.REJECTED and e.label is Label.UNKNOWN
        assert stats.rejected == 1

    def test_null_sender_dropped(self):
        stats = IngestStats()
        s = self.session([("MAIL_FROM", "<>"), ("RCPT_TO", "<b@y>"), ("DATA", ""), ("DATA_END", "")],
                         Label.HAM)
        assert classify_session(s, stats) == []
        assert stats.null_sender == 1

    def test_no_commands_is_incomplete(self):
        stats = IngestStats()
        assert classify_session(self.session([]), stats) == []
        assert stats.incomplete == 1

    def test_sender_without_recipients_is_incomplete(self):
        stats = IngestStats()
        assert classify_session(self.session([("MAIL_FROM", "<a@x>")]), stats) == []
        assert stats.incomplete == 1

    def test_multiple_emails_per_session(self):
        cmds = [("MAIL_FROM", "<a@x>"), ("RCPT_TO", "<b@y>"), ("DATA", ""), ("DATA_END", ""),
                ("MAIL_FROM", "<c@x>"), ("RCPT_TO", "<d@y>")]
        events = classify_session(self.session(cmds, Label.HAM))
        assert [(e.sender, e.status) for e in events] == [("a@x", Status.ACCEPTED), ("c@x", Status.REJECTED)]

    def test_data_end_without_data_is_not_delivery(self):
        (e,) = classify_session(self.session(
            [("MAIL_FROM", "<a@x>"), ("RCPT_TO", "<b@y>"), ("DATA_END", "")], Label.SPAM))
        assert e.status is Status.REJECTED

    def test_completed_but_unlabelled_never_accepted(self):
        s = self.session([("MAIL_FROM", "<a@x>"), ("RCPT_TO", "<b@y>"), ("DATA", ""), ("DATA_END", "")])
        stats = IngestStats()
        assert classify_session(s, stats) == []
        assert stats.incomplete == 1

    @given(st.lists(st.sampled_from(["MAIL_FROM", "RCPT_TO", "DATA", "DATA_END"]), max_size=12),
           st.sampled_from(list(Label)))
    def test_never_accepted_unknown(self, verbs, label):
        cmds = [(v, "<x@y>" if v in ("MAIL_FROM", "RCPT_TO") else "") for v in verbs]
        for e in classify_session(self.session(cmds, label)):
            assert not (e.status is Status.ACCEPTED and e.label is Label.UNKNOWN)
            assert e.recipients


class TestExpandAndEvents:
    def test_three_recipients(self):
        e = EmailEvent(5, "a", ("b", "c", "d"), Status.ACCEPTED, Label.HAM)
        out = expand_recipients(e)
        assert [t.recipient for t in out] == ["b", "c", "d"]

    def test_self_loop_preserved(self):
        (t,) = expand_recipients(EmailEvent(5, "a", ("a",), Status.ACCEPTED, Label.SPAM))
        assert t.sender == t.recipient == "a"

    def test_single_recipient_identity(self):
        e = EmailEvent(5, "a", ("b",), Status.REJECTED, Label.UNKNOWN)
        (t,) = expand_recipients(e)
        assert (t.sender, t.recipient, t.timestamp, t.status, t.label) == ("a", "b", 5, e.status, e.label)

    @pytest.mark.parametrize("status,label", [
        (Status.ACCEPTED, Label.UNKNOWN), (Status.REJECTED, Label.HAM), (Status.INCOMPLETE, Label.SPAM)])
    def test_event_invariants(self, status, label):
        with pytest.raises(ValueError):
            EmailEvent(1, "a", ("b",), status, label)
        with pytest.raises(ValueError):
            EmailEvent(1, "a", (), Status.REJECTED, Label.UNKNOWN)

    @given(st.lists(st.text(alphabet=string.ascii_lowercase, min_size=1, max_size=5), min_size=1, max_size=6))
    def test_length_preserving(self, rcpts):
        assert len(expand_recipients(EmailEvent(1, "s", tuple(rcpts), Status.ACCEPTED, Label.HAM))) == len(rcpts)

    def test_event_log_round_trip(self):
        events = [EmailEvent(1, "a@x", ("b@y", "c@y"), Status.ACCEPTED, Label.HAM),
                  EmailEvent(2, "d@x", ("a@x",), Status.REJECTED, Label.UNKNOWN)]
        text = events_to_text(events)
        assert list(parse_event_log(io.StringIO(text))) == events

    def test_event_log_skips_null_and_incomplete(self):
        stats = IngestStats()
        text = "1\t\tb@y\taccepted\tham\n2\ta@x\tb@y\tincomplete\tunknown\n3\ta@x\tb@y\tbogus\tham\n"
        assert list(parse_event_log(io.StringIO(text), stats)) == []
        assert (stats.null_sender, stats.incomplete, stats.malformed) == (1, 1, 1)

    def test_read_events_sniffs_both_formats(self, fixtures_dir):
        stats = IngestStats()
        with open(fixtures_dir / "sessions.log", "rb") as fh:
            events = list(read_events(fh, stats))
        assert stats.null_sender == 2
        assert [(e.sender, e.status) for e in events] == [
            ("Alice@Example.org", Status.ACCEPTED), ("spammer@bad.example", Status.REJECTED),
            ("eve@example.org", Status.ACCEPTED)]
        again = list(read_events(io.StringIO(events_to_text(events))))
        assert again == events


class TestAnonymize:
    def test_normalization(self):
        assert anonymize("A@X.se", b"k") == anonymize("  a@x.se ", b"k")

    def test_key_matters(self):
        assert anonymize("a@x.se", b"k1") != anonymize("a@x.se", b"k2")

    def test_width(self):
        assert len(anonymize("a@x", b"k")) == 32  # 128 bits

    def test_empty_key(self):
        with pytest.raises(ConfigurationError):
            anonymize("a@x", b"")

    def test_no_collisions_on_a_million_addresses(self):
        rnd = random.Random(1)
        addrs = {f"{rnd.getrandbits(64):016x}@{rnd.getrandbits(16):04x}.example" for _ in range(10**6)}
        assert len(addrs) == 10**6
        ids = {anonymize(a, b"secret") for a in addrs}
        assert len(ids) == 10**6


@pytest.mark.parametrize("arg,expected", [
    ("<a@x>", "a@x"), ("a@x", "a@x"), ("<>", ""), ("", ""), (" <a@x> SIZE=10", "a@x"), ("a@x BODY=8BIT", "a@x")])
def test_extract_address(arg, expected):
    assert extract_address(arg) == expected
