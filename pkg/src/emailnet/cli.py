"""Command-line entry point: ``emailnet {ingest,synth,analyze,compare,show-config}``.

Exit codes: 0 success, 1 usage, 2 I/O, 3 degenerate input.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from dataclasses import fields, replace
from pathlib import Path

from emailnet.errors import ConfigurationError, EmailNetError, UndefinedValueError, UsageError
from emailnet.indicators import IndicatorConfig, load_config
from emailnet.ingest import IngestStats, anonymize_event, events_to_text, read_events, transmissions
from emailnet.network import DAY, Selector, TimeWindow, build_network, write_network
from emailnet.report import (
    analyze_selector,
    atomic_write,
    compare_reports,
    dumps,
    format_compare,
    parse_window,
    stats_by_selector,
)
from emailnet.synth import (
    DEFAULT_START,
    HamModelParams,
    SpamModelParams,
    generate_ham,
    generate_mix,
    generate_spam_days,
)

log = logging.getLogger("emailnet")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DEGENERATE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- ingest ----------------------------------------------------------------

def _read_key(args) -> bytes:
    if args.key_file:
        return Path(args.key_file).read_bytes().strip()
    if args.key_env:
        value = os.environ.get(args.key_env, "")
        if not value:
            raise ConfigurationError(f"environment variable {args.key_env} is empty or unset")
        return value.encode("utf-8")
    raise ConfigurationError("--anonymize needs --key-file or --key-env")


def cmd_ingest(args) -> int:
    key = _read_key(args) if args.anonymize else None
    stats = IngestStats()
    events = []
    for path in args.inputs:
        with open(path, "rb") as fh:
            for e in read_events(fh, stats):
                events.append(anonymize_event(e, key) if key else e)
    events.sort(key=lambda e: e.timestamp)
    out = Path(args.output) if args.output else Path(args.output_dir) / "events.tsv"
    atomic_write(out, events_to_text(events))
    print(f"{out}: {stats.summary()}")
    return EXIT_OK


# -- synth -----------------------------------------------------------------

_HAM_KEYS = {"n": "n_users", "n_users": "n_users", "m": "m", "reciprocity": "reciprocity",
             "events_per_day": "events_per_day", "rate": "events_per_day",
             "triad": "triad_prob", "triad_prob": "triad_prob", "seed": "seed"}
_SPAM_KEYS = {"spammers": "n_spammers", "n_spammers": "n_spammers", "fanout": "fanout",
              "pool": "target_pool", "target_pool": "target_pool",
              "rejection": "rejection_rate", "rejection_rate": "rejection_rate", "seed": "seed"}


def parse_key_values(items) -> dict[str, str]:
    out = {}
    for raw in items:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"expected key=value, got {raw.strip()!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def _coerce(cls, name: str, value: str):
    ftype = {f.name: f.type for f in fields(cls)}[name]
    try:
        if ftype in (int, "int"):
            return int(value)
        if ftype in (float, "float"):
            return float(value)
    except ValueError:
        raise UsageError(f"{name}={value!r} is not a number") from None
    return value


def _build_params(cls, aliases: dict, kv: dict, prefix: str, seed: int, strict: bool):
    params = cls(seed=seed)
    updates = {}
    for key, value in kv.items():
        bare = key[len(prefix):] if key.startswith(prefix) else key
        if key.startswith(("ham.", "spam.")) and not key.startswith(prefix):
            continue
        if bare in aliases:
            field_name = aliases[bare]
            updates[field_name] = _coerce(cls, field_name, value)
        elif strict and bare not in ("days", "start"):
            raise UsageError(f"unknown parameter {key!r}")
    return replace(params, **updates)


def cmd_synth(args) -> int:
    kv = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            kv.update(parse_key_values(fh))
    kv.update(parse_key_values(args.params))
    days = int(kv.get("days", 7))
    start = int(kv.get("start", DEFAULT_START))
    if days < 1:
        raise UsageError("days must be >= 1")
    window = TimeWindow(start, start + days * DAY)

    if args.model == "mix":
        known = set(_HAM_KEYS) | set(_SPAM_KEYS) | {"days", "start"}
        for key in kv:
            bare = key.split(".", 1)[1] if key.startswith(("ham.", "spam.")) else key
            if bare not in known:
                raise UsageError(f"unknown parameter {key!r}")
    strict = args.model != "mix"
    ham = spam = None
    if args.model in ("ham", "mix"):
        ham = _build_params(HamModelParams, _HAM_KEYS, kv, "ham.", args.seed, strict)
        ham.validate()
    if args.model in ("spam", "mix"):
        spam = _build_params(SpamModelParams, _SPAM_KEYS, kv, "spam.", args.seed, strict)
        spam.validate()

    if args.model == "ham":
        events = generate_ham(ham, window)
    elif args.model == "spam":
        events = generate_spam_days(spam, start, days)
    else:
        events = generate_mix(ham, spam, start, days)

    out = Path(args.output) if args.output else Path(args.output_dir) / f"{args.model}.tsv"
    atomic_write(out, events_to_text(events))
    seeds = " ".join(f"{name}.seed={p.seed}" for name, p in (("ham", ham), ("spam", spam)) if p)
    print(f"{out}: {len(events)} events {seeds} days={days} start={start}")
    return EXIT_OK


# -- analyze ---------------------------------------------------------------

def _selectors(values) -> list[Selector]:
    out = []
    for v in values or ["all"]:
        for part in v.split(","):
            part = part.strip()
            if not part:
                continue
            try:
                sel = Selector(part)
            except ValueError:
                raise UsageError(f"unknown selector {part!r}") from None
            if sel not in out:
                out.append(sel)
    return out


def _config(path) -> IndicatorConfig:
    if not path:
        return IndicatorConfig()
    with open(path, encoding="utf-8") as fh:
        return load_config(fh)


def cmd_analyze(args) -> int:
    selectors = _selectors(args.selector)
    cfg = _config(args.config)
    if args.paths == "exact" and args.path_sources_set:
        raise UsageError("--path-sources only applies to --paths sampled")
    stats = IngestStats()
    with open(args.events, "rb") as fh:
        events = list(read_events(fh, stats))
    if stats.malformed:
        log.warning("%s: skipped %d malformed records", args.events, stats.malformed)
    origin = min((e.timestamp for e in events), default=None)
    window = parse_window(args.window, origin, args.hours, args.tz_offset)
    net = build_network(transmissions(events), window.window)
    if net.n_edges == 0:
        raise UndefinedValueError(f"empty selection: no edges in window {window.label}")

    out_dir = Path(args.output_dir)
    stats_block = stats_by_selector(net)
    if args.save_network:
        buf = io.StringIO()
        write_network(net, buf)
        atomic_write(out_dir / "network.emailnet", buf.getvalue())

    results = []
    for sel in selectors:
        results.append(analyze_selector(
            net, window, sel, stats_block, paths=args.paths, path_sources=args.path_sources,
            seed=args.seed, force=args.force, config=cfg, threads=args.threads))
    for res in results:
        for name, text in res.tables.items():
            atomic_write(out_dir / name, text)
        path = out_dir / f"report_{res.report['selector']}.json"
        atomic_write(path, dumps(res.report))
        r = res.report
        ind = r["indicators"]
        verdict = ind.get("verdict", "n/a")
        score = ind.get("spam_score")
        score_txt = f"{score:.3f}" if score is not None else "n/a"
        print(f"{path}: window={r['window']['spec']} selector={r['selector']} "
              f"|V|={r['network_stats'][r['selector']]['vertices']} "
              f"C={r['clustering']['average']:.4g} spam_score={score_txt} verdict={verdict}")
    return EXIT_OK


# -- compare / show-config -------------------------------------------------

def cmd_compare(args) -> int:
    reports = []
    for path in (args.report_a, args.report_b):
        with open(path, encoding="utf-8") as fh:
            try:
                reports.append(json.load(fh))
            except json.JSONDecodeError as exc:
                raise UsageError(f"{path}: not JSON ({exc})") from None
    rows = compare_reports(*reports)
    names = (Path(args.report_a).stem, Path(args.report_b).stem)
    print(f"A={args.report_a}\nB={args.report_b}")
    print(format_compare(rows, names))
    return EXIT_OK


def cmd_show_config(args) -> int:
    sys.stdout.write(_config(args.config).to_lines())
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed (default 0)")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads for metric kernels (default 1)")
    common.add_argument("--output-dir", default=argparse.SUPPRESS,
                        help="directory for output files (default .)")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = _Parser(prog="emailnet", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("ingest", parents=[common], help="parse SMTP session logs into an event file")
    q.add_argument("inputs", nargs="+")
    q.add_argument("-o", "--output")
    q.add_argument("--anonymize", action="store_true")
    q.add_argument("--key-file")
    q.add_argument("--key-env")
    q.set_defaults(func=cmd_ingest)

    q = sub.add_parser("synth", parents=[common], help="generate synthetic traffic")
    q.add_argument("model", choices=["ham", "spam", "mix"])
    q.add_argument("params", nargs="*", metavar="key=value")
    q.add_argument("--config", help="key=value parameter file; command-line pairs win")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_synth)

    q = sub.add_parser("analyze", parents=[common], help="build networks and compute metrics")
    q.add_argument("events")
    q.add_argument("--window", default="all", help="all | day=<n> | <start>..<end>")
    q.add_argument("--hours", help="hour range within a day window, e.g. 6-18")
    q.add_argument("--tz-offset", type=float, default=0.0, help="hours east of UTC for day boundaries")
    q.add_argument("--selector", action="append",
                   help="all, ham, spam, rejected_plus_spam (repeatable or comma separated)")
    q.add_argument("--paths", choices=["none", "sampled", "exact"], default="none")
    q.add_argument("--exact-paths", dest="paths", action="store_const", const="exact")
    q.add_argument("--path-sources", type=int, default=None)
    q.add_argument("--force", action="store_true", help="allow exact paths on large components")
    q.add_argument("--config", help="indicator weights/thresholds (key=value)")
    q.add_argument("--save-network", action="store_true")
    q.set_defaults(func=cmd_analyze)

    q = sub.add_parser("compare", parents=[common], help="side-by-side diff of two reports")
    q.add_argument("report_a")
    q.add_argument("report_b")
    q.set_defaults(func=cmd_compare)

    q = sub.add_parser("show-config", parents=[common], help="print indicator defaults")
    q.add_argument("--config")
    q.set_defaults(func=cmd_show_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("seed", 0), ("threads", 1), ("output_dir", "."), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    if getattr(args, "command", None) == "analyze":
        args.path_sources_set = args.path_sources is not None
        if args.path_sources is None:
            args.path_sources = 1000
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("emailnet: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"emailnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UndefinedValueError as exc:
        print(f"emailnet: error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"emailnet: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EmailNetError as exc:
        print(f"emailnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
