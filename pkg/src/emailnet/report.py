"""JSON analysis reports and CSV tables for one (window, selector) pair."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from emailnet.errors import EmailNetError, UndefinedValueError, UsageError
from emailnet.indicators import IndicatorConfig, assess, extract_features, ratio
from emailnet.metrics import (
    ComponentMode,
    ComponentSummary,
    average_path_length,
    clustering,
    component_size_histogram,
    components,
)
from emailnet.network import EmailNetwork, Selector, TimeWindow, network_stats, subnetwork
from emailnet.powerlaw import FLAVORS, degree_histogram, fit_power_law, write_histogram_csv

SCHEMA = "emailnet.report"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class WindowSpec:
    window: TimeWindow | None
    label: str

    def to_dict(self) -> dict:
        w = self.window
        return {
            "spec": self.label,
            "start": w.start if w else None,
            "end": w.end if w else None,
            "hours": w.hours if w else None,
        }


def parse_window(spec: str, origin: int | None, hours: str | None = None,
                 tz_offset: float = 0.0) -> WindowSpec:
    """``all``, ``day=<n>`` (optionally narrowed by ``hours="6-18"``) or ``<start>..<end>``."""
    spec = spec.strip()
    if spec == "all":
        if hours:
            raise UsageError("--hours only applies to day=<n> windows")
        return WindowSpec(None, "all")
    if spec.startswith("day="):
        try:
            n = int(spec[4:])
        except ValueError:
            raise UsageError(f"bad day number in {spec!r}") from None
        lo, hi = 0.0, 24.0
        if hours:
            try:
                lo, hi = (float(x) for x in hours.split("-", 1))
            except ValueError:
                raise UsageError(f"bad hour range {hours!r}, expected e.g. 6-18") from None
        if origin is None:
            raise UndefinedValueError("no events to anchor day numbering")
        w = TimeWindow.day(n, origin, (lo, hi), tz_offset)
        label = f"day={n}" if not hours else f"day={n} {lo:02.0f}:00-{hi:02.0f}:00"
        if tz_offset:
            label += f" tz={tz_offset:+g}h"
        return WindowSpec(w, label)
    if ".." in spec:
        a, b = spec.split("..", 1)
        try:
            return WindowSpec(TimeWindow(int(a), int(b)), spec)
        except ValueError:
            raise UsageError(f"bad window bounds in {spec!r}") from None
    raise UsageError(f"window must be all, day=<n> or <start>..<end>, got {spec!r}")


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _components_dict(s: ComponentSummary) -> dict:
    return {
        "count": s.n_components,
        "giant_size": s.giant_size,
        "giant_fraction": s.giant_fraction,
        "second_largest": s.second_largest,
    }


@dataclass
class SelectorResult:
    report: dict
    tables: dict[str, str]  # file name -> CSV text


def _size_csv(summary: ComponentSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["size", "components", "fraction"])
    for size, count, frac in component_size_histogram(summary):
        w.writerow([size, count, repr(frac)])
    return buf.getvalue()


def analyze_selector(
    net: EmailNetwork,
    window: WindowSpec,
    selector: Selector,
    stats_block: dict,
    paths: str = "none",
    path_sources: int = 1000,
    seed: int = 0,
    force: bool = False,
    config: IndicatorConfig | None = None,
    threads: int = 1,
) -> SelectorResult:
    sub = subnetwork(net, selector)
    if sub.n_edges == 0:
        raise UndefinedValueError(
            f"empty selection: no {selector} edges in window {window.label}")
    sel = str(selector)
    tables: dict[str, str] = {}

    fits = {}
    for flavor in FLAVORS:
        hist = degree_histogram(sub, flavor)
        buf = io.StringIO()
        write_histogram_csv(hist, buf)
        name = f"{sel}_{flavor}_degree.csv"
        tables[name] = buf.getvalue()
        try:
            fits[flavor] = fit_power_law(hist).to_dict()
        except EmailNetError as exc:
            fits[flavor] = {"error": str(exc)}

    comps = {}
    for mode, fname in ((ComponentMode.UNDIRECTED_CONNECTED, f"{sel}_cc_sizes.csv"),
                        (ComponentMode.DIRECTED_STRONG, f"{sel}_scc_sizes.csv")):
        summary = components(sub, mode)
        comps[str(mode)] = _components_dict(summary)
        tables[fname] = _size_csv(summary)

    cl = clustering(sub, threads=threads)
    clustering_block = {
        "average": cl.average,
        "random_baseline": cl.random_baseline,
        "ratio_to_random": cl.ratio_to_random,
        "vertices_with_triangles": int((cl.triangle_edge_counts > 0).sum()),
    }

    path_block = None
    if paths != "none":
        try:
            est = average_path_length(sub, sources=None if paths == "exact" else path_sources,
                                      seed=seed, force=force, threads=threads)
            path_block = {"mean": est.mean, "sample_sources": est.sample_sources,
                          "exact": est.exact, "component_size": est.component_size,
                          "seed": None if est.exact else seed}
        except UndefinedValueError as exc:
            path_block = {"error": str(exc)}

    try:
        indicators = assess(extract_features(sub, threads=threads), config).to_dict()
    except UndefinedValueError as exc:
        indicators = {"error": str(exc)}

    report = {
        "schema": SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "window": window.to_dict(),
        "selector": sel,
        "network_stats": stats_block,
        "clustering": clustering_block,
        "components": comps,
        "fits": fits,
        "paths": path_block,
        "indicators": indicators,
        "tables": sorted(tables),
    }
    return SelectorResult(report, tables)


def stats_by_selector(net: EmailNetwork) -> dict:
    out = {}
    for s in Selector:
        sub = subnetwork(net, s)
        out[str(s)] = network_stats(sub) if sub.n_edges else {
            "vertices": 0, "edges_directed": 0, "edges_undirected": 0, "self_loops": 0,
            "transmissions": 0, "mean_degree": None}
    return out


def dumps(report: dict) -> str:
    def clean(obj):
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        return _finite(obj)

    return json.dumps(clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- comparison ------------------------------------------------------------

_COMPARED_SECTIONS = ("clustering", "components", "fits", "paths", "indicators")


def flatten_metrics(report: dict) -> dict[str, float]:
    """Numeric leaves of the metric sections, keyed by dotted path."""
    out: dict[str, float] = {}

    def walk(prefix: str, obj) -> None:
        if isinstance(obj, dict):
            for k in sorted(obj):
                if k == "thresholds_used":
                    continue
                walk(f"{prefix}.{k}" if prefix else k, obj[k])
        elif isinstance(obj, (int, float)) and not isinstance(obj, bool):
            out[prefix] = float(obj)

    sel = report.get("selector")
    walk("network_stats", report.get("network_stats", {}).get(sel, {}))
    for section in _COMPARED_SECTIONS:
        walk(section, report.get(section))
    return out


def check_schema(report: dict, name: str) -> None:
    if report.get("schema") != SCHEMA:
        raise UsageError(f"{name}: not an emailnet report")


def compare_reports(a: dict, b: dict) -> list[tuple[str, float | None, float | None, float | None, float | None]]:
    check_schema(a, "report A")
    check_schema(b, "report B")
    if a.get("schema_version") != b.get("schema_version"):
        raise UsageError(
            f"schema version mismatch: {a.get('schema_version')} vs {b.get('schema_version')}")
    fa, fb = flatten_metrics(a), flatten_metrics(b)
    rows = []
    for key in sorted(set(fa) | set(fb)):
        va, vb = fa.get(key), fb.get(key)
        if va is None or vb is None:
            rows.append((key, va, vb, None, None))
        else:
            rows.append((key, va, vb, va - vb, ratio(va, vb)))
    return rows


def format_compare(rows: Sequence, names: tuple[str, str]) -> str:
    def cell(x, fmt):
        return "-" if x is None else format(x, fmt)

    width = max([len(r[0]) for r in rows] + [6]) + 2
    lines = [f"{'metric':<{width}}{names[0][:14]:>16}{names[1][:14]:>16}{'A-B':>14}{'A/B':>12}"]
    for key, va, vb, diff, rat in rows:
        lines.append(f"{key:<{width}}{cell(va, '>16.6g')}{cell(vb, '>16.6g')}"
                     f"{cell(diff, '>14.6g')}{cell(rat, '>12.4g')}")
    return "\n".join(lines)
