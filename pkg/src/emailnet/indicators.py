"""Network-level spam indicators built from structural features.

The score is a weighted mean of per-feature "spamminess" terms in [0, 1]:

    clustering    1 - log10(1 + C/C_rand) / log10(1 + clustering_ratio_saturation)
    deviation_out powerlaw_deviation_out / deviation_saturation
    deviation_und powerlaw_deviation_undirected / deviation_saturation
    reciprocity   1 - reciprocity
    giant         1 - giant_fraction

each clipped to [0, 1]. Default weights and cut points were calibrated on
the synthetic ham/spam models in :mod:`emailnet.synth` only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import IO, Iterable

from emailnet.errors import ConfigurationError, UsageError
from emailnet.metrics import ComponentMode, clustering, components, reciprocity
from emailnet.network import EmailNetwork
from emailnet.powerlaw import degree_histogram, powerlaw_deviation


@dataclass(frozen=True)
class FeatureVector:
    avg_clustering: float
    clustering_vs_random: float
    powerlaw_deviation_out: float
    powerlaw_deviation_undirected: float
    giant_fraction: float
    reciprocity: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class IndicatorConfig:
    weight_clustering: float = 0.4
    weight_deviation_out: float = 0.4
    weight_reciprocity: float = 0.2
    weight_deviation_undirected: float = 0.0
    weight_giant: float = 0.0
    clustering_ratio_saturation: float = 10.0
    deviation_saturation: float = 0.2
    threshold: float = 0.5

    def __post_init__(self) -> None:
        ws = self.weights()
        if any(not math.isfinite(w) or w < 0 for w in ws.values()):
            raise ConfigurationError("weights must be finite and non-negative")
        if sum(ws.values()) <= 0:
            raise ConfigurationError("at least one weight must be positive")
        if self.clustering_ratio_saturation <= 0 or self.deviation_saturation <= 0:
            raise ConfigurationError("saturation points must be positive")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigurationError("threshold must lie in [0, 1]")

    def weights(self) -> dict[str, float]:
        return {f.name[len("weight_"):]: getattr(self, f.name)
                for f in fields(self) if f.name.startswith("weight_")}

    def to_lines(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)!r}\n" for f in fields(self))


def parse_config(lines: Iterable[str], base: IndicatorConfig | None = None) -> IndicatorConfig:
    """Read ``key=value`` lines; ``#`` starts a comment, unknown keys are errors."""
    known = {f.name for f in fields(IndicatorConfig)}
    values = asdict(base or IndicatorConfig())
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {n}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigurationError(f"line {n}: unknown key {key!r}")
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigurationError(f"line {n}: {key} is not a number") from None
    return IndicatorConfig(**values)


def load_config(fh: IO[str]) -> IndicatorConfig:
    return parse_config(fh)


def extract_features(net: EmailNetwork, threads: int = 1) -> FeatureVector:
    """All features on one directed network (same window, same selector)."""
    if not net.directed:
        raise UsageError("feature extraction needs the directed network")
    cl = clustering(net, threads=threads)
    return FeatureVector(
        avg_clustering=cl.average,
        clustering_vs_random=cl.ratio_to_random,
        powerlaw_deviation_out=powerlaw_deviation(degree_histogram(net, "out")),
        powerlaw_deviation_undirected=powerlaw_deviation(degree_histogram(net, "undirected")),
        giant_fraction=components(net, ComponentMode.UNDIRECTED_CONNECTED).giant_fraction,
        reciprocity=reciprocity(net),
    )


def _clip(x: float) -> float:
    return min(1.0, max(0.0, x))


def feature_terms(f: FeatureVector, cfg: IndicatorConfig) -> dict[str, float]:
    sat = math.log10(1.0 + cfg.clustering_ratio_saturation)
    return {
        "clustering": _clip(1.0 - math.log10(1.0 + max(f.clustering_vs_random, 0.0)) / sat),
        "deviation_out": _clip(f.powerlaw_deviation_out / cfg.deviation_saturation),
        "reciprocity": _clip(1.0 - f.reciprocity),
        "deviation_undirected": _clip(f.powerlaw_deviation_undirected / cfg.deviation_saturation),
        "giant": _clip(1.0 - f.giant_fraction),
    }


def spam_score(f: FeatureVector, cfg: IndicatorConfig | None = None) -> float:
    cfg = cfg or IndicatorConfig()
    weights = cfg.weights()
    terms = feature_terms(f, cfg)
    total = sum(weights.values())
    return sum(weights[k] * terms[k] for k in weights) / total


@dataclass(frozen=True)
class IndicatorReport:
    features: FeatureVector
    spam_score: float
    verdict: str
    thresholds_used: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"features": self.features.to_dict(), "spam_score": self.spam_score,
                "verdict": self.verdict, "thresholds_used": dict(self.thresholds_used)}


def assess(f: FeatureVector, cfg: IndicatorConfig | None = None) -> IndicatorReport:
    cfg = cfg or IndicatorConfig()
    score = spam_score(f, cfg)
    verdict = "non_social" if score >= cfg.threshold else "social"
    return IndicatorReport(f, score, verdict, asdict(cfg))


@dataclass(frozen=True)
class FeatureDiff:
    feature: str
    a: float
    b: float
    difference: float
    ratio: float


def ratio(a: float, b: float) -> float:
    """``a / b`` with ``0/0 = 1`` and ``x/0 = inf``."""
    if b == 0:
        return 1.0 if a == 0 else math.copysign(math.inf, a)
    return a / b


def compare_networks(a: FeatureVector, b: FeatureVector) -> list[FeatureDiff]:
    da, db = a.to_dict(), b.to_dict()
    return [FeatureDiff(k, da[k], db[k], da[k] - db[k], ratio(da[k], db[k])) for k in da]


def format_diff_table(rows: list[FeatureDiff], names: tuple[str, str] = ("a", "b")) -> str:
    head = f"{'feature':<32}{names[0]:>14}{names[1]:>14}{'a-b':>14}{'a/b':>12}"
    out = [head]
    for r in rows:
        out.append(f"{r.feature:<32}{r.a:>14.6g}{r.b:>14.6g}{r.difference:>14.6g}{r.ratio:>12.4g}")
    return "\n".join(out)
