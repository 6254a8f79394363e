"""Degree histograms and discrete power-law fits.

The primary estimator is the discrete maximum-likelihood fit of
``p(k) = k^-gamma / zeta(gamma, k_min)`` for ``k >= k_min``, with ``k_min``
chosen by minimizing the Kolmogorov-Smirnov distance between the empirical
and fitted tail CDFs. A least-squares fit on log-binned data is kept as a
cross-check that resembles eyeballed log-log slopes.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from typing import IO

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

from emailnet.errors import FitImpossibleError, UsageError
from emailnet.network import EmailNetwork

GAMMA_BOUNDS = (1.0 + 1e-9, 30.0)
MIN_TAIL_FRACTION = 0.01
MIN_TAIL_SPAN = 10.0
FLAVORS = ("undirected", "in", "out")


@dataclass(frozen=True)
class DegreeHistogram:
    flavor: str
    k: np.ndarray
    count: np.ndarray

    @property
    def total_vertices(self) -> int:
        return int(self.count.sum())

    @property
    def fraction(self) -> np.ndarray:
        return self.count / self.total_vertices

    def rows(self) -> list[tuple[int, int, float]]:
        return list(zip(self.k.tolist(), self.count.tolist(), self.fraction.tolist()))

    @classmethod
    def from_degrees(cls, degrees, flavor: str = "undirected") -> "DegreeHistogram":
        k, c = np.unique(np.asarray(degrees, dtype=np.int64), return_counts=True)
        return cls(flavor, k, c.astype(np.int64))

    @classmethod
    def from_counts(cls, mapping: dict[int, int], flavor: str = "undirected") -> "DegreeHistogram":
        items = sorted((int(k), int(c)) for k, c in mapping.items() if c > 0)
        k = np.array([i[0] for i in items], dtype=np.int64)
        c = np.array([i[1] for i in items], dtype=np.int64)
        return cls(flavor, k, c)

    def scaled(self, factor: int) -> "DegreeHistogram":
        return DegreeHistogram(self.flavor, self.k, self.count * int(factor))


def degree_histogram(net: EmailNetwork, flavor: str = "undirected") -> DegreeHistogram:
    if flavor not in FLAVORS:
        raise UsageError(f"unknown histogram flavor {flavor!r}")
    if flavor != "undirected" and not net.directed:
        raise UsageError(f"{flavor}-degree histogram needs a directed network")
    return DegreeHistogram.from_degrees(net.degrees(flavor), flavor)


@dataclass(frozen=True)
class PowerLawFit:
    gamma: float
    k_min: int
    ks_statistic: float
    tail_fraction: float
    method: str
    n_tail: int

    def to_dict(self) -> dict:
        d = asdict(self)
        return {"gamma": d["gamma"], "k_min": d["k_min"], "ks": d["ks_statistic"],
                "tail_fraction": d["tail_fraction"], "method": d["method"], "n_tail": d["n_tail"]}


def _positive_part(hist: DegreeHistogram) -> tuple[np.ndarray, np.ndarray]:
    keep = (hist.k >= 1) & (hist.count > 0)
    k, c = hist.k[keep], hist.count[keep]
    if len(k) < 2:
        raise FitImpossibleError(
            f"{hist.flavor} histogram has {len(k)} distinct positive degree(s); need 2")
    return k, c


def fitted_cdf(gamma: float, k_min: int, k) -> np.ndarray:
    """P(K <= k) for the discrete power law on ``k >= k_min``."""
    k = np.asarray(k, dtype=float)
    return 1.0 - zeta(gamma, k + 1.0) / zeta(gamma, k_min)


def _mle_gamma(k: np.ndarray, w: np.ndarray, k_min: int) -> float:
    mean_log = float(np.dot(w, np.log(k)))

    def nll(g: float) -> float:
        return np.log(zeta(g, k_min)) + g * mean_log

    res = minimize_scalar(nll, bounds=GAMMA_BOUNDS, method="bounded",
                          options={"xatol": 1e-9, "maxiter": 500})
    return float(res.x)


def _ks(k: np.ndarray, w: np.ndarray, gamma: float, k_min: int) -> float:
    """Sup distance between step CDFs; both are constant between observed
    degrees except the fitted one rising, so checking each observed k and
    the integer just before it is enough."""
    emp = np.cumsum(w)
    emp_before = emp - w
    fit_at = fitted_cdf(gamma, k_min, k)
    fit_before = fitted_cdf(gamma, k_min, k - 1)
    fit_before[k - 1 < k_min] = 0.0
    return float(max(np.max(np.abs(emp - fit_at)), np.max(np.abs(emp_before - fit_before))))


def log_bin(hist: DegreeHistogram, bins_per_decade: int = 10) -> list[tuple[float, float]]:
    """Geometric bins over ``k >= 1``: ``(bin_center, mean n(k) per integer k)``.

    Bin centers are the geometric mean of the first and last integer in the
    bin; bins with no observed degree are omitted.
    """
    if bins_per_decade < 1:
        raise UsageError("bins_per_decade must be >= 1")
    keep = hist.k >= 1
    k = hist.k[keep]
    if len(k) == 0:
        return []
    frac = hist.fraction[keep]
    top = int(np.ceil(np.log10(k.max()) * bins_per_decade)) + 1
    edges = np.ceil(np.round(10.0 ** (np.arange(top + 1) / bins_per_decade), 9)).astype(np.int64)
    out = []
    for lo, nxt in zip(edges[:-1], edges[1:]):
        hi = nxt - 1
        if hi < lo:
            continue
        sel = (k >= lo) & (k <= hi)
        if not sel.any():
            continue
        out.append((float(np.sqrt(lo * hi)), float(frac[sel].sum() / (hi - lo + 1))))
    return out


def _ls_gamma(hist: DegreeHistogram, k_min: int, bins_per_decade: int) -> float:
    pts = [(c, f) for c, f in log_bin(hist, bins_per_decade) if c >= k_min and f > 0]
    if len(pts) < 2:
        raise FitImpossibleError("fewer than two log bins above k_min")
    x = np.log10([p[0] for p in pts])
    y = np.log10([p[1] for p in pts])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def _fit_at(hist, k, c, k_min, method, bins_per_decade) -> PowerLawFit:
    tail = k >= k_min
    kt, ct = k[tail], c[tail]
    n_tail = int(ct.sum())
    w = ct / n_tail
    if method == "mle":
        gamma = _mle_gamma(kt, w, k_min)
    elif method == "logbin_ls":
        gamma = _ls_gamma(hist, k_min, bins_per_decade)
        if not gamma > 1.0:
            raise FitImpossibleError(f"log-binned slope gives gamma={gamma:.3f} <= 1")
    else:
        raise UsageError(f"unknown fit method {method!r}")
    ks = _ks(kt.astype(float), w, gamma, k_min)
    return PowerLawFit(gamma, int(k_min), ks, n_tail / hist.total_vertices, method, n_tail)


def fit_power_law(
    hist: DegreeHistogram,
    method: str = "mle",
    k_min: int | None = None,
    min_tail_fraction: float = MIN_TAIL_FRACTION,
    min_tail_span: float = MIN_TAIL_SPAN,
    bins_per_decade: int = 10,
) -> PowerLawFit:
    """Fit a discrete power law to the positive-degree part of ``hist``.

    ``k_min=None`` scans the observed degrees and keeps the cutoff with the
    smallest KS distance. The smallest positive degree is always a candidate;
    a larger one must leave a tail holding at least ``min_tail_fraction`` of
    the positive-degree vertices and spanning ``k_max / k_min >=
    min_tail_span``. Both rules depend only on shares and degrees, so
    multiplying all counts by a constant leaves the fit unchanged.
    """
    k, c = _positive_part(hist)
    if k_min is not None:
        if (k >= k_min).sum() < 2:
            raise FitImpossibleError(f"fewer than two distinct degrees >= {k_min}")
        return _fit_at(hist, k, c, k_min, method, bins_per_decade)

    n_pos = c.sum()
    tail_share = np.cumsum(c[::-1])[::-1] / n_pos
    best: PowerLawFit | None = None
    for i, km in enumerate(k[:-1].tolist()):
        if i > 0 and (tail_share[i] < min_tail_fraction or k[-1] < min_tail_span * km):
            break
        try:
            fit = _fit_at(hist, k, c, km, method, bins_per_decade)
        except FitImpossibleError:
            continue
        if best is None or fit.ks_statistic < best.ks_statistic:
            best = fit
    if best is None:
        raise FitImpossibleError("no admissible k_min")
    return best


def powerlaw_deviation(hist: DegreeHistogram) -> float:
    """KS distance of the best scanned MLE fit: 0 for a perfect power law."""
    return fit_power_law(hist, "mle").ks_statistic


# -- CSV -------------------------------------------------------------------

def write_histogram_csv(hist: DegreeHistogram, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["k", "count", "fraction"])
    for k, c, f in hist.rows():
        w.writerow([k, c, repr(f)])


def read_histogram_csv(fh: IO[str], flavor: str = "undirected") -> DegreeHistogram:
    rows = list(csv.DictReader(fh))
    k = np.array([int(r["k"]) for r in rows], dtype=np.int64)
    c = np.array([int(r["count"]) for r in rows], dtype=np.int64)
    return DegreeHistogram(flavor, k, c)
