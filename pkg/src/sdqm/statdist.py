"""Nonparametric two-sample comparison measures.

Seven measures over a pair of empirical distributions: Kolmogorov-Smirnov,
Anderson-Darling (two-sample rank form), KL divergence, Jensen-Shannon
divergence, energy distance, 1-D Wasserstein distance, and Bhattacharyya
distance. Sample-based measures also have ``*_counts`` variants operating
on (value, count) form, which the annotation/pixel metrics use so that
binned data with millions of observations stays cheap.

Conventions pinned here:

* ECDFs are right-continuous step functions.
* KL smoothing adds 1e-10 to every Q bin and renormalizes.
* Energy distance is the rooted metric D, with V-statistic pairwise means.
* The Anderson-Darling value is the raw tie-adjusted statistic, not a
  p-value; identical degenerate samples (all values tied) evaluate to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

KL_SMOOTHING_EPS = 1e-10
BHATTACHARYYA_EPS = 1e-10

HISTOGRAM_BINS = 256
_MASS_TOL = 1e-9


@dataclass(frozen=True)
class EmpiricalDistribution:
    """A weighted sample set or a binned histogram.

    ``samples`` is sorted ascending for kind ``samples``; ``edges`` has
    ``len(masses) + 1`` strictly increasing entries for kind ``histogram``
    and the masses sum to one.
    """

    kind: str  # "samples" | "histogram"
    samples: np.ndarray | None = None
    edges: np.ndarray | None = None
    masses: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind == "samples":
            s = np.sort(np.asarray(self.samples, dtype=np.float64))
            if s.size == 0:
                raise ValidationError("empty sample distribution")
            if not np.isfinite(s).all():
                raise ValidationError("sample distribution contains non-finite values")
            s.setflags(write=False)
            object.__setattr__(self, "samples", s)
        elif self.kind == "histogram":
            edges = np.asarray(self.edges, dtype=np.float64)
            masses = np.asarray(self.masses, dtype=np.float64)
            if edges.ndim != 1 or masses.ndim != 1 or edges.size != masses.size + 1:
                raise ValidationError("histogram needs k masses and k+1 edges")
            if not (np.diff(edges) > 0).all():
                raise ValidationError("histogram edges must be strictly increasing")
            if (masses < 0).any():
                raise ValidationError("histogram masses must be nonnegative")
            if abs(masses.sum() - 1.0) > _MASS_TOL:
                raise ValidationError(
                    f"histogram masses sum to {masses.sum()}, expected 1"
                )
            edges.setflags(write=False)
            masses.setflags(write=False)
            object.__setattr__(self, "edges", edges)
            object.__setattr__(self, "masses", masses)
        else:
            raise ValidationError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def from_samples(cls, values) -> "EmpiricalDistribution":
        return cls(kind="samples", samples=np.asarray(values, dtype=np.float64))

    @classmethod
    def from_histogram(cls, edges, masses) -> "EmpiricalDistribution":
        return cls(kind="histogram", edges=edges, masses=masses)

    @property
    def n(self) -> int:
        return int(self.samples.size) if self.kind == "samples" else int(self.masses.size)


def histogram_pair(
    x, y, bins: int = HISTOGRAM_BINS
) -> tuple[EmpiricalDistribution, EmpiricalDistribution]:
    """Bin two continuous samples onto shared equal-width edges.

    Edges span the pooled min-max of both inputs; a fully degenerate pool
    (all values equal) collapses to one unit-width bin.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0 or y.size == 0:
        raise ValidationError("histogram_pair requires nonempty inputs")
    lo = min(x.min(), y.min())
    hi = max(x.max(), y.max())
    if lo == hi:
        edges = np.array([lo - 0.5, lo + 0.5])
    else:
        edges = np.linspace(lo, hi, bins + 1)
    px, _ = np.histogram(x, bins=edges)
    py, _ = np.histogram(y, bins=edges)
    return (
        EmpiricalDistribution.from_histogram(edges, px / px.sum()),
        EmpiricalDistribution.from_histogram(edges, py / py.sum()),
    )


def _require(P: EmpiricalDistribution, Q: EmpiricalDistribution, kind: str) -> None:
    if P.kind != kind or Q.kind != kind:
        raise ValidationError(
            f"expected two {kind!r} distributions, got {P.kind!r} and {Q.kind!r}"
        )


def _require_shared_edges(P: EmpiricalDistribution, Q: EmpiricalDistribution) -> None:
    _require(P, Q, "histogram")
    if not np.array_equal(P.edges, Q.edges):
        raise ValidationError("histogram bin edges differ between P and Q")


def _to_counts(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    values, counts = np.unique(samples, return_counts=True)
    return values, counts.astype(np.float64)


def _aligned_counts(
    xs: np.ndarray, ys: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Counts of both samples on the shared sorted grid of pooled values."""
    vx, cx = _to_counts(xs)
    vy, cy = _to_counts(ys)
    grid = np.union1d(vx, vy)
    cp = np.zeros(grid.size)
    cq = np.zeros(grid.size)
    cp[np.searchsorted(grid, vx)] = cx
    cq[np.searchsorted(grid, vy)] = cy
    return grid, cp, cq


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov


def ks_counts(counts_p, counts_q) -> float:
    """KS statistic for two samples given as counts on a shared grid.

    Only the ordering of the grid matters, so the values themselves are
    not needed.
    """
    cp = np.asarray(counts_p, dtype=np.float64)
    cq = np.asarray(counts_q, dtype=np.float64)
    fp = np.cumsum(cp) / cp.sum()
    fq = np.cumsum(cq) / cq.sum()
    return float(np.abs(fp - fq).max())


def ks_statistic(P: EmpiricalDistribution, Q: EmpiricalDistribution) -> float:
    """Sup-norm distance between the two (E)CDFs; lies in [0, 1]."""
    if P.kind != Q.kind:
        raise ValidationError("ks_statistic requires matching distribution kinds")
    if P.kind == "samples":
        _, cp, cq = _aligned_counts(P.samples, Q.samples)
        return ks_counts(cp, cq)
    _require_shared_edges(P, Q)
    return float(np.abs(np.cumsum(P.masses) - np.cumsum(Q.masses)).max())


# ---------------------------------------------------------------------------
# Anderson-Darling (two-sample, tie-adjusted rank form)


def ad_statistic_counts(values, counts_p, counts_q) -> float:
    """Tie-adjusted two-sample Anderson-Darling statistic from counts.

    ``values`` must be strictly increasing; counts are per-value
    multiplicities. Only the counts enter the statistic.
    """
    cp = np.asarray(counts_p, dtype=np.float64)
    cq = np.asarray(counts_q, dtype=np.float64)
    pooled = cp + cq
    keep = pooled > 0
    cp, cq, pooled = cp[keep], cq[keep], pooled[keep]
    n1 = cp.sum()
    n2 = cq.sum()
    if n1 < 2 or n2 < 2:
        raise ValidationError("ad_statistic requires at least 2 points per sample")
    if pooled.size < 2:
        return 0.0  # every observation tied at one value
    total = n1 + n2
    before = np.concatenate(([0.0], np.cumsum(pooled)[:-1]))
    b = before + pooled / 2.0
    denom = b * (total - b) - total * pooled / 4.0
    stat = 0.0
    for counts, n_i in ((cp, n1), (cq, n2)):
        before_i = np.concatenate(([0.0], np.cumsum(counts)[:-1]))
        m = before_i + counts / 2.0
        inner = pooled / total * (total * m - b * n_i) ** 2 / denom
        stat += float(inner.sum()) / n_i
    return stat * (total - 1.0) / total


def ad_statistic(P: EmpiricalDistribution, Q: EmpiricalDistribution) -> float:
    """Raw two-sample Anderson-Darling rank statistic (no p-value)."""
    _require(P, Q, "samples")
    grid, cp, cq = _aligned_counts(P.samples, Q.samples)
    return ad_statistic_counts(grid, cp, cq)


# ---------------------------------------------------------------------------
# KL and Jensen-Shannon divergence (histogram form)


_SUPPORT_FLOOR = 1e-300  # a mass this small contributes < 1e-297 nats


def _kl_raw(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p||q) in nats over the support of p; caller guarantees q > 0
    there. Subnormal masses are dropped: their terms are negligible but
    would underflow the mixture denominator."""
    support = p > _SUPPORT_FLOOR
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


def kl_divergence(P: EmpiricalDistribution, Q: EmpiricalDistribution) -> float:
    """KL(P||Q) in nats with additive smoothing of Q.

    Every Q bin receives 1e-10 mass before renormalization, so zero-mass
    Q bins under P support stay finite.
    """
    _require_shared_edges(P, Q)
    q = Q.masses + KL_SMOOTHING_EPS
    q = q / q.sum()
    return max(_kl_raw(P.masses, q), 0.0)


def js_divergence(P: EmpiricalDistribution, Q: EmpiricalDistribution) -> float:
    """Jensen-Shannon divergence in nats; bounded by ln 2, no smoothing."""
    _require_shared_edges(P, Q)
    m = 0.5 * (P.masses + Q.masses)
    val = 0.5 * _kl_raw(P.masses, m) + 0.5 * _kl_raw(Q.masses, m)
    return min(max(val, 0.0), float(np.log(2.0)))


# ---------------------------------------------------------------------------
# Energy distance (rooted) and 1-D Wasserstein


def _mean_abs_diff(values: np.ndarray, c1: np.ndarray, c2: np.ndarray) -> float:
    """(1 / n1 n2) * sum_ij c1_i c2_j |v_i - v_j| via prefix sums."""
    n1 = c1.sum()
    n2 = c2.sum()
    pc = np.cumsum(c1)            # count of sample-1 values <= v_j
    ps = np.cumsum(c1 * values)   # their weighted sum
    total = ps[-1]
    contrib = c2 * (values * pc - ps + (total - ps) - values * (n1 - pc))
    return float(contrib.sum()) / (n1 * n2)


def energy_distance_counts(values, counts_p, counts_q) -> float:
    """Rooted energy distance from counts on a shared value grid."""
    v = np.asarray(values, dtype=np.float64)
    cp = np.asarray(counts_p, dtype=np.float64)
    cq = np.asarray(counts_q, dtype=np.float64)
    if cp.sum() == 0 or cq.sum() == 0:
        raise ValidationError("energy_distance requires nonempty samples")
    # canonical argument order so f(P, Q) and f(Q, P) run identical
    # arithmetic and stay exactly symmetric
    for a, b in zip(cp, cq):
        if a != b:
            if b > a:
                cp, cq = cq, cp
            break
    exy = _mean_abs_diff(v, cp, cq)
    exx = _mean_abs_diff(v, cp, cp)
    eyy = _mean_abs_diff(v, cq, cq)
    return float(np.sqrt(max(2.0 * exy - exx - eyy, 0.0)))


def energy_distance(P: EmpiricalDistribution, Q: EmpiricalDistribution) -> float:
    """Rooted energy distance D with exact pairwise (V-statistic) means."""
    _require(P, Q, "samples")
    grid, cp, cq = _aligned_counts(P.samples, Q.samples)
    return energy_distance_counts(grid, cp, cq)


def wasserstein_counts(values, counts_p, counts_q) -> float:
    """1-D W1 distance from counts on a shared sorted value grid."""
    v = np.asarray(values, dtype=np.float64)
    cp = np.asarray(counts_p, dtype=np.float64)
    cq = np.asarray(counts_q, dtype=np.float64)
    fp = np.cumsum(cp) / cp.sum()
    fq = np.cumsum(cq) / cq.sum()
    if v.size < 2:
        return 0.0
    return float(np.sum(np.abs(fp[:-1] - fq[:-1]) * np.diff(v)))


def wasserstein_1d(P: EmpiricalDistribution, Q: EmpiricalDistribution) -> float:
    """W1 as the integral between the two ECDFs."""
    _require(P, Q, "samples")
    grid, cp, cq = _aligned_counts(P.samples, Q.samples)
    return wasserstein_counts(grid, cp, cq)


# ---------------------------------------------------------------------------
# Bhattacharyya distance (histogram form)


def bhattacharyya_distance(P: EmpiricalDistribution, Q: EmpiricalDistribution) -> float:
    """-ln of the Bhattacharyya coefficient, clamped before the log.

    The coefficient can round to just above 1 for near-identical
    histograms, so the result is floored at zero.
    """
    _require_shared_edges(P, Q)
    coeff = float(np.sqrt(P.masses * Q.masses).sum())
    return max(float(-np.log(max(coeff, BHATTACHARYYA_EPS))), 0.0)


ALL_MEASURES = (
    "ks",
    "ad",
    "kl",
    "js",
    "energy",
    "wasserstein",
    "bhattacharyya",
)


def score_table(x, y, bins: int = HISTOGRAM_BINS) -> dict[str, float]:
    """All seven measures between two raw 1-D samples.

    Sample-kind measures run on the raw values; histogram-kind measures
    run on the shared equal-width binning.
    """
    sp = EmpiricalDistribution.from_samples(x)
    sq = EmpiricalDistribution.from_samples(y)
    hp, hq = histogram_pair(x, y, bins=bins)
    return {
        "ks": ks_statistic(sp, sq),
        "ad": ad_statistic(sp, sq),
        "kl": kl_divergence(hp, hq),
        "js": js_divergence(hp, hq),
        "energy": energy_distance(sp, sq),
        "wasserstein": wasserstein_1d(sp, sq),
        "bhattacharyya": bhattacharyya_distance(hp, hq),
    }
