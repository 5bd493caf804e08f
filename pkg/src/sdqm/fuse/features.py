"""Sub-metric vectors and the engineered regression terms.

Each sub-metric contributes a fixed group of linear/quadratic/interaction
terms. Three groups (frontier area, authenticity, clusterability) are
excluded by default because they carry little extra signal next to their
correlated neighbors; they can be re-included explicitly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import FormatError, ValidationError

SUBMETRIC_FIELDS = (
    "mauve",
    "mauve_star",
    "fi",
    "fi_star",
    "alpha_precision",
    "beta_recall",
    "authenticity",
    "sep_accuracy",
    "sep_param_count",
    "cluster_c",
    "cluster_l",
    "bbox_ed_aspect",
    "bbox_ed_diagonal",
    "bbox_ed_area",
    "pixel_ad_red",
    "pixel_ad_green",
    "label_ks",
    "spatial_rmse",
    "h_y",
    "h_y_given_x",
    "v_information",
)


@dataclass
class SubMetricVector:
    """Named sub-metric sub-components for one dataset pair.

    ``None`` marks an absent value, allowed only for sub-metrics that
    were toggled off or dropped from the regression.
    """

    provenance: str = ""
    mauve: float | None = None
    mauve_star: float | None = None
    fi: float | None = None
    fi_star: float | None = None
    alpha_precision: float | None = None
    beta_recall: float | None = None
    authenticity: float | None = None
    sep_accuracy: float | None = None
    sep_param_count: float | None = None
    cluster_c: float | None = None
    cluster_l: float | None = None
    bbox_ed_aspect: float | None = None
    bbox_ed_diagonal: float | None = None
    bbox_ed_area: float | None = None
    pixel_ad_red: float | None = None
    pixel_ad_green: float | None = None
    label_ks: float | None = None
    spatial_rmse: float | None = None
    h_y: float | None = None
    h_y_given_x: float | None = None
    v_information: float | None = None

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name == "provenance":
                continue
            v = getattr(self, f.name)
            if v is not None and (not isinstance(v, (int, float)) or math.isnan(v)):
                raise ValidationError(f"sub-metric {f.name} is NaN or non-numeric")

    def present(self) -> set[str]:
        return {
            f.name
            for f in fields(self)
            if f.name != "provenance" and getattr(self, f.name) is not None
        }


@dataclass(frozen=True)
class FeatureRow:
    """Engineered term values in schema order."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.names),):
            raise ValidationError("feature values must match the name schema")
        if not np.isfinite(values).all():
            raise ValidationError("feature values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _need(v: SubMetricVector, *names: str) -> list[float]:
    out = []
    for name in names:
        value = getattr(v, name)
        if value is None:
            raise ValidationError(f"sub-metric field {name!r} required but absent")
        out.append(float(value))
    return out


def _terms_fi(v):
    (fi_star,) = _need(v, "fi_star")
    return [("fi_star", fi_star)]


def _terms_mauve(v):
    mauve, star = _need(v, "mauve", "mauve_star")
    return [("mauve_star_sq", star * star), ("mauve_x_mauve_star", mauve * star)]


def _terms_alpha(v):
    (x,) = _need(v, "alpha_precision")
    return [("alpha_precision", x)]


def _terms_beta(v):
    (x,) = _need(v, "beta_recall")
    return [("beta_recall", x), ("beta_recall_sq", x * x)]


def _terms_authenticity(v):
    (x,) = _need(v, "authenticity")
    return [("authenticity", x), ("authenticity_sq", x * x)]


def _terms_separability(v):
    a, p = _need(v, "sep_accuracy", "sep_param_count")
    return [("sep_accuracy", a), ("sep_param_count", p)]


def _terms_clusterability(v):
    c, l = _need(v, "cluster_c", "cluster_l")
    return [
        ("cluster_c_sq", c * c),
        ("cluster_l_sq", l * l),
        ("cluster_c_l", c * l),
        ("cluster_c", c),
        ("cluster_l", l),
    ]


def _terms_bbox(v):
    ar, diag, area = _need(v, "bbox_ed_aspect", "bbox_ed_diagonal", "bbox_ed_area")
    return [
        ("bbox_ed_aspect", ar),
        ("bbox_ed_diagonal", diag),
        ("bbox_ed_area", area),
        ("bbox_ed_aspect_sq", ar * ar),
        ("bbox_ed_diagonal_sq", diag * diag),
        ("bbox_ed_aspect_diagonal", ar * diag),
    ]


def _terms_pixel(v):
    r, g = _need(v, "pixel_ad_red", "pixel_ad_green")
    return [
        ("pixel_ad_green", g),
        ("pixel_ad_red_sq", r * r),
        ("pixel_ad_green_red", g * r),
    ]


def _terms_label(v):
    (ks,) = _need(v, "label_ks")
    return [("label_ks_sq", ks * ks)]


def _terms_spatial(v):
    (x,) = _need(v, "spatial_rmse")
    return [("spatial_rmse", x), ("spatial_rmse_sq", x * x)]


def _terms_vinfo(v):
    h_y, h_yx, vi = _need(v, "h_y", "h_y_given_x", "v_information")
    return [
        ("h_y", h_y),
        ("h_y_given_x", h_yx),
        ("v_information", vi),
        ("v_information_x_h_y_given_x", vi * h_yx),
    ]


_GROUP_BUILDERS = {
    "fi": _terms_fi,
    "mauve": _terms_mauve,
    "alpha_precision": _terms_alpha,
    "beta_recall": _terms_beta,
    "authenticity": _terms_authenticity,
    "separability": _terms_separability,
    "clusterability": _terms_clusterability,
    "bbox": _terms_bbox,
    "pixel": _terms_pixel,
    "label": _terms_label,
    "spatial": _terms_spatial,
    "vinfo": _terms_vinfo,
}

GROUP_ORDER = (
    "fi",
    "mauve",
    "alpha_precision",
    "beta_recall",
    "authenticity",
    "separability",
    "clusterability",
    "bbox",
    "pixel",
    "label",
    "spatial",
    "vinfo",
)

DEFAULT_DROPPED = frozenset({"mauve", "authenticity", "clusterability"})


def default_groups(include_dropped: bool = False) -> tuple[str, ...]:
    if include_dropped:
        return GROUP_ORDER
    return tuple(g for g in GROUP_ORDER if g not in DEFAULT_DROPPED)


def build_feature_row(
    v: SubMetricVector, groups: Sequence[str] | None = None
) -> FeatureRow:
    """Expand a sub-metric vector into its engineered term row.

    ``groups`` selects which sub-metric groups contribute terms; the
    default is every group except the dropped three. Missing required
    sub-metric fields raise.
    """
    if groups is None:
        groups = default_groups()
    names: list[str] = []
    values: list[float] = []
    for group in groups:
        builder = _GROUP_BUILDERS.get(group)
        if builder is None:
            raise ValidationError(f"unknown feature group {group!r}")
        for name, value in builder(v):
            names.append(name)
            values.append(value)
    return FeatureRow(names=tuple(names), values=np.array(values))


_PROBE_VECTOR = SubMetricVector(
    provenance="probe", **{name: 0.5 for name in SUBMETRIC_FIELDS}
)


def group_term_names(groups: Sequence[str] | None = None) -> dict[str, tuple[str, ...]]:
    """Term-name schema contributed by each group."""
    if groups is None:
        groups = default_groups()
    return {
        g: tuple(name for name, _ in _GROUP_BUILDERS[g](_PROBE_VECTOR)) for g in groups
    }


# ---------------------------------------------------------------------------
# CSV interchange

CSV_HEADER = ("pair_id",) + SUBMETRIC_FIELDS
LABEL_COLUMN = "map50"


def write_submetric_csv(
    vectors: Iterable[SubMetricVector],
    path: str | Path,
    labels: Sequence[float] | None = None,
    columns: Sequence[str] | None = None,
) -> None:
    """Sub-metric table CSV, floats at 6 decimals, empty cells for absent.

    ``columns`` restricts the sub-component columns (canonical order is
    kept); the default is the full fixed header.
    """
    vectors = list(vectors)
    if labels is not None and len(labels) != len(vectors):
        raise ValidationError("labels must match vector count")
    if columns is None:
        selected = SUBMETRIC_FIELDS
    else:
        unknown = set(columns) - set(SUBMETRIC_FIELDS)
        if unknown:
            raise ValidationError(f"unknown sub-metric columns: {sorted(unknown)}")
        selected = tuple(n for n in SUBMETRIC_FIELDS if n in set(columns))
    header = ("pair_id",) + selected + ((LABEL_COLUMN,) if labels is not None else ())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, v in enumerate(vectors):
            row = [v.provenance]
            for name in selected:
                value = getattr(v, name)
                row.append("" if value is None else f"{value:.6f}")
            if labels is not None:
                row.append(f"{labels[i]:.6f}")
            writer.writerow(row)


def read_submetric_csv(
    path: str | Path,
) -> tuple[list[SubMetricVector], list[float] | None]:
    """Read a sub-metric table; the header may be any ordered subset of
    the fixed full header, optionally with a trailing label column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty CSV") from None
        has_label = bool(header) and header[-1] == LABEL_COLUMN
        value_columns = header[1:-1] if has_label else header[1:]
        if not header or header[0] != "pair_id" or not set(value_columns) <= set(
            SUBMETRIC_FIELDS
        ):
            raise FormatError(
                f"{path}: unexpected header; expected pair_id plus sub-metric "
                f"columns from {','.join(SUBMETRIC_FIELDS)}[,{LABEL_COLUMN}]"
            )
        vectors = []
        labels: list[float] | None = [] if has_label else None
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(f"{path} line {lineno}: wrong column count")
            kwargs = {}
            for name, cell in zip(value_columns, row[1:]):
                kwargs[name] = float(cell) if cell != "" else None
            vectors.append(SubMetricVector(provenance=row[0], **kwargs))
            if has_label:
                labels.append(float(row[-1]))
    return vectors, labels
