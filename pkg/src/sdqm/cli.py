"""Command-line pipeline: submetrics, evolve, fit, score, plot, validate.

A single TOML config file describes the dataset pair and run parameters;
a handful of flags override it. All outputs are deterministic given the
config: seeds are explicit, floats are written at six decimals, and
every report embeds a hash of the resolved config. Wall-clock timings go
to a separate ``timings.json`` so the report files stay byte-stable.

Exit codes: 0 success, 1 computation/artifact error, 2 config or schema
error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import dataio, evolve, plotting, structmetrics, vinfo
from .embedmetrics import (
    default_k,
    frontier_scores,
    log_cluster_components,
    precision_recall_authenticity,
    quantize,
    separability,
)
from .embedmetrics.prdc import (
    alpha_precision_score,
    authenticity_score,
    beta_recall_score,
)
from .errors import ConfigError, SchemaMismatchError, SdqmError, ValidationError
from .fuse import (
    SubMetricVector,
    backward_feature_reduction,
    build_feature_row,
    correlation,
    default_groups,
    fit as fit_model,
    group_term_names,
    kfold_evaluate,
    load_model,
    predict_sdqm,
    read_submetric_csv,
    save_model,
    write_submetric_csv,
)

logger = logging.getLogger("sdqm")

METRIC_GROUPS = (
    "frontier",
    "precision_recall",
    "separability",
    "clusterability",
    "bbox_match",
    "label_overlap",
    "pixel_intensity",
    "spatial",
    "vinfo",
)

GROUP_FIELDS = {
    "frontier": ("mauve", "mauve_star", "fi", "fi_star"),
    "precision_recall": ("alpha_precision", "beta_recall", "authenticity"),
    "separability": ("sep_accuracy", "sep_param_count"),
    "clusterability": ("cluster_c", "cluster_l"),
    "bbox_match": ("bbox_ed_aspect", "bbox_ed_diagonal", "bbox_ed_area"),
    "label_overlap": ("label_ks",),
    "pixel_intensity": ("pixel_ad_red", "pixel_ad_green"),
    "spatial": ("spatial_rmse",),
    "vinfo": ("h_y", "h_y_given_x", "v_information"),
}

EVOLVE_METRICS = {
    "alpha_precision": alpha_precision_score,
    "beta_recall": beta_recall_score,
    "authenticity": authenticity_score,
}

_REGRESSOR_ALIASES = {"rf": "random_forest", "random_forest": "random_forest",
                      "linear": "linear", "ridge": "ridge"}

# Allowed config keys per section; None marks a nested table handled apart.
_SCHEMA = {
    "seed": None,
    "pair": {
        "pair_id", "real_annotations", "real_embeddings", "real_images",
        "synth_annotations", "synth_embeddings", "synth_images",
        "predictive_log", "conditional_log", "category_map",
    },
    "metrics": {"enabled", "metadata_keys", "quantize_k", "cluster_k",
                "heatmap_size"},
    "evolve": {"k_lower", "k_upper", "generations", "n_targets", "population",
               "mutation_prob", "crossover_prob", "stop_threshold", "metrics"},
    "fit": {"regressor", "kfold", "data", "include_dropped", "reduce"},
    "output": {"dir"},
}


class RunConfig:
    """Validated run configuration; paths resolve against the config dir."""

    def __init__(self, raw: dict, base_dir: Path):
        unknown = set(raw) - set(_SCHEMA)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for section, allowed in _SCHEMA.items():
            if allowed is None or section not in raw:
                continue
            if not isinstance(raw[section], dict):
                raise ConfigError(f"config section [{section}] must be a table")
            bad = set(raw[section]) - allowed
            if bad:
                raise ConfigError(f"unknown keys in [{section}]: {sorted(bad)}")
        self.raw = raw
        self.base_dir = base_dir

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            raw = tomllib.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML in {path}: {exc}") from exc
        return cls(raw, path.parent.resolve())

    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    def section(self, name: str) -> dict:
        return self.raw.get(name, {})

    def path(self, section: str, key: str, required: bool = False) -> Path | None:
        value = self.section(section).get(key)
        if value is None:
            if required:
                raise ConfigError(f"config is missing [{section}] {key}")
            return None
        return (self.base_dir / str(value)).resolve()

    def out_dir(self) -> Path:
        return (self.base_dir / str(self.section("output").get("dir", "out"))).resolve()

    def enabled_metrics(self) -> tuple[str, ...]:
        enabled = self.section("metrics").get("enabled", list(METRIC_GROUPS))
        bad = set(enabled) - set(METRIC_GROUPS)
        if bad:
            raise ConfigError(f"unknown metric groups: {sorted(bad)}")
        return tuple(g for g in METRIC_GROUPS if g in set(enabled))

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _threads() -> int | None:
    raw = os.environ.get("SDQM_THREADS", "")
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"SDQM_THREADS={raw!r} is not an integer") from None


def _round6(obj):
    if isinstance(obj, float):
        return round(obj, 6)
    if isinstance(obj, dict):
        return {k: _round6(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round6(v) for v in obj]
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(_round6(payload), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# submetrics


class _PairArtifacts:
    """Lazily loaded dataset-pair artifacts for the enabled groups."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.pair_id = str(cfg.section("pair").get("pair_id", "pair"))
        self._cache: dict = {}

    def annotations(self, side: str) -> dataio.AnnotationSet:
        key = f"{side}_annotations"
        if key not in self._cache:
            path = self.cfg.path("pair", key, required=True)
            ann = dataio.load_annotations(path)
            if side == "synth":
                cmap_raw = self.cfg.section("pair").get("category_map")
                if cmap_raw:
                    cmap = dataio.CategoryMap(
                        forward=tuple(sorted((int(k), int(v)) for k, v in cmap_raw.items()))
                    )
                    ann, dropped = dataio.remap_categories(ann, cmap)
                    if dropped:
                        warnings.warn(f"category map dropped {dropped} synth objects")
            self._cache[key] = ann
        return self._cache[key]

    def embeddings(self, side: str) -> dataio.EmbeddingSet:
        key = f"{side}_embeddings"
        if key not in self._cache:
            path = self.cfg.path("pair", key, required=True)
            self._cache[key] = dataio.load_embeddings(path)
        return self._cache[key]

    def image_dir(self, side: str) -> Path:
        path = self.cfg.path("pair", f"{side}_images", required=True)
        return path

    def detection_log(self, mode: str) -> dataio.DetectionLog:
        key = f"{mode}_log"
        if key not in self._cache:
            path = self.cfg.path("pair", key, required=True)
            self._cache[key] = dataio.load_detection_log(path)
        return self._cache[key]


def _compute_group(
    group: str, art: _PairArtifacts, cfg: RunConfig
) -> tuple[dict, dict, dict]:
    """Returns (sub-metric fields, report detail, binary artifacts)."""
    seed = cfg.seed()
    metrics_cfg = cfg.section("metrics")
    if group == "frontier":
        real, synth = art.embeddings("real"), art.embeddings("synth")
        k = int(metrics_cfg.get("quantize_k", 0)) or default_k(len(real) + len(synth))
        qp = quantize(real, synth, k=k, seed=seed)
        fs = frontier_scores(qp)
        fields = {"mauve": fs.mauve, "mauve_star": fs.mauve_star,
                  "fi": fs.fi, "fi_star": fs.fi_star}
        return fields, {"quantize_k": qp.k}, {}
    if group == "precision_recall":
        scores = precision_recall_authenticity(
            art.embeddings("real"), art.embeddings("synth")
        )
        return {
            "alpha_precision": scores.alpha_precision,
            "beta_recall": scores.beta_recall,
            "authenticity": scores.authenticity,
        }, {}, {}
    if group == "separability":
        res = separability(art.embeddings("real"), art.embeddings("synth"), seed=seed)
        return {
            "sep_accuracy": res.accuracy,
            "sep_param_count": float(res.param_count),
        }, {"architecture": res.architecture}, {}
    if group == "clusterability":
        c, l, k_eff = log_cluster_components(
            art.embeddings("real"), art.embeddings("synth"),
            k=int(metrics_cfg.get("cluster_k", 10)), seed=seed,
        )
        return {"cluster_c": c, "cluster_l": l}, {"effective_k": k_eff}, {}
    if group == "bbox_match":
        table = structmetrics.bbox_match(
            art.annotations("real"), art.annotations("synth")
        )
        return {
            "bbox_ed_aspect": table["aspect_ratio"]["energy"],
            "bbox_ed_diagonal": table["diagonal"]["energy"],
            "bbox_ed_area": table["area"]["energy"],
        }, {"table": table}, {}
    if group == "label_overlap":
        keys = [str(k) for k in metrics_cfg.get("metadata_keys", [])]
        table = structmetrics.label_overlap(
            art.annotations("real"), art.annotations("synth"), metadata_keys=keys
        )
        return {"label_ks": table["ks"]}, {"table": table}, {}
    if group == "pixel_intensity":
        threads = _threads()
        real_h = structmetrics.pixel_histograms(art.image_dir("real"), threads)
        synth_h = structmetrics.pixel_histograms(art.image_dir("synth"), threads)
        table = structmetrics.pixel_intensity_match(real_h, synth_h)
        artifacts = {
            "pixel_hist_real.bin": np.stack([real_h.r, real_h.g, real_h.b]),
            "pixel_hist_synth.bin": np.stack([synth_h.r, synth_h.g, synth_h.b]),
        }
        return {
            "pixel_ad_red": table["r"]["ad"],
            "pixel_ad_green": table["g"]["ad"],
        }, {"table": table, "skipped_images": real_h.skipped + synth_h.skipped}, artifacts
    if group == "spatial":
        size = int(metrics_cfg.get("heatmap_size", structmetrics.WORKING_SIZE))
        hr = structmetrics.build_heatmap(art.annotations("real"), size, size)
        hs = structmetrics.build_heatmap(art.annotations("synth"), size, size)
        return {
            "spatial_rmse": structmetrics.spatial_distribution_difference(hr, hs)
        }, {"heatmap_size": size}, {
            "heatmap_real.bin": hr.cells,
            "heatmap_synth.bin": hs.cells,
        }
    if group == "vinfo":
        report = vinfo.v_information(
            art.detection_log("predictive"), art.detection_log("conditional")
        )
        return {
            "h_y": report.h_y,
            "h_y_given_x": report.h_y_given_x,
            "v_information": report.v_information,
        }, {}, {}
    raise ConfigError(f"unknown metric group {group!r}")


def cmd_submetrics(cfg: RunConfig) -> int:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    enabled = cfg.enabled_metrics()
    art = _PairArtifacts(cfg)

    fields: dict[str, float] = {}
    details: dict[str, dict] = {}
    timings: dict[str, float] = {}
    errors: dict[str, str] = {}
    caught: list[str] = []
    artifacts: dict[str, object] = {}

    def run_group(group: str):
        start = time.perf_counter()
        with warnings.catch_warnings(record=True) as caught_warnings:
            warnings.simplefilter("always")
            result = _compute_group(group, art, cfg)
        return group, result, time.perf_counter() - start, [
            str(w.message) for w in caught_warnings
        ]

    # touch shared artifacts serially so the lazy cache stays single-writer
    for group in enabled:
        try:
            if group in ("frontier", "precision_recall", "separability", "clusterability"):
                art.embeddings("real"), art.embeddings("synth")
            elif group in ("bbox_match", "label_overlap", "spatial"):
                art.annotations("real"), art.annotations("synth")
            elif group == "vinfo":
                art.detection_log("predictive"), art.detection_log("conditional")
        except SdqmError as exc:
            errors[group] = str(exc)

    pending = [g for g in enabled if g not in errors]
    max_workers = _threads() or min(4, max(1, len(pending)))
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        for group, result, elapsed, grp_warnings in pool.map(run_group, pending):
            values, detail, group_artifacts = result
            fields.update(values)
            details[group] = detail
            timings[group] = elapsed
            caught.extend(grp_warnings)
            artifacts.update(group_artifacts)

    # single-writer phase: workers only computed, emission happens here
    for name, matrix in sorted(artifacts.items()):
        dataio.save_matrix(matrix, out / name)

    vector = SubMetricVector(provenance=art.pair_id, **fields)
    columns = [f for g in enabled if g not in errors for f in GROUP_FIELDS[g]]
    write_submetric_csv([vector], out / "submetrics.csv", columns=columns)

    report = {
        "pair_id": art.pair_id,
        "config_hash": cfg.config_hash(),
        "metrics": {
            g: {
                "values": {f: fields[f] for f in GROUP_FIELDS[g] if f in fields},
                **({"detail": details[g]} if details.get(g) else {}),
            }
            for g in enabled
            if g not in errors
        },
        "errors": errors,
        "partial": bool(errors),
        "warnings": caught,
    }
    _write_json(out / "report.json", report)
    _write_json(out / "timings.json", {"seconds": timings})

    lines = [f"pair: {art.pair_id}", f"config: {cfg.config_hash()}", ""]
    lines.append(f"{'sub-component':<28}{'value':>14}")
    for g in enabled:
        if g in errors:
            lines.append(f"{g:<28}{'ERROR':>14}  {errors[g]}")
            continue
        for f in GROUP_FIELDS[g]:
            lines.append(f"{f:<28}{fields[f]:>14.6f}")
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    for group, message in errors.items():
        print(f"error: metric {group} failed: {message}", file=sys.stderr)
    print(f"wrote {out / 'submetrics.csv'}")
    return 1 if errors else 0


# ---------------------------------------------------------------------------
# evolve


def cmd_evolve(cfg: RunConfig) -> int:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    section = cfg.section("evolve")
    if "k_lower" not in section or "k_upper" not in section:
        raise ConfigError("config [evolve] requires k_lower and k_upper")
    evo_cfg = evolve.EvolutionConfig(
        k_lower=int(section["k_lower"]),
        k_upper=int(section["k_upper"]),
        generations=int(section.get("generations", 200)),
        n_targets=int(section.get("n_targets", 11)),
        population=int(section.get("population", 50)),
        mutation_prob=float(section.get("mutation_prob", 0.2)),
        crossover_prob=float(section.get("crossover_prob", 0.8)),
        stop_threshold=float(section.get("stop_threshold", evolve.STOP_THRESHOLD)),
        seed=cfg.seed(),
    )
    names = section.get("metrics", ["alpha_precision"])
    bad = set(names) - set(EVOLVE_METRICS)
    if bad:
        raise ConfigError(f"unknown evolve metrics: {sorted(bad)}")
    specs = [evolve.MetricSpec(name=n, fn=EVOLVE_METRICS[n]) for n in names]

    real = dataio.load_embeddings(cfg.path("pair", "real_embeddings", required=True))
    synth = dataio.load_embeddings(cfg.path("pair", "synth_embeddings", required=True))
    results = evolve.run_sweep(real, synth, specs, evo_cfg)
    evolve.save_sweep_results(results, out / "subsets.jsonl")

    converged = sum(r.converged for r in results)
    print(f"selected {len(results)} subset pairs ({converged} converged); "
          f"wrote {out / 'subsets.jsonl'}")
    return 0


# ---------------------------------------------------------------------------
# fit / score / plot / validate


def _fit_groups(cfg: RunConfig):
    include_dropped = bool(cfg.section("fit").get("include_dropped", False))
    return default_groups(include_dropped)


def cmd_fit(cfg: RunConfig, data: str | None) -> int:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    data_path = Path(data) if data else cfg.path("fit", "data", required=True)
    vectors, labels = read_submetric_csv(data_path)
    if labels is None:
        raise ConfigError(f"{data_path}: fit data needs a map50 label column")
    groups = _fit_groups(cfg)
    rows = [build_feature_row(v, groups=groups) for v in vectors]
    kind = _REGRESSOR_ALIASES.get(str(cfg.section("fit").get("regressor", "rf")))
    if kind is None:
        raise ConfigError(f"unknown regressor {cfg.section('fit').get('regressor')!r}")
    seed = cfg.seed()

    model = fit_model(rows, labels, kind=kind, seed=seed, groups=groups)
    save_model(model, out / "model.json")

    k = int(cfg.section("fit").get("kfold", 10))
    report = kfold_evaluate(rows, labels, k=k, kind=kind, seed=seed)
    payload = {
        "config_hash": cfg.config_hash(),
        "kind": kind,
        "rows": len(rows),
        "kfold": k,
        "fold_pearson": report.fold_pearson,
        "fold_spearman": report.fold_spearman,
        "mean_pearson": report.mean_pearson,
        "sd_pearson": report.sd_pearson,
        "mean_spearman": report.mean_spearman,
        "sd_spearman": report.sd_spearman,
        "pooled_pearson": report.pooled_pearson,
        "pooled_spearman": report.pooled_spearman,
    }
    if bool(cfg.section("fit").get("reduce", False)):
        reduction = backward_feature_reduction(
            rows, labels, group_term_names(groups), seed=seed
        )
        payload["reduction"] = {
            "retained": list(reduction.retained),
            "removal_order": reduction.removal_order,
            "baseline_pearson": reduction.baseline_pearson,
            "final_pearson": reduction.final_pearson,
        }
    _write_json(out / "fit_report.json", payload)
    print(
        f"fitted {kind} on {len(rows)} rows; "
        f"{k}-fold pearson {report.mean_pearson:.6f} +/- {report.sd_pearson:.6f}; "
        f"wrote {out / 'model.json'}"
    )
    return 0


def cmd_score(cfg: RunConfig, model_path: str, vector_path: str) -> int:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(model_path)
    vectors, _ = read_submetric_csv(vector_path)
    if len(vectors) != 1:
        raise ConfigError(f"{vector_path}: expected exactly one vector row")
    try:
        score = predict_sdqm(model, vectors[0])
    except ValidationError as exc:
        raise SchemaMismatchError(
            f"vector is missing fields required by the model schema: {exc}"
        ) from exc
    _write_json(out / "score.json", {
        "pair_id": vectors[0].provenance,
        "config_hash": cfg.config_hash(),
        "kind": model.kind,
        "sdqm": score,
    })
    print(f"{score:.6f}")
    return 0


def _read_prediction_csv(path: str | Path) -> tuple[list[float], list[float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["prediction", "label"]:
            raise ConfigError(f"{path}: expected header prediction,label")
        preds, labels = [], []
        for row in reader:
            if len(row) != 2:
                raise ConfigError(f"{path}: malformed row {row}")
            preds.append(float(row[0]))
            labels.append(float(row[1]))
    if not preds:
        raise ValidationError(f"{path}: no data rows")
    return preds, labels


def cmd_plot(cfg: RunConfig, data: str) -> int:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    preds, labels = _read_prediction_csv(data)
    r, rho = correlation(preds, labels)
    with open(out / "plot.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prediction", "label"])
        for p, l in zip(preds, labels):
            writer.writerow([f"{p:.6f}", f"{l:.6f}"])
    plotting.scatter_svg(preds, labels, r, rho, out / "plot.svg")
    print(f"pearson={r:.6f} spearman={rho:.6f}; wrote {out / 'plot.svg'}")
    return 0


def cmd_validate(cfg: RunConfig) -> int:
    pair = cfg.section("pair")
    checks: list[tuple[str, str]] = []
    failed = False
    for key in ("real_annotations", "synth_annotations"):
        if key in pair:
            try:
                ann = dataio.load_annotations(cfg.path("pair", key))
                note = f"ok: {len(ann.images)} images, {len(ann.objects)} objects"
                if ann.clamp_warnings:
                    note += f", {ann.clamp_warnings} boxes clamped"
                checks.append((key, note))
            except SdqmError as exc:
                checks.append((key, f"FAILED: {exc}"))
                failed = True
    for key in ("real_embeddings", "synth_embeddings"):
        if key in pair:
            try:
                es = dataio.load_embeddings(cfg.path("pair", key))
                checks.append((key, f"ok: {len(es)}x{es.dim}"))
            except SdqmError as exc:
                checks.append((key, f"FAILED: {exc}"))
                failed = True
    for key in ("predictive_log", "conditional_log"):
        if key in pair:
            try:
                log = dataio.load_detection_log(cfg.path("pair", key))
                checks.append((key, f"ok: {len(log.records)} records, mode {log.source_mode}"))
            except SdqmError as exc:
                checks.append((key, f"FAILED: {exc}"))
                failed = True
    for key, note in checks:
        print(f"{key:<22}{note}")
    if not checks:
        print("nothing to validate: no pair artifacts configured")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# entry point


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    raw = cfg.raw
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        raw.setdefault("output", {})["dir"] = args.out
    if getattr(args, "metrics", None):
        raw.setdefault("metrics", {})["enabled"] = [
            m.strip() for m in args.metrics.split(",") if m.strip()
        ]
    if getattr(args, "regressor", None):
        raw.setdefault("fit", {})["regressor"] = args.regressor
    return RunConfig(raw, cfg.base_dir)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdqm",
        description="Score synthetic object-detection datasets against real ones.",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log per-generation progress and debug detail")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")

    p = sub.add_parser("submetrics", help="compute sub-metrics for a dataset pair")
    common(p)
    p.add_argument("--metrics", default=None,
                   help="comma list of metric groups to compute")

    p = sub.add_parser("evolve", help="evolutionary subset-pair sweep")
    common(p)

    p = sub.add_parser("fit", help="fit the fusion regressor on a sub-metric table")
    common(p)
    p.add_argument("--data", default=None, help="sub-metric CSV with map50 column")
    p.add_argument("--regressor", choices=sorted(_REGRESSOR_ALIASES), default=None)

    p = sub.add_parser("score", help="apply a fitted model to one vector")
    common(p)
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--vector", required=True, help="single-row sub-metric CSV")

    p = sub.add_parser("plot", help="scatter data and SVG for predictions vs labels")
    common(p)
    p.add_argument("--data", required=True, help="CSV with prediction,label columns")

    p = sub.add_parser("validate", help="validate configured pair artifacts")
    common(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _apply_overrides(RunConfig.load(args.config), args)
        if args.command == "submetrics":
            return cmd_submetrics(cfg)
        if args.command == "evolve":
            return cmd_evolve(cfg)
        if args.command == "fit":
            return cmd_fit(cfg, args.data)
        if args.command == "score":
            return cmd_score(cfg, args.model, args.vector)
        if args.command == "plot":
            return cmd_plot(cfg, args.data)
        if args.command == "validate":
            return cmd_validate(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, SchemaMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SdqmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
