import json

import numpy as np
import pytest
from PIL import Image

from sdqm import cli, dataio, fuse
from sdqm.dataio import DetectionLog, DetectionRecord

from conftest import make_embeddings


def build_pair_dir(root, n=24, dim=6, seed=0, identical=True):
    """Write a full dataset pair (annotations, embeddings, images, logs)
    and return a config dict pointing at it."""
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)

    def write_side(side, rows, img_shift):
        ids = [f"{side}{i}" for i in range(n)]
        images = []
        annotations = []
        img_dir = root / f"{side}_images"
        img_dir.mkdir(exist_ok=True)
        for i, iid in enumerate(ids):
            images.append({"id": iid, "width": 32, "height": 32})
            annotations.append(
                {"image_id": iid, "category_id": 1 + (i % 2), "bbox": [4, 4, 12, 8]}
            )
            arr = np.full((32, 32, 3), (i * 9 + img_shift) % 256, dtype=np.uint8)
            Image.fromarray(arr, "RGB").save(img_dir / f"{iid}.png")
        (root / f"{side}_ann.json").write_text(json.dumps({
            "images": images,
            "annotations": annotations,
            "categories": [{"id": 1, "name": "a"}, {"id": 2, "name": "b"}],
        }))
        es = dataio.EmbeddingSet(ids=tuple(ids), rows=rows.astype(np.float32))
        dataio.save_embeddings(es, root / f"{side}_emb.bin")
        log = DetectionLog(
            records=tuple(
                DetectionRecord(image_id=iid, gt_category=0, p_gt=0.5) for iid in ids
            ),
            class_count=2,
            source_mode="predictive" if side == "real" else "conditional",
        )
        dataio.save_detection_log(log, root / f"{side}_log.jsonl")

    rows = rng.normal(size=(n, dim))
    write_side("real", rows, 0)
    write_side("synth", rows if identical else rows + 30.0, 0 if identical else 40)

    return {
        "pair": {
            "pair_id": "fixture",
            "real_annotations": "real_ann.json",
            "real_embeddings": "real_emb.bin",
            "real_images": "real_images",
            "synth_annotations": "synth_ann.json",
            "synth_embeddings": "synth_emb.bin",
            "synth_images": "synth_images",
            "predictive_log": "real_log.jsonl",
            "conditional_log": "synth_log.jsonl",
        },
        "output": {"dir": "out"},
        "seed": 3,
    }


def write_config(root, cfg_dict):
    lines = [f"seed = {cfg_dict.get('seed', 0)}"]
    for section in ("pair", "metrics", "evolve", "fit", "output"):
        table = cfg_dict.get(section)
        if not table:
            continue
        lines.append(f"[{section}]")
        for key, value in table.items():
            if isinstance(value, str):
                lines.append(f'{key} = "{value}"')
            elif isinstance(value, bool):
                lines.append(f"{key} = {str(value).lower()}")
            elif isinstance(value, list):
                rendered = ", ".join(f'"{v}"' if isinstance(v, str) else str(v) for v in value)
                lines.append(f"{key} = [{rendered}]")
            else:
                lines.append(f"{key} = {value}")
    path = root / "run.toml"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestSubmetrics:
    def test_identity_pair_values(self, tmp_path):
        cfg = build_pair_dir(tmp_path, identical=True)
        cfg["metrics"] = {"enabled": [
            "frontier", "precision_recall", "bbox_match", "label_overlap",
            "pixel_intensity", "spatial", "vinfo",
        ]}
        config = write_config(tmp_path, cfg)
        assert cli.main(["submetrics", "--config", str(config)]) == 0
        vectors, _ = fuse.read_submetric_csv(tmp_path / "out" / "submetrics.csv")
        v = vectors[0]
        assert v.provenance == "fixture"
        assert v.label_ks == 0.0
        assert v.spatial_rmse == 0.0
        assert v.mauve == pytest.approx(1.0, abs=1e-6)
        assert v.authenticity <= 0.02
        assert v.v_information == 0.0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["partial"] is False
        assert report["config_hash"]
        assert (tmp_path / "out" / "timings.json").exists()

    def test_heatmap_and_histogram_artifacts_emitted(self, tmp_path):
        cfg = build_pair_dir(tmp_path)
        cfg["metrics"] = {"enabled": ["spatial", "pixel_intensity"]}
        config = write_config(tmp_path, cfg)
        assert cli.main(["submetrics", "--config", str(config)]) == 0
        for name, shape in (
            ("heatmap_real.bin", (64, 64)),
            ("heatmap_synth.bin", (64, 64)),
            ("pixel_hist_real.bin", (3, 256)),
            ("pixel_hist_synth.bin", (3, 256)),
        ):
            matrix = dataio.load_embeddings(tmp_path / "out" / name)
            assert matrix.rows.shape == shape

    def test_metric_toggle_restricts_columns(self, tmp_path):
        cfg = build_pair_dir(tmp_path)
        config = write_config(tmp_path, cfg)
        code = cli.main([
            "submetrics", "--config", str(config), "--metrics", "label_overlap",
        ])
        assert code == 0
        header = (tmp_path / "out" / "submetrics.csv").read_text().splitlines()[0]
        assert header == "pair_id,label_ks"

    def test_missing_embedding_file_names_it(self, tmp_path, capsys):
        cfg = build_pair_dir(tmp_path)
        cfg["pair"]["real_embeddings"] = "absent.bin"
        cfg["metrics"] = {"enabled": ["frontier"]}
        config = write_config(tmp_path, cfg)
        code = cli.main(["submetrics", "--config", str(config)])
        assert code == 1
        err = capsys.readouterr().err
        assert "absent.bin" in err
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["partial"] is True

    def test_unknown_config_key_exit_2(self, tmp_path):
        cfg = build_pair_dir(tmp_path)
        config = write_config(tmp_path, cfg)
        config.write_text(config.read_text() + "\n[bogus]\nx = 1\n")
        assert cli.main(["submetrics", "--config", str(config)]) == 2

    def test_unknown_metric_group_exit_2(self, tmp_path):
        cfg = build_pair_dir(tmp_path)
        config = write_config(tmp_path, cfg)
        code = cli.main(["submetrics", "--config", str(config), "--metrics", "nope"])
        assert code == 2


class TestEvolveCommand:
    def test_writes_jsonl(self, tmp_path):
        cfg = build_pair_dir(tmp_path, n=30, identical=False)
        cfg["evolve"] = {"k_lower": 3, "k_upper": 8, "generations": 10,
                         "n_targets": 2, "population": 12,
                         "metrics": ["alpha_precision"]}
        config = write_config(tmp_path, cfg)
        assert cli.main(["evolve", "--config", str(config)]) == 0
        lines = (tmp_path / "out" / "subsets.jsonl").read_text().splitlines()
        assert len(lines) == 2
        rec = json.loads(lines[0])
        assert set(rec) == {"metric", "target", "achieved", "fitness",
                            "generations", "converged", "d1", "d2"}


def fit_fixture_csv(path, n=40, seed=0):
    rng = np.random.default_rng(seed)
    vectors, labels = [], []
    for i in range(n):
        values = {name: float(rng.uniform(0, 1)) for name in fuse.SUBMETRIC_FIELDS}
        values["v_information"] = values["h_y"] - values["h_y_given_x"]
        vectors.append(fuse.SubMetricVector(provenance=f"row{i}", **values))
        labels.append(float(np.clip(0.2 + 0.5 * values["beta_recall"], 0, 1)))
    fuse.write_submetric_csv(vectors, path, labels=labels)
    return vectors


class TestFitScorePlot:
    def test_fit_then_score(self, tmp_path):
        data = tmp_path / "table.csv"
        vectors = fit_fixture_csv(data)
        cfg_path = write_config(tmp_path, {
            "seed": 1, "fit": {"regressor": "linear", "kfold": 5},
            "output": {"dir": "out"},
        })
        assert cli.main(["fit", "--config", str(cfg_path), "--data", str(data)]) == 0
        report = json.loads((tmp_path / "out" / "fit_report.json").read_text())
        assert report["mean_pearson"] == pytest.approx(1.0, abs=1e-6)

        vector_csv = tmp_path / "one.csv"
        fuse.write_submetric_csv([vectors[0]], vector_csv)
        code = cli.main([
            "score", "--config", str(cfg_path),
            "--model", str(tmp_path / "out" / "model.json"),
            "--vector", str(vector_csv),
        ])
        assert code == 0
        score = json.loads((tmp_path / "out" / "score.json").read_text())
        expected = 0.2 + 0.5 * vectors[0].beta_recall
        assert score["sdqm"] == pytest.approx(expected, abs=1e-4)

    def test_monotone_model_orders_identity_above_distant(self, tmp_path):
        data = tmp_path / "table.csv"
        fit_fixture_csv(data)
        cfg_path = write_config(tmp_path, {
            "seed": 1, "fit": {"regressor": "linear", "kfold": 5},
            "output": {"dir": "out"},
        })
        cli.main(["fit", "--config", str(cfg_path), "--data", str(data)])

        def score_of(vector, name):
            csv_path = tmp_path / f"{name}.csv"
            fuse.write_submetric_csv([vector], csv_path)
            out_cfg = write_config(tmp_path, {"output": {"dir": f"out_{name}"}})
            assert cli.main([
                "score", "--config", str(out_cfg),
                "--model", str(tmp_path / "out" / "model.json"),
                "--vector", str(csv_path),
            ]) == 0
            return json.loads((tmp_path / f"out_{name}" / "score.json").read_text())["sdqm"]

        base = {name: 0.2 for name in fuse.SUBMETRIC_FIELDS}
        identity_like = dict(base, beta_recall=0.95, alpha_precision=0.95)
        distant_like = dict(base, beta_recall=0.02, alpha_precision=0.02)
        s_identity = score_of(fuse.SubMetricVector(provenance="id", **identity_like), "id")
        s_distant = score_of(fuse.SubMetricVector(provenance="far", **distant_like), "far")
        assert s_identity >= s_distant

    def test_score_schema_mismatch_exit_2(self, tmp_path, capsys):
        data = tmp_path / "table.csv"
        fit_fixture_csv(data)
        cfg_path = write_config(tmp_path, {
            "seed": 1, "fit": {"regressor": "linear", "kfold": 5},
            "output": {"dir": "out"},
        })
        cli.main(["fit", "--config", str(cfg_path), "--data", str(data)])
        # vector missing most fields: schema mismatch
        bad_csv = tmp_path / "bad.csv"
        fuse.write_submetric_csv(
            [fuse.SubMetricVector(provenance="x", label_ks=0.5)],
            bad_csv, columns=["label_ks"],
        )
        code = cli.main([
            "score", "--config", str(cfg_path),
            "--model", str(tmp_path / "out" / "model.json"),
            "--vector", str(bad_csv),
        ])
        assert code == 2
        assert "schema" in capsys.readouterr().err.lower()

    def test_plot_collinear_annotation_and_determinism(self, tmp_path):
        data = tmp_path / "pred.csv"
        data.write_text("prediction,label\n0.1,0.2\n0.2,0.4\n0.3,0.6\n")
        cfg_path = write_config(tmp_path, {"output": {"dir": "out"}})
        assert cli.main(["plot", "--config", str(cfg_path), "--data", str(data)]) == 0
        svg = (tmp_path / "out" / "plot.svg").read_text()
        assert "pearson=1.000" in svg
        first = (tmp_path / "out" / "plot.csv").read_bytes()
        first_svg = (tmp_path / "out" / "plot.svg").read_bytes()
        assert cli.main(["plot", "--config", str(cfg_path), "--data", str(data)]) == 0
        assert (tmp_path / "out" / "plot.csv").read_bytes() == first
        assert (tmp_path / "out" / "plot.svg").read_bytes() == first_svg

    def test_plot_empty_errors(self, tmp_path):
        data = tmp_path / "pred.csv"
        data.write_text("prediction,label\n")
        cfg_path = write_config(tmp_path, {"output": {"dir": "out"}})
        assert cli.main(["plot", "--config", str(cfg_path), "--data", str(data)]) == 1


class TestValidate:
    def test_all_good(self, tmp_path, capsys):
        cfg = build_pair_dir(tmp_path)
        config = write_config(tmp_path, cfg)
        assert cli.main(["validate", "--config", str(config)]) == 0
        out = capsys.readouterr().out
        assert "real_embeddings" in out and "ok" in out

    def test_broken_artifact(self, tmp_path):
        cfg = build_pair_dir(tmp_path)
        (tmp_path / "real_emb.bin").write_bytes(b"garbage")
        config = write_config(tmp_path, cfg)
        assert cli.main(["validate", "--config", str(config)]) == 1
