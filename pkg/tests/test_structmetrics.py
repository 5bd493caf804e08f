import numpy as np
import pytest
from PIL import Image

from sdqm import statdist, structmetrics as sm
from sdqm.errors import ValidationError

import oracles
from conftest import make_annotations


def save_image(path, array):
    Image.fromarray(array.astype(np.uint8), mode="RGB").save(path)


class TestHeatmap:
    def test_full_cover_single_image(self):
        ann = make_annotations(
            images=[("a", 64, 64)], objects=[("a", 0, 0, 0, 64, 64)]
        )
        hm = sm.build_heatmap(ann, 64, 64)
        assert hm.cells.shape == (8, 8)
        np.testing.assert_allclose(hm.cells, 1.0)

    def test_no_objects(self):
        ann = make_annotations(images=[("a", 64, 64)], objects=[])
        hm = sm.build_heatmap(ann, 64, 64)
        np.testing.assert_allclose(hm.cells, 0.0)

    def test_left_half_two_images(self):
        ann = make_annotations(
            images=[("a", 100, 100), ("b", 200, 200)],
            objects=[("a", 0, 0, 0, 50, 100), ("b", 0, 0, 0, 100, 200)],
        )
        hm = sm.build_heatmap(ann, 64, 64)
        np.testing.assert_allclose(hm.cells[:, :4], 1.0)
        np.testing.assert_allclose(hm.cells[:, 4:], 0.0)

    def test_matches_naive_oracle(self, rng):
        for _ in range(6):
            n_img = int(rng.integers(1, 4))
            images = [(f"i{j}", int(rng.integers(20, 200)), int(rng.integers(20, 200)))
                      for j in range(n_img)]
            objects = []
            scaled = []
            for j, (iid, w, h) in enumerate(images):
                for _ in range(int(rng.integers(0, 4))):
                    bw = rng.uniform(1, w)
                    bh = rng.uniform(1, h)
                    bx = rng.uniform(0, w - bw)
                    by = rng.uniform(0, h - bh)
                    objects.append((iid, 0, bx, by, bw, bh))
                    sx, sy = 64 / w, 64 / h
                    scaled.append((bx * sx, by * sy, bw * sx, bh * sy))
            ann = make_annotations(images=images, objects=objects)
            hm = sm.build_heatmap(ann, 64, 64)
            expected = oracles.heatmap_oracle(scaled, n_img, 64, 64)
            np.testing.assert_allclose(hm.cells, expected, atol=0)

    def test_image_order_invariant(self, rng):
        images = [("a", 50, 50), ("b", 80, 80)]
        objects = [("a", 0, 5, 5, 20, 20), ("b", 0, 10, 10, 30, 30)]
        h1 = sm.build_heatmap(make_annotations(images, objects), 64, 64)
        h2 = sm.build_heatmap(make_annotations(images[::-1], objects[::-1]), 64, 64)
        np.testing.assert_array_equal(h1.cells, h2.cells)

    def test_zero_images_rejected(self):
        empty = make_annotations(images=[], objects=[])
        with pytest.raises(ValidationError):
            sm.build_heatmap(empty, 64, 64)


class TestSpatialDifference:
    def test_identical(self):
        hm = sm.HeatMap(cells=np.random.default_rng(0).random((8, 8)))
        assert sm.spatial_distribution_difference(hm, hm) == 0.0

    def test_constant_difference(self):
        a = sm.HeatMap(cells=np.ones((4, 4)))
        b = sm.HeatMap(cells=np.zeros((4, 4)))
        assert sm.spatial_distribution_difference(a, b) == 1.0

    def test_half_cells_differ(self):
        a = sm.HeatMap(cells=np.concatenate([np.ones((2, 4)), np.zeros((2, 4))]))
        b = sm.HeatMap(cells=np.zeros((4, 4)))
        assert sm.spatial_distribution_difference(a, b) == pytest.approx(
            np.sqrt(0.5), abs=1e-12
        )

    def test_symmetric(self, rng):
        a = sm.HeatMap(cells=rng.random((6, 6)))
        b = sm.HeatMap(cells=rng.random((6, 6)))
        assert sm.spatial_distribution_difference(a, b) == sm.spatial_distribution_difference(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            sm.spatial_distribution_difference(
                sm.HeatMap(cells=np.zeros((2, 2))), sm.HeatMap(cells=np.zeros((3, 3)))
            )


class TestBBoxMatch:
    def test_identical_sets(self):
        ann = make_annotations(
            images=[("a", 100, 100)],
            objects=[("a", 0, 0, 0, 10, 20), ("a", 0, 30, 30, 40, 10)],
        )
        table = sm.bbox_match(ann, ann)
        for feature in ("aspect_ratio", "diagonal", "area"):
            assert table[feature]["energy"] == pytest.approx(0.0, abs=1e-12)
            assert table[feature]["ks"] == 0.0
            assert table[feature]["ad"] == pytest.approx(0.0, abs=1e-10)

    def test_uniform_scaling_preserves_aspect(self):
        real = make_annotations(
            images=[("a", 100, 100)],
            objects=[("a", 0, 0, 0, 10, 20), ("a", 0, 30, 30, 8, 4)],
        )
        synth = make_annotations(
            images=[("a", 200, 200)],
            objects=[("a", 0, 0, 0, 20, 40), ("a", 0, 60, 60, 16, 8)],
        )
        table = sm.bbox_match(real, synth)
        assert table["aspect_ratio"]["energy"] == pytest.approx(0.0, abs=1e-12)
        # relative diagonal and area also match under the doubled canvas
        assert table["diagonal"]["energy"] == pytest.approx(0.0, abs=1e-12)

    def test_area_energy_hand_case(self):
        real = make_annotations(
            images=[("a", 100, 100)],
            objects=[("a", 0, 0, 0, 10, 10), ("a", 0, 20, 20, 10, 10)],
        )
        synth = make_annotations(
            images=[("a", 100, 100)],
            objects=[("a", 0, 0, 0, 20, 20), ("a", 0, 40, 40, 20, 20)],
        )
        table = sm.bbox_match(real, synth)
        # areas {0.01, 0.01} vs {0.04, 0.04}: D = sqrt(2 * 0.03)
        assert table["area"]["energy"] == pytest.approx(
            oracles.energy_oracle([0.01, 0.01], [0.04, 0.04]), abs=1e-12
        )
        assert table["area"]["energy"] == pytest.approx(np.sqrt(0.06), abs=1e-12)

    def test_empty_objects_rejected(self):
        ann = make_annotations(images=[("a", 10, 10)], objects=[])
        full = make_annotations(
            images=[("a", 10, 10)], objects=[("a", 0, 0, 0, 5, 5)]
        )
        with pytest.raises(ValidationError):
            sm.bbox_match(ann, full)


class TestLabelOverlap:
    def test_identical(self):
        ann = make_annotations(
            images=[("a", 10, 10), ("b", 10, 10)],
            objects=[("a", 1, 0, 0, 2, 2), ("b", 2, 0, 0, 2, 2)],
        )
        table = sm.label_overlap(ann, ann)
        assert table["ks"] == 0.0
        assert table["js"] == pytest.approx(0.0, abs=1e-12)

    def test_disjoint_classes(self):
        real = make_annotations(
            images=[("a", 10, 10), ("b", 10, 10)],
            objects=[("a", 1, 0, 0, 2, 2), ("b", 1, 0, 0, 2, 2)],
        )
        synth = make_annotations(
            images=[("a", 10, 10), ("b", 10, 10)],
            objects=[("a", 2, 0, 0, 2, 2), ("b", 2, 0, 0, 2, 2)],
        )
        with pytest.warns(UserWarning, match="no shared categories"):
            table = sm.label_overlap(real, synth)
        assert table["ks"] == 1.0

    def test_count_hand_case(self):
        # one class; real images hold {1,1,2} objects, synth {1,2,2}
        real = make_annotations(
            images=[("a", 10, 10), ("b", 10, 10), ("c", 10, 10)],
            objects=[
                ("a", 1, 0, 0, 1, 1),
                ("b", 1, 0, 0, 1, 1),
                ("c", 1, 0, 0, 1, 1), ("c", 1, 2, 2, 1, 1),
            ],
        )
        synth = make_annotations(
            images=[("a", 10, 10), ("b", 10, 10), ("c", 10, 10)],
            objects=[
                ("a", 1, 0, 0, 1, 1),
                ("b", 1, 0, 0, 1, 1), ("b", 1, 2, 2, 1, 1),
                ("c", 1, 0, 0, 1, 1), ("c", 1, 2, 2, 1, 1),
            ],
        )
        table = sm.label_overlap(real, synth)
        assert table["ks"] == pytest.approx(1 / 3, abs=1e-12)

    def test_metadata_keys_split_distributions(self):
        real = make_annotations(
            images=[("a", 10, 10, {"weather": "sun"}), ("b", 10, 10, {"weather": "sun"})],
            objects=[("a", 1, 0, 0, 2, 2), ("b", 1, 0, 0, 2, 2)],
        )
        synth = make_annotations(
            images=[("a", 10, 10, {"weather": "rain"}), ("b", 10, 10, {"weather": "rain"})],
            objects=[("a", 1, 0, 0, 2, 2), ("b", 1, 0, 0, 2, 2)],
        )
        assert sm.label_overlap(real, synth)["ks"] == 0.0
        assert sm.label_overlap(real, synth, metadata_keys=["weather"])["ks"] == 1.0

    def test_order_preserving_relabel_invariance(self):
        def build(c1, c2):
            return make_annotations(
                images=[("a", 10, 10), ("b", 10, 10)],
                objects=[("a", c1, 0, 0, 1, 1), ("b", c2, 0, 0, 1, 1)],
            )
        t1 = sm.label_overlap(build(1, 2), build(2, 2))
        t2 = sm.label_overlap(build(10, 20), build(20, 20))
        assert t1["ks"] == t2["ks"]


class TestPixelHistograms:
    def test_all_black(self, tmp_path):
        save_image(tmp_path / "black.png", np.zeros((8, 8, 3)))
        ph = sm.pixel_histograms(tmp_path)
        for channel in (ph.r, ph.g, ph.b):
            assert channel[0] == 1.0
            assert channel[1:].sum() == 0.0

    def test_half_black_half_white(self, tmp_path):
        img = np.zeros((8, 8, 3))
        img[:, 4:] = 255
        save_image(tmp_path / "bw.png", img)
        ph = sm.pixel_histograms(tmp_path)
        for channel in (ph.r, ph.g, ph.b):
            assert channel[0] == pytest.approx(0.5)
            assert channel[255] == pytest.approx(0.5)

    def test_matches_per_pixel_counts(self, tmp_path, rng):
        arrays = [rng.integers(0, 256, size=(6, 5, 3)) for _ in range(3)]
        for i, arr in enumerate(arrays):
            save_image(tmp_path / f"im{i}.png", arr)
        ph = sm.pixel_histograms(tmp_path)
        allpix = np.concatenate([a.reshape(-1, 3) for a in arrays])
        for ci in range(3):
            expected = np.bincount(allpix[:, ci], minlength=256)
            np.testing.assert_array_equal(ph.counts[ci], expected)

    def test_undecodable_skipped(self, tmp_path):
        save_image(tmp_path / "ok.png", np.zeros((4, 4, 3)))
        (tmp_path / "junk.png").write_bytes(b"not an image")
        with pytest.warns(UserWarning, match="skipped 1"):
            ph = sm.pixel_histograms(tmp_path)
        assert ph.skipped == 1

    def test_no_images(self, tmp_path):
        with pytest.raises(ValidationError):
            sm.pixel_histograms(tmp_path)

    def test_thread_cap_does_not_change_result(self, tmp_path, rng, monkeypatch):
        for i in range(5):
            save_image(tmp_path / f"im{i}.png", rng.integers(0, 256, size=(6, 6, 3)))
        serial = sm.pixel_histograms(tmp_path, max_threads=1)
        threaded = sm.pixel_histograms(tmp_path, max_threads=3)
        np.testing.assert_array_equal(serial.counts, threaded.counts)
        monkeypatch.setenv("SDQM_THREADS", "2")
        via_env = sm.pixel_histograms(tmp_path)
        np.testing.assert_array_equal(serial.counts, via_env.counts)

    def test_mixture_property(self, tmp_path, rng):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        d1.mkdir(), d2.mkdir()
        a1 = rng.integers(0, 256, size=(4, 4, 3))
        a2 = rng.integers(0, 256, size=(8, 8, 3))
        save_image(d1 / "x.png", a1)
        save_image(d2 / "y.png", a2)
        both = tmp_path / "both"
        both.mkdir()
        save_image(both / "x.png", a1)
        save_image(both / "y.png", a2)
        h1, h2, hboth = (sm.pixel_histograms(d) for d in (d1, d2, both))
        n1, n2 = 16, 64
        for ci, channel in enumerate("rgb"):
            mix = (n1 * getattr(h1, channel) + n2 * getattr(h2, channel)) / (n1 + n2)
            np.testing.assert_allclose(getattr(hboth, channel), mix, atol=1e-12)


class TestPixelIntensityMatch:
    def test_identical(self, tmp_path, rng):
        save_image(tmp_path / "x.png", rng.integers(0, 256, size=(6, 6, 3)))
        ph = sm.pixel_histograms(tmp_path)
        table = sm.pixel_intensity_match(ph, ph)
        for channel in ("r", "g", "b"):
            assert table[channel]["ks"] == 0.0
            assert table[channel]["js"] == pytest.approx(0.0, abs=1e-12)

    def test_black_vs_white(self, tmp_path):
        d1, d2 = tmp_path / "black", tmp_path / "white"
        d1.mkdir(), d2.mkdir()
        save_image(d1 / "b.png", np.zeros((4, 4, 3)))
        save_image(d2 / "w.png", np.full((4, 4, 3), 255))
        t = sm.pixel_intensity_match(sm.pixel_histograms(d1), sm.pixel_histograms(d2))
        for channel in ("r", "g", "b"):
            assert t[channel]["ks"] == 1.0
            assert t[channel]["js"] == pytest.approx(np.log(2.0), abs=1e-12)

    def test_compose_equals_direct_statdist(self, tmp_path, rng):
        """Binned-count route must equal statdist on the expanded samples."""
        d1, d2 = tmp_path / "real", tmp_path / "synth"
        d1.mkdir(), d2.mkdir()
        # uniform-ish vs triangular-ish corpora spanning the full 0..255 range
        a = rng.integers(0, 256, size=(16, 16, 3))
        a[0, 0] = [0, 0, 0]; a[0, 1] = [255, 255, 255]
        tri = np.minimum(rng.integers(0, 256, (16, 16, 3)),
                         rng.integers(0, 256, (16, 16, 3)))
        tri[0, 0] = [0, 0, 0]; tri[0, 1] = [255, 255, 255]
        save_image(d1 / "u.png", a)
        save_image(d2 / "t.png", tri)
        hr = sm.pixel_histograms(d1)
        hs = sm.pixel_histograms(d2)
        table = sm.pixel_intensity_match(hr, hs)
        for ci, channel in enumerate("rgb"):
            x = np.repeat(np.arange(256), hr.counts[ci])
            y = np.repeat(np.arange(256), hs.counts[ci])
            direct = statdist.score_table(x, y)
            for measure, value in direct.items():
                assert table[channel][measure] == pytest.approx(value, abs=1e-10), (
                    channel, measure
                )
