import numpy as np
import pytest

import widewarp as ww
from widewarp import dataset
from widewarp.errors import CorruptRecord, InvalidRecord
from widewarp.mesh_solver import EnergyWeights
from widewarp.supervision import AnnotationSet, sample_line

from conftest import band_limited_image, checkerboard

import scene


def plain_cam(w=128, h=128):
    return ww.CameraModel(fx=200, fy=200, cx=w / 2, cy=h / 2, width=w, height=h)


def barrel_cam(w=128, h=128, k1=-0.08):
    return ww.CameraModel(fx=150, fy=150, cx=w / 2, cy=h / 2, k1=k1,
                          width=w, height=h)


class TestGenerate:
    def test_zero_distortion_no_faces_all_identity(self):
        img = band_limited_image(128, 128, seed=0)
        record = dataset.generate("r0", img, plain_cam(), AnnotationSet())
        assert np.all(record.proj_flow.data == 0.0)
        assert np.all(record.corr_flow.data == 0.0)
        assert np.array_equal(record.projection.data, img.data)
        assert np.array_equal(record.corrected.data, img.data)

    def test_distorted_checkerboard_lines_straighten(self):
        w = h = 256
        cam = ww.CameraModel(fx=300, fy=300, cx=128, cy=128, k1=-0.15,
                             width=w, height=h)
        # ideal straight lines and their captured (distorted) annotations
        ideal = [np.array([[20.0, 64.0], [236.0, 64.0]]),
                 np.array([[20.0, 192.0], [236.0, 192.0]])]
        captured = [ww.distort_points(cam, l) for l in ideal]
        img = checkerboard(w, h, cell=32)
        record = dataset.generate("cb", img, cam,
                                  AnnotationSet(lines=captured))
        # no faces: correction stage leaves the projection untouched
        assert np.array_equal(record.corrected.data, record.projection.data)
        for line in ideal:
            ref = sample_line(line, 16)
            landed = ww.forward_map_points(record.proj_flow,
                                           ww.distort_points(cam, ref))
            assert ww.line_acc(landed, ref) >= 99.0

    def test_face_record_passes_invariants(self):
        sc = scene.build_scene()
        img = band_limited_image(scene.WIDTH, scene.HEIGHT, seed=1)
        record = dataset.generate("face", img, sc.cam, sc.annotations, iters=2)
        dataset.validate(record)  # raises on violation
        # the projected bbox center sits between pixel centers, so the
        # discrete peak is near but not exactly 1
        assert record.heatmap.plane(0).max() >= 0.9
        half, quarter = record.edge_targets
        assert (half.width, half.height) == (scene.WIDTH // 2, scene.HEIGHT // 2)

    def test_deterministic(self):
        sc = scene.build_scene()
        img = band_limited_image(scene.WIDTH, scene.HEIGHT, seed=2)
        r1 = dataset.generate("d", img, sc.cam, sc.annotations, iters=2)
        r2 = dataset.generate("d", img, sc.cam, sc.annotations, iters=2)
        assert np.array_equal(r1.corr_flow.data, r2.corr_flow.data)


class TestSaveLoad:
    def make_record(self):
        sc = scene.build_scene()
        img = band_limited_image(scene.WIDTH, scene.HEIGHT, seed=3, channels=3)
        return dataset.generate("rt", img, sc.cam, sc.annotations, iters=1)

    def test_round_trip(self, tmp_path):
        record = self.make_record()
        dataset.save(record, tmp_path / "rec")
        loaded = dataset.load(tmp_path / "rec")
        assert np.array_equal(loaded.proj_flow.data, record.proj_flow.data)
        assert np.array_equal(loaded.corr_flow.data, record.corr_flow.data)
        assert np.max(np.abs(loaded.input.data - record.input.data)) <= 1 / 255
        assert np.max(np.abs(loaded.corrected.data - record.corrected.data)) <= 1 / 255
        assert loaded.camera == record.camera
        assert loaded.weights == record.weights
        assert loaded.version == record.version
        assert len(loaded.annotations.lines) == len(record.annotations.lines)

    def test_truncated_flow_rejected(self, tmp_path):
        record = self.make_record()
        dataset.save(record, tmp_path / "rec")
        f = tmp_path / "rec" / "corr_flow.pflo"
        f.write_bytes(f.read_bytes()[:-8])
        with pytest.raises(CorruptRecord):
            dataset.load(tmp_path / "rec")

    def test_missing_file_rejected(self, tmp_path):
        record = self.make_record()
        dataset.save(record, tmp_path / "rec")
        (tmp_path / "rec" / "heatmap.png").unlink()
        with pytest.raises(CorruptRecord):
            dataset.load(tmp_path / "rec")

    def test_tampered_image_fails_invariants(self, tmp_path):
        record = self.make_record()
        dataset.save(record, tmp_path / "rec")
        noise = ww.ImageBuffer(
            np.random.default_rng(0).random((scene.HEIGHT, scene.WIDTH, 3)))
        ww.write_png(noise, tmp_path / "rec" / "corrected.png")
        with pytest.raises(InvalidRecord):
            dataset.load(tmp_path / "rec")

    def test_unknown_format_version_rejected(self, tmp_path):
        import json
        record = self.make_record()
        dataset.save(record, tmp_path / "rec")
        meta_path = tmp_path / "rec" / "meta.json"
        meta = json.loads(meta_path.read_text())
        meta["format_version"] = 99
        meta_path.write_text(json.dumps(meta))
        with pytest.raises(CorruptRecord):
            dataset.load(tmp_path / "rec")


class TestIterateRefine:
    def test_unchanged_params_identical(self):
        sc = scene.build_scene()
        img = band_limited_image(scene.WIDTH, scene.HEIGHT, seed=4)
        record = dataset.generate("ir", img, sc.cam, sc.annotations, iters=2)
        refined = dataset.iterate_refine(record)
        assert np.array_equal(refined.corr_flow.data, record.corr_flow.data)
        assert refined.version == record.version + 1

    def test_raising_line_weight_raises_line_acc(self):
        sc = scene.build_scene()
        img = band_limited_image(scene.WIDTH, scene.HEIGHT, seed=5)
        low = dataset.generate("lw", img, sc.cam, sc.annotations, iters=2,
                               weights=EnergyWeights(w_line=0.0))
        high = dataset.iterate_refine(low, weights=EnergyWeights(w_line=32.0))

        def mean_line_acc(record):
            scores = []
            for line in sc.lines_rect:
                ref = sample_line(line, 16)
                landed = ww.forward_map_points(record.corr_flow, ref)
                scores.append(ww.line_acc(landed, ref))
            return float(np.mean(scores))

        assert mean_line_acc(high) >= mean_line_acc(low)

    def test_zero_weights_rejected(self):
        with pytest.raises(ValueError):
            EnergyWeights(w_face=0.0, w_background=0.0, w_line=0.0,
                          w_regularity=0.0, w_boundary=0.0)


class TestQualityGate:
    def test_floor_passes_on_straightened_lines(self):
        w = h = 256
        cam = ww.CameraModel(fx=300, fy=300, cx=128, cy=128, k1=-0.15,
                             width=w, height=h)
        # annotators trace the curved line densely, not just its endpoints
        ideal = [np.array([[20.0, 64.0], [236.0, 64.0]])]
        captured = [ww.distort_points(cam, sample_line(l, 24)) for l in ideal]
        img = checkerboard(w, h, cell=32)
        record = dataset.generate("gate", img, cam,
                                  AnnotationSet(lines=captured),
                                  line_acc_floor=99.0)
        assert all(s >= 99.0 for s in dataset.corrected_line_straightness(record))

    def test_unreachable_floor_rejects(self):
        w = h = 128
        # zero-distortion camera cannot straighten an annotated zigzag
        cam = ww.CameraModel(fx=200, fy=200, cx=64, cy=64, width=w, height=h)
        zig = np.stack([np.linspace(10, 110, 21),
                        np.where(np.arange(21) % 2 == 0, 40.0, 48.0)], axis=1)
        from widewarp.errors import InvalidRecord as IR
        with pytest.raises(IR):
            dataset.generate("bad", band_limited_image(w, h, seed=8), cam,
                             AnnotationSet(lines=[zig]), line_acc_floor=99.0)
