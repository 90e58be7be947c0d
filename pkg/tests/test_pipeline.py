import numpy as np
import pytest

import widewarp as ww
from widewarp.errors import NonInvertibleModel, StageFailure
from widewarp.pipeline import StageOutput, TransitionPayload, reference_stage1, \
    reference_stage2, run, working_resolution
from widewarp.supervision import AnnotationSet

from conftest import band_limited_image, constant_flow

import scene


def zero_producer(img, payload=None):
    return StageOutput(flow=ww.zero_flow(img.width, img.height),
                       projected=img, aux=[])


def constant_producer(dx, dy):
    def produce(img, payload=None):
        f = constant_flow(img.width, img.height, dx, dy)
        return StageOutput(flow=f, projected=ww.warp(img, f), aux=[])
    return produce


class TestRun:
    def test_zero_producers_identity(self):
        img = band_limited_image(96, 128, seed=0, channels=3)
        result = run(img, zero_producer, zero_producer)
        assert np.array_equal(result.corrected.data, img.data)
        assert np.all(result.flow.data == 0.0)

    def test_working_resolution_auto_orientation(self):
        assert working_resolution(500, 700) == (256, 384)
        assert working_resolution(700, 500) == (384, 256)
        img_portrait = band_limited_image(100, 150, seed=1)
        res = run(img_portrait, zero_producer, zero_producer)
        assert res.diagnostics.working == (256, 384)

    def test_constant_stage2_rescales_to_full(self):
        img = band_limited_image(512, 768, seed=2)
        result = run(img, zero_producer, constant_producer(1.0, 0.0),
                     working=(256, 384))
        assert np.all(result.flow.dx == 2.0)
        assert np.all(result.flow.dy == 0.0)

    def test_stage1_analytic_close_to_fullres_warp(self):
        cam = ww.CameraModel(fx=700, fy=700, cx=256, cy=384, k1=0.06,
                             width=512, height=768)
        img = band_limited_image(512, 768, seed=3)
        result = run(img, reference_stage1(cam), zero_producer)
        direct = ww.warp(img, ww.perspective_undistort_flow(cam, 512, 768))
        assert np.max(np.abs(result.corrected.data - direct.data)) <= 0.03

    def test_fusion_matches_sequential_two_warp(self):
        cam = ww.CameraModel(fx=700, fy=700, cx=256, cy=384, k1=0.05,
                             width=512, height=768)
        img = band_limited_image(512, 768, seed=4)
        stage2 = constant_producer(1.5, -1.0)
        result = run(img, reference_stage1(cam), stage2)
        ww_, wh = result.diagnostics.working
        small = ww.resize_bilinear(img, ww_, wh)
        seq = ww.warp(ww.warp(small, result.diagnostics.stage1.flow),
                      result.diagnostics.stage2.flow)
        seq_full = ww.resize_bilinear(seq, 512, 768)
        assert np.max(np.abs(result.corrected.data - seq_full.data)) <= 0.05

    def test_stage_attribution_on_failure(self):
        def broken(img, payload=None):
            raise RuntimeError("boom")
        img = band_limited_image(64, 96, seed=5)
        with pytest.raises(StageFailure, match="stage 1"):
            run(img, broken, zero_producer)
        with pytest.raises(StageFailure, match="stage 2"):
            run(img, zero_producer, broken)

    def test_deterministic(self):
        sc = scene.build_scene()
        img = band_limited_image(scene.WIDTH, scene.HEIGHT, seed=6)
        stage1 = reference_stage1(sc.cam)
        stage2 = reference_stage2(sc.cam, sc.annotations, iters=2,
                                  frame_size=(scene.WIDTH, scene.HEIGHT))
        r1 = run(img, stage1, stage2)
        r2 = run(img, stage1, stage2)
        assert np.array_equal(r1.corrected.data, r2.corrected.data)
        assert np.array_equal(r1.flow.data, r2.flow.data)

    def test_payload_carries_stage1_products(self):
        seen = {}

        def probe(img, payload=None):
            seen["payload"] = payload
            return zero_producer(img)

        img = band_limited_image(64, 96, seed=7)
        run(img, reference_stage1(
            ww.CameraModel(fx=100, fy=100, cx=32, cy=48, width=64, height=96)),
            probe)
        payload = seen["payload"]
        assert isinstance(payload, TransitionPayload)
        assert payload.flow.width == payload.projected.width
        assert len(payload.features) == 1  # the stage-1 edge map


class TestReferenceStage1:
    def test_zero_distortion_zero_flow(self):
        cam = ww.CameraModel(fx=100, fy=100, cx=50, cy=50, width=100, height=100)
        img = band_limited_image(100, 100, seed=8)
        out = reference_stage1(cam)(img)
        assert np.all(out.flow.data == 0.0)
        assert np.array_equal(out.projected.data, img.data)

    def test_matches_projection_module(self):
        cam = ww.CameraModel(fx=200, fy=220, cx=40, cy=60, k1=0.08,
                             width=96, height=128)
        img = band_limited_image(96, 128, seed=9)
        out = reference_stage1(cam)(img)
        direct = ww.perspective_undistort_flow(cam, 96, 128)
        assert np.array_equal(out.flow.data, direct.data)

    def test_invalid_camera_rejected_at_construction(self):
        with pytest.raises(NonInvertibleModel):
            ww.CameraModel(fx=500, fy=500, cx=500, cy=500, k1=-1.5,
                           width=1000, height=1000)


class TestReferenceStage2:
    def test_no_annotations_exact_zero(self):
        cam = ww.CameraModel(fx=400, fy=400, cx=128, cy=192,
                             width=256, height=384)
        img = band_limited_image(256, 384, seed=10)
        out = reference_stage2(cam, AnnotationSet())(img)
        assert np.all(out.flow.data == 0.0)
        assert np.array_equal(out.projected.data, img.data)

    def test_line_only_stays_near_rest(self):
        # with a straight line constraint and no faces, the solver runs and
        # the regularized result stays within a quarter pixel of identity
        cam = ww.CameraModel(fx=400, fy=400, cx=128, cy=192,
                             width=256, height=384)
        ann = AnnotationSet(lines=[np.array([[20.0, 50.0], [236.0, 50.0]])])
        img = band_limited_image(256, 384, seed=11)
        out = reference_stage2(cam, ann, iters=2)(img)
        assert np.max(np.abs(out.flow.data)) <= 0.25

    def test_centered_face_pulls_outward(self):
        sc = scene.build_scene()
        img = band_limited_image(scene.WIDTH, scene.HEIGHT, seed=12)
        out = reference_stage2(sc.cam, sc.annotations, iters=3)(img)
        stereo = ww.stereographic_flow(sc.cam, scene.WIDTH, scene.HEIGHT)
        # under the heatmap peak the emitted flow approximates the
        # stereographic blend: same outward sign, comparable magnitude
        iy, ix = int(scene.NOSE[1]), int(scene.NOSE[0]) + 24
        assert out.flow.dx[iy, ix] * stereo.dx[iy, ix] > 0
        assert abs(out.flow.dx[iy, ix]) >= 0.3 * abs(stereo.dx[iy, ix])

    def test_background_preserved(self):
        sc = scene.build_scene()
        img = band_limited_image(scene.WIDTH, scene.HEIGHT, seed=13)
        out = reference_stage2(sc.cam, sc.annotations, iters=3)(img)
        heat = ww.face_heatmap(sc.annotations.faces, scene.WIDTH, scene.HEIGHT)
        mag = np.hypot(out.flow.dx, out.flow.dy)
        quiet = heat.plane(0) < 0.01
        assert quiet.any()
        assert float(mag[quiet].max()) <= 0.5

    def test_annotation_rescaling_by_frame_size(self):
        sc = scene.build_scene()
        img = band_limited_image(scene.WIDTH // 2, scene.HEIGHT // 2, seed=14)
        producer = reference_stage2(sc.cam, sc.annotations, iters=1,
                                    frame_size=(scene.WIDTH, scene.HEIGHT))
        out = producer(img)
        assert out.flow.width == scene.WIDTH // 2
        assert float(np.abs(out.flow.data).max()) > 0.0
