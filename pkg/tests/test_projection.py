import json

import numpy as np
import pytest

import widewarp as ww
from widewarp.errors import DimensionMismatch, DomainError, NonInvertibleModel
from widewarp.flow import sample_flow
from conftest import conformality_ratio
from widewarp.projection import CameraModel, blend_flows, distort_points, \
    perspective_undistort_flow, stereographic_flow, \
    stereographic_project_points, undistort_points


def simple_cam(k1=0.0, k2=0.0, k3=0.0, f=1000.0, size=1000):
    return CameraModel(fx=f, fy=f, cx=size / 2, cy=size / 2,
                       k1=k1, k2=k2, k3=k3, width=size, height=size)


class TestCameraModel:
    def test_rejects_bad_intrinsics(self):
        with pytest.raises(ValueError):
            CameraModel(fx=-1, fy=1, cx=0, cy=0, width=10, height=10)
        with pytest.raises(ValueError):
            CameraModel(fx=1, fy=1, cx=20, cy=0, width=10, height=10)

    def test_rejects_non_monotone_distortion(self):
        # strong negative k1 folds the polynomial inside the raster
        with pytest.raises(NonInvertibleModel):
            simple_cam(k1=-1.5, f=500)

    def test_json_round_trip(self):
        cam = simple_cam(k1=0.1, k2=-0.01)
        back = CameraModel.from_json(json.loads(json.dumps(cam.to_json())))
        assert back == cam


class TestPerspectiveUndistort:
    def test_zero_distortion_is_exact_zero_flow(self):
        flow = perspective_undistort_flow(simple_cam(), 100, 100)
        assert np.all(flow.data == 0.0)

    def test_principal_point_static_for_any_k(self):
        flow = perspective_undistort_flow(simple_cam(k1=0.2, k2=0.05), 1000, 1000)
        assert flow.dx[500, 500] == 0.0 and flow.dy[500, 500] == 0.0

    def test_brown_hand_value(self):
        # normalized x = 0.4 at pixel 900: r2 = 0.16, d = 1.016 -> dx = 6.4
        flow = perspective_undistort_flow(simple_cam(k1=0.1), 1000, 1000)
        assert flow.dx[500, 900] == pytest.approx(6.4, abs=1e-4)
        assert flow.dy[500, 900] == 0.0

    def test_distort_points_hand_value(self):
        src = distort_points(simple_cam(k1=0.1), np.array([[1000.0, 500.0]]))
        np.testing.assert_allclose(src, [[1012.5, 500.0]], atol=1e-9)

    def test_undistort_inverts_distort(self):
        cam = simple_cam(k1=0.08, k2=-0.01)
        pts = np.array([[100.0, 200.0], [600.0, 900.0], [999.0, 10.0]])
        round_trip = undistort_points(cam, distort_points(cam, pts))
        np.testing.assert_allclose(round_trip, pts, atol=1e-9)

    def test_scaled_raster_keeps_normalized_geometry(self):
        cam = simple_cam(k1=0.1)
        full = perspective_undistort_flow(cam, 1000, 1000)
        half = perspective_undistort_flow(cam, 500, 500)
        # same normalized position; displacements scale with the raster
        assert half.dx[250, 450] == pytest.approx(full.dx[500, 900] / 2, abs=1e-4)

    def test_collinearity_after_undistortion(self):
        cam = simple_cam(k1=0.1, f=800, size=512)
        flow = perspective_undistort_flow(cam, 512, 512)
        ideal = np.stack([np.linspace(40, 472, 25), np.full(25, 100.0)], axis=1)
        captured = distort_points(cam, ideal, 512, 512)
        landed = ww.forward_map_points(flow, captured)
        # fit a line, measure perpendicular residual
        x, y = landed[:, 0], landed[:, 1]
        a, b = np.polyfit(x, y, 1)
        resid = np.abs(a * x - y + b) / np.hypot(a, 1.0)
        assert resid.max() <= 0.5


class TestStereographic:
    def test_principal_point_static(self):
        flow = stereographic_flow(simple_cam(f=500), 1000, 1000)
        assert flow.dx[500, 500] == 0.0 and flow.dy[500, 500] == 0.0

    def test_radial_hand_value(self):
        # theta 45 deg: r_out = 2 f tan(22.5), r_in = f -> displacement 85.7864
        flow = stereographic_flow(simple_cam(f=500), 1000, 1000)
        r_out = 2 * 500 * np.tan(np.deg2rad(22.5))
        disp = sample_flow(flow, np.array([500.0 + r_out]), np.array([500.0]))
        assert disp[0, 0] == pytest.approx(85.7864, abs=1e-3)
        assert disp[0, 1] == pytest.approx(0.0, abs=1e-6)

    def test_radially_symmetric(self):
        flow = stereographic_flow(simple_cam(f=500), 1000, 1000)
        r = 180
        m1 = np.hypot(*sample_flow(flow, np.array([500.0 + r]), np.array([500.0]))[0])
        m2 = np.hypot(*sample_flow(flow, np.array([500.0]), np.array([500.0 + r]))[0])
        m3 = np.hypot(*sample_flow(flow, np.array([500.0 - r]), np.array([500.0]))[0])
        assert m1 == pytest.approx(m2, abs=1e-9)
        assert m1 == pytest.approx(m3, abs=1e-9)

    def test_domain_error_on_wide_raster(self):
        with pytest.raises(DomainError):
            stereographic_flow(simple_cam(f=200), 1000, 1000)

    def test_conformality_via_finite_differences(self):
        # the output raster must be angle-true for viewing directions: step
        # on the sphere, project analytically to the rectilinear frame, track
        # through the flow, and difference
        flow = stereographic_flow(simple_cam(f=500), 1000, 1000)
        rng = np.random.default_rng(0)
        pts = rng.integers(100, 900, size=(20, 2)).astype(np.float64)
        for pixel in pts:
            if np.hypot(pixel[0] - 500, pixel[1] - 500) < 20:
                continue
            ratio = conformality_ratio(flow, 500.0, 500.0, 500.0, pixel)
            assert ratio == pytest.approx(1.0, abs=1e-3)

    def test_forward_points_match_flow(self):
        cam = simple_cam(f=500)
        flow = stereographic_flow(cam, 1000, 1000)
        pts = np.array([[700.0, 500.0], [500.0, 250.0], [650.0, 650.0]])
        landed = ww.forward_map_points(flow, pts)
        np.testing.assert_allclose(
            landed, stereographic_project_points(cam, pts), atol=2e-3)


class TestBlend:
    def test_zero_weight_is_persp_exact(self):
        cam = simple_cam(k1=0.1)
        persp = perspective_undistort_flow(cam, 64, 64)
        stereo = stereographic_flow(simple_cam(f=500, size=64), 64, 64)
        w0 = ww.ImageBuffer(np.zeros((64, 64, 1)))
        assert np.array_equal(blend_flows(persp, stereo, w0).data, persp.data)

    def test_unit_weight_is_stereo_exact(self):
        cam = simple_cam(k1=0.1)
        persp = perspective_undistort_flow(cam, 64, 64)
        stereo = stereographic_flow(simple_cam(f=500, size=64), 64, 64)
        w1 = ww.ImageBuffer(np.ones((64, 64, 1)))
        assert np.array_equal(blend_flows(persp, stereo, w1).data, stereo.data)

    def test_half_weight_midpoint(self):
        a = ww.FlowField(np.full((4, 4, 2), [2.0, 0.0], dtype=np.float32))
        b = ww.FlowField(np.full((4, 4, 2), [4.0, 2.0], dtype=np.float32))
        w = ww.ImageBuffer(np.full((4, 4, 1), 0.5))
        out = blend_flows(a, b, w)
        assert np.all(out.dx == 3.0) and np.all(out.dy == 1.0)

    def test_pointwise_between_inputs(self, rng):
        a = ww.FlowField(rng.normal(0, 2, (8, 8, 2)).astype(np.float32))
        b = ww.FlowField(rng.normal(0, 2, (8, 8, 2)).astype(np.float32))
        w = ww.ImageBuffer(rng.random((8, 8, 1)))
        out = blend_flows(a, b, w).data
        lo = np.minimum(a.data, b.data)
        hi = np.maximum(a.data, b.data)
        assert np.all(out >= lo - 1e-6) and np.all(out <= hi + 1e-6)

    def test_dimension_mismatch(self):
        a = ww.zero_flow(4, 4)
        with pytest.raises(DimensionMismatch):
            blend_flows(a, ww.zero_flow(5, 4), ww.ImageBuffer(np.zeros((4, 4, 1))))
