"""Grid geometry: boxes, polar/cartesian specs, voxel mapping, resampling."""

import dataclasses
import math

import numpy as np
import pytest

from radarkit.grid import (
    Box3D,
    CartesianGridSpec,
    PolarGridSpec,
    RadarTensor,
    doppler_collapse,
    normalize_yaw,
    polar_to_cartesian,
    voxel_to_world,
    world_to_voxel,
)


class TestNormalizeYaw:
    def test_in_range_values_unchanged(self):
        for yaw in (0.0, 1.0, -1.0, 3.0, -3.0, math.pi):
            assert normalize_yaw(yaw) == pytest.approx(yaw, abs=1e-15)

    def test_wraps_into_half_open_interval(self):
        assert normalize_yaw(math.pi) == pytest.approx(math.pi)
        assert normalize_yaw(-math.pi) == pytest.approx(math.pi)
        assert normalize_yaw(2.0 * math.pi) == pytest.approx(0.0, abs=1e-12)
        assert normalize_yaw(3.0 * math.pi) == pytest.approx(math.pi)

    def test_many_turns(self):
        rng = np.random.default_rng(0)
        for yaw in rng.uniform(-50.0, 50.0, size=200):
            wrapped = normalize_yaw(float(yaw))
            assert -math.pi < wrapped <= math.pi
            # same heading modulo full turns
            assert math.cos(wrapped) == pytest.approx(math.cos(yaw), abs=1e-9)
            assert math.sin(wrapped) == pytest.approx(math.sin(yaw), abs=1e-9)


class TestBox3D:
    def test_constructor_normalizes_yaw(self):
        box = Box3D(0, 0, 0, 1, 1, 1, yaw=2.5 * math.pi)
        assert box.yaw == pytest.approx(0.5 * math.pi)

    @pytest.mark.parametrize("field", ["l", "w", "h"])
    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_rejects_non_positive_sizes(self, field, bad):
        kwargs = dict(cx=0, cy=0, cz=0, l=1.0, w=1.0, h=1.0, yaw=0.0)
        kwargs[field] = bad
        with pytest.raises(ValueError):
            Box3D(**kwargs)

    def test_array_round_trip(self):
        box = Box3D(1.0, -2.0, 0.5, 4.0, 2.0, 1.5, yaw=0.7)
        again = Box3D.from_array(box.to_array())
        assert again == box

    def test_volume(self):
        assert Box3D(0, 0, 0, 2.0, 3.0, 4.0, 0.0).volume == pytest.approx(24.0)


class TestPolarGridSpec:
    def test_shape_and_centers(self):
        spec = PolarGridSpec(
            range_bins=4,
            range_res=0.5,
            azimuth_bins=3,
            azimuth_res=0.1,
            elevation_bins=2,
            elevation_res=0.2,
            doppler_bins=5,
            range_offset=0.25,
            azimuth_offset=-0.1,
            elevation_offset=-0.2,
        )
        assert spec.shape == (5, 4, 3, 2)
        np.testing.assert_allclose(
            spec.bin_centers("range"), [0.25, 0.75, 1.25, 1.75]
        )
        np.testing.assert_allclose(spec.bin_centers("azimuth"), [-0.1, 0.0, 0.1])

    def test_rejects_bad_parameters(self):
        good = dict(
            range_bins=4, range_res=0.5, azimuth_bins=3, azimuth_res=0.1,
            elevation_bins=2, elevation_res=0.2,
        )
        with pytest.raises(ValueError):
            PolarGridSpec(**{**good, "range_bins": 0})
        with pytest.raises(ValueError):
            PolarGridSpec(**{**good, "range_res": 0.0})
        with pytest.raises(ValueError):
            PolarGridSpec(**{**good, "range_offset": -0.1})
        with pytest.raises(ValueError):  # azimuth span beyond a full turn
            PolarGridSpec(**{**good, "azimuth_bins": 100, "azimuth_res": 0.1})
        with pytest.raises(ValueError):  # elevation span beyond a half turn
            PolarGridSpec(**{**good, "elevation_bins": 40, "elevation_res": 0.1})


class TestCartesianGridSpec:
    def test_scalar_voxel_becomes_cubic(self):
        spec = CartesianGridSpec(voxel_size=0.4, extents=(0, 72, -15, 15, -2, 7.6))
        assert spec.voxel_size == (0.4, 0.4, 0.4)
        assert (spec.nx, spec.ny, spec.nz) == (180, 75, 24)
        assert spec.shape == (1, 24, 75, 180)

    def test_axis_centers_start_half_voxel_in(self):
        spec = CartesianGridSpec(voxel_size=0.4, extents=(0, 72, -15, 15, -2, 7.6))
        assert spec.axis_centers("x")[0] == pytest.approx(0.2)
        assert spec.axis_centers("y")[0] == pytest.approx(-14.8)
        assert spec.axis_centers("z")[-1] == pytest.approx(7.4)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            CartesianGridSpec(voxel_size=0.0)
        with pytest.raises(ValueError):
            CartesianGridSpec(voxel_size=(0.4, 0.4))
        with pytest.raises(ValueError):
            CartesianGridSpec(extents=(10, 0, -1, 1, -1, 1))


class TestVoxelWorldMapping:
    SPEC = CartesianGridSpec(voxel_size=0.4, extents=(0, 72, -15, 15, -2, 7.6))

    def test_first_voxel_center(self):
        # extents x in (0, 72), voxel 0.4: voxel 0 is centered at 0.2
        x, y, z = voxel_to_world(self.SPEC, (0, 0, 0))
        assert x == pytest.approx(0.2)
        assert y == pytest.approx(-14.8)
        assert z == pytest.approx(-1.8)

    def test_inverse_of_first_center(self):
        assert world_to_voxel(self.SPEC, (0.2, -14.8, -1.8)) == (0, 0, 0)

    def test_out_of_extent_returns_signal(self):
        assert world_to_voxel(self.SPEC, (-0.1, 0.0, 0.0)) is None
        assert world_to_voxel(self.SPEC, (72.0, 0.0, 0.0)) is None  # max exclusive
        assert world_to_voxel(self.SPEC, (0.0, 0.0, 0.0)) is not None  # min inclusive

    def test_voxel_index_bounds_checked(self):
        with pytest.raises(IndexError):
            voxel_to_world(self.SPEC, (0, 0, self.SPEC.nx))
        with pytest.raises(IndexError):
            voxel_to_world(self.SPEC, (-1, 0, 0))

    def test_random_round_trip_lands_within_half_voxel(self):
        rng = np.random.default_rng(1)
        x_min, x_max, y_min, y_max, z_min, z_max = self.SPEC.extents
        for _ in range(1000):
            p = (
                rng.uniform(x_min, x_max - 1e-9),
                rng.uniform(y_min, y_max - 1e-9),
                rng.uniform(z_min, z_max - 1e-9),
            )
            idx = world_to_voxel(self.SPEC, p)
            assert idx is not None
            center = voxel_to_world(self.SPEC, idx)
            assert abs(center[0] - p[0]) <= 0.2 + 1e-12
            assert abs(center[1] - p[1]) <= 0.2 + 1e-12
            assert abs(center[2] - p[2]) <= 0.2 + 1e-12

    def test_voxel_world_voxel_identity(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            idx = (
                int(rng.integers(self.SPEC.nz)),
                int(rng.integers(self.SPEC.ny)),
                int(rng.integers(self.SPEC.nx)),
            )
            assert world_to_voxel(self.SPEC, voxel_to_world(self.SPEC, idx)) == idx


class TestRadarTensor:
    def test_validates_shape_and_values(self):
        spec = CartesianGridSpec(voxel_size=1.0, extents=(0, 2, 0, 2, 0, 2))
        with pytest.raises(ValueError):
            RadarTensor(spec=spec, data=np.zeros((1, 2, 2, 3)))  # wrong shape
        with pytest.raises(ValueError):
            RadarTensor(spec=spec, data=np.full(spec.shape, np.nan))
        with pytest.raises(ValueError):
            RadarTensor(spec=spec, data=-np.ones(spec.shape))
        tensor = RadarTensor(spec=spec, data=np.ones(spec.shape))
        assert tensor.data.dtype == np.float32
        assert tensor.is_cartesian and not tensor.is_polar


def _small_polar(doppler_bins: int = 3) -> PolarGridSpec:
    return PolarGridSpec(
        range_bins=6,
        range_res=0.5,
        azimuth_bins=5,
        azimuth_res=0.1,
        elevation_bins=4,
        elevation_res=0.1,
        doppler_bins=doppler_bins,
        range_offset=0.25,
        azimuth_offset=-0.2,
        elevation_offset=-0.15,
    )


class TestDopplerCollapse:
    def test_single_bin_identity_all_modes(self):
        spec = _small_polar(doppler_bins=1)
        rng = np.random.default_rng(3)
        tensor = RadarTensor(spec=spec, data=rng.uniform(0, 5, spec.shape))
        for mode in ("max", "mean", "sum"):
            out = doppler_collapse(tensor, mode)
            np.testing.assert_array_equal(out.data, tensor.data)
            assert out.spec == spec

    def test_mean_of_three_channels(self):
        spec = _small_polar(doppler_bins=3)
        data = np.zeros(spec.shape)
        data[:, 2, 3, 1] = [1.0, 3.0, 5.0]
        out = doppler_collapse(RadarTensor(spec=spec, data=data), "mean")
        assert out.data[0, 2, 3, 1] == pytest.approx(3.0)

    def test_max_matches_per_cell_scan(self):
        spec = PolarGridSpec(
            range_bins=2, range_res=0.5, azimuth_bins=2, azimuth_res=0.1,
            elevation_bins=2, elevation_res=0.1, doppler_bins=2,
        )
        rng = np.random.default_rng(4)
        data = rng.uniform(0, 9, spec.shape)
        out = doppler_collapse(RadarTensor(spec=spec, data=data), "max").data
        for ir in range(2):
            for ia in range(2):
                for ie in range(2):
                    expect = max(data[d, ir, ia, ie] for d in range(2))
                    assert out[0, ir, ia, ie] == pytest.approx(
                        np.float32(expect), rel=1e-6
                    )

    def test_mean_preserves_total_over_doppler(self):
        spec = _small_polar(doppler_bins=4)
        rng = np.random.default_rng(5)
        tensor = RadarTensor(spec=spec, data=rng.uniform(0, 2, spec.shape))
        out = doppler_collapse(tensor, "mean")
        assert float(out.data.sum()) == pytest.approx(
            float(tensor.data.sum()) / 4.0, rel=1e-6
        )
        assert out.spec.doppler_bins == 1

    def test_unknown_mode_rejected(self):
        spec = _small_polar(doppler_bins=1)
        tensor = RadarTensor(spec=spec, data=np.zeros(spec.shape))
        with pytest.raises(ValueError):
            doppler_collapse(tensor, "median")


class TestPolarToCartesian:
    # Polar grid looking down +x: azimuth bin 2 and elevation bin 1 are
    # exactly boresight (angle 0); range centers at 0.25 + 0.5 i.
    POLAR = PolarGridSpec(
        range_bins=20,
        range_res=0.5,
        azimuth_bins=5,
        azimuth_res=0.1,
        elevation_bins=3,
        elevation_res=0.1,
        doppler_bins=2,
        range_offset=0.25,
        azimuth_offset=-0.2,
        elevation_offset=-0.1,
    )

    def test_exact_at_grid_node(self):
        # Single cartesian voxel centered at (2.25, 0, 0): range bin 4,
        # azimuth 0, elevation 0 are all exact polar grid nodes.
        target = CartesianGridSpec(
            voxel_size=0.1, extents=(2.2, 2.3, -0.05, 0.05, -0.05, 0.05),
            doppler_bins=2,
        )
        rng = np.random.default_rng(6)
        data = rng.uniform(1.0, 9.0, self.POLAR.shape)
        out = polar_to_cartesian(RadarTensor(spec=self.POLAR, data=data), target)
        assert out.spec == target
        for d in range(2):
            assert out.data[d, 0, 0, 0] == pytest.approx(
                np.float32(data[d, 4, 2, 1]), rel=1e-6
            )

    def test_behind_sensor_is_zero(self):
        target = CartesianGridSpec(
            voxel_size=0.1, extents=(0.0, 0.1, -0.05, 0.05, -0.05, 0.05),
            doppler_bins=2,
        )
        data = np.full(self.POLAR.shape, 5.0)
        out = polar_to_cartesian(RadarTensor(spec=self.POLAR, data=data), target)
        assert float(out.data.max()) == 0.0  # range 0.05 < range_offset

    def test_constant_field_resamples_to_constant(self):
        target = CartesianGridSpec(
            voxel_size=0.2, extents=(0.0, 10.0, -1.0, 1.0, -0.4, 0.4),
            doppler_bins=2,
        )
        data = np.full(self.POLAR.shape, 7.0)
        out = polar_to_cartesian(RadarTensor(spec=self.POLAR, data=data), target)
        values = out.data[out.data > 0.0]
        assert values.size > 0
        np.testing.assert_allclose(values, 7.0, atol=1e-6)

    def test_output_bounded_by_input(self):
        target = CartesianGridSpec(
            voxel_size=0.2, extents=(0.0, 10.0, -1.0, 1.0, -0.4, 0.4),
            doppler_bins=2,
        )
        rng = np.random.default_rng(7)
        data = rng.uniform(2.0, 11.0, self.POLAR.shape)
        out = polar_to_cartesian(RadarTensor(spec=self.POLAR, data=data), target)
        assert float(out.data.max()) <= float(data.max()) + 1e-5
        inside = out.data[out.data > 0.0]
        assert float(inside.min()) >= float(data.min()) - 1e-5

    def test_nearest_mode_exact_at_node(self):
        target = CartesianGridSpec(
            voxel_size=0.1, extents=(2.2, 2.3, -0.05, 0.05, -0.05, 0.05),
            doppler_bins=2,
        )
        rng = np.random.default_rng(8)
        data = rng.uniform(1.0, 9.0, self.POLAR.shape)
        out = polar_to_cartesian(
            RadarTensor(spec=self.POLAR, data=data), target, method="nearest"
        )
        assert out.data[0, 0, 0, 0] == pytest.approx(
            np.float32(data[0, 4, 2, 1]), rel=1e-6
        )

    def test_rejects_non_polar_input(self):
        cart = CartesianGridSpec(voxel_size=1.0, extents=(0, 2, 0, 2, 0, 2))
        tensor = RadarTensor(spec=cart, data=np.ones(cart.shape))
        with pytest.raises(ValueError):
            polar_to_cartesian(tensor, cart)

    def test_rejects_doppler_mismatch(self):
        target = CartesianGridSpec(
            voxel_size=0.2, extents=(0, 10, -1, 1, -0.4, 0.4), doppler_bins=1
        )
        tensor = RadarTensor(spec=self.POLAR, data=np.ones(self.POLAR.shape))
        with pytest.raises(ValueError):
            polar_to_cartesian(tensor, target)

    def test_rejects_unknown_method(self):
        target = CartesianGridSpec(
            voxel_size=0.2, extents=(0, 10, -1, 1, -0.4, 0.4), doppler_bins=2
        )
        tensor = RadarTensor(spec=self.POLAR, data=np.ones(self.POLAR.shape))
        with pytest.raises(ValueError):
            polar_to_cartesian(tensor, target, method="cubic")
