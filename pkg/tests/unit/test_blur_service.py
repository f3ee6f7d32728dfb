import numpy as np
import pytest

from lfdeblur.core.config import SynthConfig
from lfdeblur.core.exceptions import TrajectoryError, WarpError
from lfdeblur.core.lightfield import Image, LightField
from lfdeblur.schemas import CameraPose, CameraTrajectory
from lfdeblur.services.blur_service import (
    TRAJECTORY_FILE,
    blur_magnitude_per_view,
    load_trajectory,
    sample_trajectory,
    save_trajectory,
    synthesize_blur,
    synthesize_scene,
    synthesize_scenes,
    view_offset,
    warp_view,
)
from lfdeblur.utils.image_utils import load_light_field


def _shift_trajectory(shifts, baseline=0.0):
    return CameraTrajectory(poses=[CameraPose(tx=s) for s in shifts], dof=3, baseline=baseline)


def test_sample_trajectory_is_deterministic():
    """Equal seeds give identical trajectories, different seeds do not."""
    a = sample_trajectory(7, dof=6, T=10)
    b = sample_trajectory(7, dof=6, T=10)
    c = sample_trajectory(8, dof=6, T=10)

    assert [p.as_tuple() for p in a.poses] == [p.as_tuple() for p in b.poses]
    assert [p.as_tuple() for p in a.poses] != [p.as_tuple() for p in c.poses]


def test_sample_trajectory_starts_at_identity_and_respects_bounds():
    traj = sample_trajectory(3, dof=6, trans_mag=0.03, rot_mag=0.005, T=20)

    assert traj.T == 20
    assert traj.poses[0].is_identity()
    for pose in traj.poses:
        assert all(abs(t) <= 0.03 for t in pose.translation)
        assert all(abs(r) <= 0.005 for r in pose.rotation)


def test_three_dof_trajectories_never_rotate():
    """3-DOF paths carry zero rotation and share translations with 6-DOF paths of the same seed."""
    three = sample_trajectory(11, dof=3, T=5)
    six = sample_trajectory(11, dof=6, T=5)

    assert all(p.rotation == (0.0, 0.0, 0.0) for p in three.poses)
    assert [p.translation for p in three.poses] == [p.translation for p in six.poses]


def test_zero_magnitudes_give_identity_poses():
    traj = sample_trajectory(0, dof=6, trans_mag=0.0, rot_mag=0.0, T=4)

    assert all(p.is_identity() for p in traj.poses)


@pytest.mark.parametrize("kwargs", [
    {"T": 0},
    {"trans_mag": -0.1},
    {"rot_mag": -0.1},
    {"dof": 4},
])
def test_sample_trajectory_rejects_invalid_parameters(kwargs):
    with pytest.raises(TrajectoryError):
        sample_trajectory(0, **kwargs)


def test_three_dof_trajectory_schema_rejects_rotation():
    with pytest.raises(ValueError):
        CameraTrajectory(poses=[CameraPose(rx=0.01)], dof=3)


def test_view_offset_is_centred():
    assert view_offset(2, 2, 5, 5) == (0.0, 0.0)
    assert view_offset(0, 4, 5, 5) == (-2.0, 2.0)
    assert view_offset(0, 1, 2, 2) == (-0.5, 0.5)


def test_identity_pose_leaves_the_view_unchanged(rng):
    """Identity warps are exact, not merely close."""
    image = Image(rng.random((9, 7, 3)))

    warped = warp_view(image, CameraPose(), (1.0, -1.0), 0.01, 100.0)

    np.testing.assert_array_equal(warped.data, image.data)


def test_constant_image_stays_constant_under_any_warp():
    image = Image(np.full((10, 10, 3), 0.4))
    pose = CameraPose(tx=0.013, ty=-0.02, tz=0.05, rx=0.002, ry=-0.003, rz=0.01)

    warped = warp_view(image, pose, (1.0, 2.0), 0.01, 100.0)

    np.testing.assert_allclose(warped.data, 0.4, atol=1e-12)


def test_one_pixel_translation_shifts_by_one_pixel(rng):
    """tx · disparity = 1 moves content one pixel along x, replicating the border."""
    data = rng.random((8, 6, 3))

    warped = warp_view(Image(data), CameraPose(tx=0.01), reference_disparity=100.0).data

    np.testing.assert_allclose(warped[1:], data[:-1], atol=1e-12)
    np.testing.assert_allclose(warped[0], data[0], atol=1e-12)


def test_degenerate_scale_raises_warp_error():
    with pytest.raises(WarpError):
        warp_view(Image(np.zeros((4, 4, 3))), CameraPose(tz=-1.0))


def test_two_pose_average(rng):
    """Identity plus a one-pixel shift averages the view with its shifted copy."""
    data = rng.random((1, 1, 8, 8, 3))
    lf = LightField(data)

    blurred = synthesize_blur(lf, _shift_trajectory([0.0, 1.0]), reference_disparity=1.0).data

    np.testing.assert_allclose(blurred[0, 0, 1:], (data[0, 0, 1:] + data[0, 0, :-1]) / 2, atol=1e-12)


def test_no_motion_returns_the_input_exactly(random_lf):
    lf = random_lf(2, 2, 6, 6, 3)
    traj = sample_trajectory(0, dof=6, trans_mag=0.0, rot_mag=0.0, T=5)

    np.testing.assert_array_equal(synthesize_blur(lf, traj, 100.0).data, lf.data)


def test_empty_trajectory_raises(random_lf):
    with pytest.raises(TrajectoryError):
        synthesize_blur(random_lf(1, 1, 4, 4, 3), CameraTrajectory(poses=[]), 1.0)


def test_blur_grows_with_disparity(random_lf):
    """Larger reference disparity means longer image motion and more blur."""
    lf = random_lf(1, 1, 16, 16, 3)
    traj = _shift_trajectory(np.linspace(0.0, 1.0, 6))

    magnitudes = [
        blur_magnitude_per_view(synthesize_blur(lf, traj, disparity), lf)[0, 0]
        for disparity in (0.25, 0.5, 1.0)
    ]

    assert magnitudes[0] > 0
    assert magnitudes[0] < magnitudes[1] < magnitudes[2]


def test_blur_is_linear_in_the_input(random_lf):
    lf_a = random_lf(2, 2, 10, 10, 3)
    lf_b = random_lf(2, 2, 10, 10, 3)
    traj = sample_trajectory(5, dof=6, trans_mag=0.03, rot_mag=0.005, T=6, baseline=0.01)
    combined = LightField(0.3 * lf_a.data + 0.5 * lf_b.data)

    blurred = synthesize_blur(combined, traj, 100.0).data
    expected = 0.3 * synthesize_blur(lf_a, traj, 100.0).data + 0.5 * synthesize_blur(lf_b, traj, 100.0).data

    np.testing.assert_allclose(blurred, expected, atol=1e-10)


def test_in_plane_translation_blurs_every_view_alike(rng):
    """Pure in-plane translation does not depend on the view."""
    base = rng.random((12, 12, 3))
    lf = LightField(np.broadcast_to(base, (3, 3, 12, 12, 3)))
    traj = CameraTrajectory(
        poses=[CameraPose(tx=0.01 * f, ty=-0.005 * f) for f in np.linspace(0, 1, 5)],
        baseline=0.05,
    )

    blurred = synthesize_blur(lf, traj, 100.0).data

    for u in range(3):
        for v in range(3):
            np.testing.assert_array_equal(blurred[u, v], blurred[1, 1])


def test_forward_motion_blurs_views_differently(rng):
    """Translation along the optical axis moves off-centre views sideways as well."""
    base = rng.random((16, 16, 3))
    lf = LightField(np.broadcast_to(base, (3, 3, 16, 16, 3)))
    traj = CameraTrajectory(poses=[CameraPose(tz=0.05 * f) for f in np.linspace(0, 1, 5)], baseline=0.05)

    blurred = synthesize_blur(lf, traj, 100.0).data

    assert not np.allclose(blurred[0, 0], blurred[1, 1], atol=1e-6)
    assert not np.allclose(blurred[2, 2], blurred[1, 1], atol=1e-6)


def test_blur_magnitude_per_view_shape(random_lf):
    lf = random_lf(2, 3, 4, 4, 3)

    magnitude = blur_magnitude_per_view(lf, lf)

    assert magnitude.shape == (2, 3)
    assert np.all(magnitude == 0)


def test_trajectory_sidecar_round_trip(tmp_path):
    traj = sample_trajectory(21, dof=6, T=7, baseline=0.02)

    loaded = load_trajectory(save_trajectory(traj, tmp_path / TRAJECTORY_FILE))

    assert loaded.dof == 6
    assert loaded.baseline == 0.02
    assert [p.as_tuple() for p in loaded.poses] == [p.as_tuple() for p in traj.poses]


def test_synthesize_scene_writes_views_and_trajectory(tmp_path, random_lf, write_lf):
    sharp_dir = write_lf(random_lf(2, 2, 12, 12, 3), "sharp")
    cfg = SynthConfig(samples=4, seed=3)

    out = synthesize_scene(sharp_dir, tmp_path / "blurred", cfg)

    assert load_light_field(out).shape == (2, 2, 12, 12, 3)
    assert load_trajectory(out / TRAJECTORY_FILE).T == 4


@pytest.mark.asyncio
async def test_synthesize_scenes_does_not_depend_on_jobs(tmp_path, random_lf, write_lf):
    """Scene i uses seed + i whatever the number of workers."""
    for name in ("a", "b", "c"):
        write_lf(random_lf(2, 2, 10, 10, 3), f"sharp/{name}")
    cfg = SynthConfig(samples=3, seed=9, dof=6)

    serial = await synthesize_scenes(tmp_path / "sharp", tmp_path / "serial", cfg, jobs=1)
    parallel = await synthesize_scenes(tmp_path / "sharp", tmp_path / "parallel", cfg, jobs=3)

    assert [p.name for p in serial] == ["a", "b", "c"]
    for s, p in zip(serial, parallel):
        np.testing.assert_array_equal(load_light_field(s).data, load_light_field(p).data)
        assert (s / TRAJECTORY_FILE).read_text() == (p / TRAJECTORY_FILE).read_text()
    assert load_trajectory(serial[1] / TRAJECTORY_FILE).poses != load_trajectory(serial[0] / TRAJECTORY_FILE).poses
