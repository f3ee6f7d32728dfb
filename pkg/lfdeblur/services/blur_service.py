"""
Blurred light-field synthesis.

Each view of a sharp light field is warped by every camera pose of a sampled
trajectory and the frames are averaged (midpoint rule on the exposure
integral). Scene depth is a single reference disparity plane.
"""
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import ndimage

from lfdeblur.core.config import SynthConfig
from lfdeblur.core.exceptions import TrajectoryError, WarpError
from lfdeblur.core.lightfield import Image, LightField, sai
from lfdeblur.core.logger import get_logger
from lfdeblur.schemas import CameraPose, CameraTrajectory
from lfdeblur.utils.concurrency import gather_bounded
from lfdeblur.utils.image_utils import list_scene_dirs, load_light_field, save_light_field

logger = get_logger(__name__)

TRAJECTORY_FILE = "trajectory.txt"


def sample_trajectory(
    seed: int,
    dof: int = 3,
    trans_mag: float = 0.03,
    rot_mag: float = 0.005,
    T: int = 20,
    baseline: float = 0.01,
) -> CameraTrajectory:
    """
    Sample a linear camera path from the identity pose to a random endpoint.

    Translation components of the endpoint are uniform in [-trans_mag, trans_mag];
    for 6-DOF, rotation components are uniform in [-rot_mag, rot_mag]. Translations
    are drawn first, so 3-DOF and 6-DOF paths with the same seed share them.

    Args:
        seed: RNG seed; equal seeds give bit-identical trajectories
        dof: 3 (translation only) or 6 (translation and rotation)
        trans_mag: Translation magnitude bound
        rot_mag: Rotation magnitude bound in radians
        T: Number of pose samples over the exposure
        baseline: Inter-view spacing carried by the trajectory

    Returns:
        CameraTrajectory with T poses

    Raises:
        TrajectoryError: If T < 1, a magnitude is negative or dof is not 3/6
    """
    if T < 1:
        raise TrajectoryError(f"need at least one pose sample, got T={T}")
    if trans_mag < 0 or rot_mag < 0 or baseline < 0:
        raise TrajectoryError(
            f"magnitudes must be non-negative (trans_mag={trans_mag}, rot_mag={rot_mag}, baseline={baseline})"
        )
    if dof not in (3, 6):
        raise TrajectoryError(f"dof must be 3 or 6, got {dof}")

    rng = np.random.default_rng(seed)
    end_translation = rng.uniform(-trans_mag, trans_mag, size=3)
    if dof == 6:
        end_rotation = rng.uniform(-rot_mag, rot_mag, size=3)
    else:
        end_rotation = np.zeros(3)

    fractions = np.linspace(0.0, 1.0, T) if T > 1 else np.zeros(1)
    poses = [
        CameraPose(
            tx=float(f * end_translation[0]),
            ty=float(f * end_translation[1]),
            tz=float(f * end_translation[2]),
            rx=float(f * end_rotation[0]),
            ry=float(f * end_rotation[1]),
            rz=float(f * end_rotation[2]),
        )
        for f in fractions
    ]
    return CameraTrajectory(poses=poses, dof=dof, baseline=baseline)


def view_offset(u: int, v: int, U: int, V: int) -> Tuple[float, float]:
    """Angular offset (du, dv) of view (u, v) from the central view."""
    return (u - (U - 1) / 2.0, v - (V - 1) / 2.0)


def pose_homography(pose: CameraPose, reference_disparity: float, focal: float) -> np.ndarray:
    """
    3×3 homography of a pose in centred pixel coordinates (x along axis 0, y along axis 1).

    Composition: small-angle rotation, then isotropic scale (1 + tz), then the
    in-plane shift (tx, ty) * reference_disparity.
    """
    scale = 1.0 + pose.tz
    if scale <= 0:
        raise WarpError(f"degenerate scale 1 + tz = {scale}")
    rx, ry, rz = pose.rotation
    rotation = np.array([
        [1.0, -rz, focal * ry],
        [rz, 1.0, -focal * rx],
        [-ry / focal, rx / focal, 1.0],
    ])
    scaling = np.diag([scale, scale, 1.0])
    shift = np.array([
        [1.0, 0.0, pose.tx * reference_disparity],
        [0.0, 1.0, pose.ty * reference_disparity],
        [0.0, 0.0, 1.0],
    ])
    return shift @ scaling @ rotation


def warp_view(
    image: Image,
    pose: CameraPose,
    view_offset: Tuple[float, float] = (0.0, 0.0),
    baseline: float = 0.0,
    reference_disparity: float = 1.0,
    focal_ratio: float = 1.0,
) -> Image:
    """
    Resample one view as seen at a camera pose.

    The pose homography acts about the view's own optical centre, which sits
    (dv, du) * baseline * reference_disparity pixels from the image centre along
    (x, y). Sampling is bilinear with replicate boundary.

    Args:
        image: View of shape (X, Y, C)
        pose: Camera pose
        view_offset: (du, dv) angular offset of the view from the central view
        baseline: Inter-view spacing
        reference_disparity: Pixels of image motion per unit of translation
        focal_ratio: Focal length in units of the larger image side

    Returns:
        Warped image with the same shape

    Raises:
        WarpError: If 1 + tz <= 0
    """
    if 1.0 + pose.tz <= 0:
        raise WarpError(f"degenerate scale 1 + tz = {1.0 + pose.tz}")
    if pose.is_identity():
        return Image(np.array(image.data))

    X, Y, C = image.shape
    grid_x, grid_y = np.meshgrid(np.arange(X, dtype=np.float64), np.arange(Y, dtype=np.float64), indexing="ij")

    if pose.tz == 0.0 and pose.rotation == (0.0, 0.0, 0.0):
        # translations commute with the view conjugation
        src_x = grid_x - pose.tx * reference_disparity
        src_y = grid_y - pose.ty * reference_disparity
    else:
        focal = focal_ratio * max(X, Y)
        du, dv = view_offset
        ox, oy = dv * baseline * reference_disparity, du * baseline * reference_disparity
        to_view = np.array([[1.0, 0.0, ox], [0.0, 1.0, oy], [0.0, 0.0, 1.0]])
        from_view = np.array([[1.0, 0.0, -ox], [0.0, 1.0, -oy], [0.0, 0.0, 1.0]])
        homography = from_view @ pose_homography(pose, reference_disparity, focal) @ to_view
        inverse = np.linalg.inv(homography)

        cx, cy = (X - 1) / 2.0, (Y - 1) / 2.0
        points = np.stack([grid_x.ravel() - cx, grid_y.ravel() - cy, np.ones(X * Y)])
        mapped = inverse @ points
        src_x = (mapped[0] / mapped[2] + cx).reshape(X, Y)
        src_y = (mapped[1] / mapped[2] + cy).reshape(X, Y)

    out = np.empty_like(image.data)
    for c in range(C):
        out[..., c] = ndimage.map_coordinates(image.data[..., c], [src_x, src_y], order=1, mode="nearest")
    return Image(out)


def synthesize_blur(
    lf: LightField,
    traj: CameraTrajectory,
    reference_disparity: float,
    focal_ratio: float = 1.0,
) -> LightField:
    """
    Integrate every view over the camera trajectory.

    Args:
        lf: Sharp image-valued light field
        traj: Camera trajectory (its baseline offsets each view's centre)
        reference_disparity: Disparity of the reference depth plane
        focal_ratio: Focal length in units of the larger image side

    Returns:
        Blurred light field, clamped to [0, 1]

    Raises:
        TrajectoryError: If the trajectory has no poses
    """
    if traj.T < 1:
        raise TrajectoryError("cannot integrate over an empty trajectory")
    if all(pose.is_identity() for pose in traj.poses):
        logger.info("Trajectory has no motion; blurred light field equals the input")
        return LightField(lf.data)

    out = np.zeros_like(lf.data)
    for u in range(lf.U):
        for v in range(lf.V):
            view = sai(lf, u, v)
            offset = view_offset(u, v, lf.U, lf.V)
            acc = np.zeros_like(view.data)
            for pose in traj.poses:
                acc += warp_view(view, pose, offset, traj.baseline, reference_disparity, focal_ratio).data
            out[u, v] = acc / traj.T
    return LightField(np.clip(out, 0.0, 1.0))


def blur_magnitude_per_view(blurred: LightField, sharp: LightField) -> np.ndarray:
    """Mean |blurred - sharp| of each view, shape (U, V)."""
    return np.abs(blurred.data - sharp.data).mean(axis=(2, 3, 4))


def save_trajectory(traj: CameraTrajectory, path: Union[str, Path]) -> Path:
    """Write the trajectory sidecar: a '#' header, then one six-number line per pose."""
    path = Path(path)
    rows = np.array([pose.as_tuple() for pose in traj.poses], dtype=np.float64).reshape(-1, 6)
    header = f"dof={traj.dof} baseline={traj.baseline!r} samples={traj.T}"
    np.savetxt(path, rows, fmt="%.17g", header=header)
    return path


def load_trajectory(path: Union[str, Path]) -> CameraTrajectory:
    path = Path(path)
    with open(path, "r") as f:
        header = f.readline().lstrip("#").split()
    meta = dict(item.split("=", 1) for item in header)
    rows = np.loadtxt(path, ndmin=2)
    poses = [CameraPose(tx=r[0], ty=r[1], tz=r[2], rx=r[3], ry=r[4], rz=r[5]) for r in rows]
    return CameraTrajectory(poses=poses, dof=int(meta["dof"]), baseline=float(meta["baseline"]))


def synthesize_scene(
    in_dir: Union[str, Path],
    out_dir: Union[str, Path],
    cfg: SynthConfig,
    seed: Optional[int] = None,
) -> Path:
    """
    Blur one scene directory and write the blurred views plus the trajectory sidecar.

    Args:
        in_dir: Sharp view directory
        out_dir: Output view directory
        cfg: Synthesis parameters
        seed: Trajectory seed (defaults to cfg.seed)

    Returns:
        The output directory
    """
    seed = cfg.seed if seed is None else seed
    logger.info(f"Synthesizing {cfg.dof}-DOF blur for {in_dir} (seed={seed})")
    sharp = load_light_field(in_dir)
    traj = sample_trajectory(seed, cfg.dof, cfg.trans_mag, cfg.rot_mag, cfg.samples, cfg.baseline)
    blurred = synthesize_blur(sharp, traj, cfg.disparity, cfg.focal_ratio)
    out_dir = save_light_field(blurred, out_dir)
    save_trajectory(traj, Path(out_dir) / TRAJECTORY_FILE)
    magnitude = blur_magnitude_per_view(blurred, sharp)
    logger.info(
        f"Blurred {in_dir} -> {out_dir}: mean |blur - sharp| per view in "
        f"[{magnitude.min():.4f}, {magnitude.max():.4f}]"
    )
    return Path(out_dir)


async def synthesize_scenes(
    in_root: Union[str, Path],
    out_root: Union[str, Path],
    cfg: SynthConfig,
    jobs: int = 1,
) -> List[Path]:
    """
    Blur one scene or a directory of scenes.

    Scene i (in sorted order) uses seed cfg.seed + i, so the output does not
    depend on the number of jobs.
    """
    in_root = Path(in_root)
    scenes = list_scene_dirs(in_root)
    if len(scenes) == 1 and scenes[0] == in_root:
        targets = [(in_root, Path(out_root), cfg.seed)]
    else:
        targets = [(scene, Path(out_root) / scene.name, cfg.seed + i) for i, scene in enumerate(scenes)]

    return await gather_bounded(
        lambda target: synthesize_scene(target[0], target[1], cfg, target[2]),
        targets,
        jobs,
    )
