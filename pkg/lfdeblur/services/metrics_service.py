"""
Evaluation metrics over light fields: PSNR, SSIM, NCC and LMSE.

Every metric is computed per view on [0, 1] floating values and averaged over
the U·V views. SSIM and LMSE work on luminance; PSNR and NCC use every channel.
"""
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from skimage.color import rgb2gray
from skimage.metrics import structural_similarity

from lfdeblur.core.exceptions import LFDeblurError, MetricError, ShapeMismatchError
from lfdeblur.core.lightfield import Image, LightField
from lfdeblur.core.logger import get_logger
from lfdeblur.schemas import MetricReport, SceneMetrics, ViewMetrics
from lfdeblur.utils.image_utils import list_scene_dirs, load_light_field, save_light_field
from lfdeblur.utils.template_utils import get_template

logger = get_logger(__name__)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
LMSE_WINDOW = 20
LMSE_STRIDE = 10

ArrayLike = Union[LightField, Image, np.ndarray]


def _array(value: ArrayLike) -> np.ndarray:
    if isinstance(value, (LightField, Image)):
        return value.data
    return np.asarray(value, dtype=np.float64)


def _pair(pred: ArrayLike, gt: ArrayLike, what: str) -> Tuple[np.ndarray, np.ndarray]:
    p, g = _array(pred), _array(gt)
    if p.shape != g.shape:
        raise ShapeMismatchError(f"{what} operands", g.shape, p.shape)
    return p, g


def luminance(image: ArrayLike) -> np.ndarray:
    """(H, W) luminance of an (H, W), (H, W, 1) or (H, W, 3) image."""
    data = _array(image)
    if data.ndim == 2:
        return data
    if data.ndim == 3 and data.shape[-1] == 1:
        return data[..., 0]
    if data.ndim == 3 and data.shape[-1] == 3:
        return rgb2gray(data)
    raise MetricError(f"expected a grayscale or RGB image, got shape {data.shape}")


def psnr(pred: ArrayLike, gt: ArrayLike) -> float:
    """10·log10(1 / MSE) over all samples; inf when the inputs are identical."""
    p, g = _pair(pred, gt, "PSNR")
    mse = float(np.mean((p - g) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def ssim(pred: ArrayLike, gt: ArrayLike) -> float:
    """
    Mean local SSIM on luminance.

    11×11 Gaussian window (σ = 1.5), K1 = 0.01, K2 = 0.03, data range 1.0.

    Raises:
        MetricError: If the image is smaller than the window
    """
    p, g = _pair(pred, gt, "SSIM")
    p, g = luminance(p), luminance(g)
    if min(g.shape) < SSIM_WINDOW:
        raise MetricError(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {g.shape}")
    return float(
        structural_similarity(
            p,
            g,
            data_range=1.0,
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            use_sample_covariance=False,
            K1=0.01,
            K2=0.03,
        )
    )


def ncc(pred: ArrayLike, gt: ArrayLike) -> float:
    """
    Zero-mean normalized cross-correlation over all samples.

    Returns NaN (with a warning) when either input is constant.
    """
    p, g = _pair(pred, gt, "NCC")
    p = p.ravel() - p.mean()
    g = g.ravel() - g.mean()
    denominator = math.sqrt(float(np.dot(p, p)) * float(np.dot(g, g)))
    if denominator == 0.0:
        logger.warning("NCC is undefined for a constant input; reporting NaN")
        return math.nan
    return float(np.clip(np.dot(p, g) / denominator, -1.0, 1.0))


def lmse(
    pred: ArrayLike,
    gt: ArrayLike,
    window: int = LMSE_WINDOW,
    stride: int = LMSE_STRIDE,
    normalization: str = "variance",
) -> float:
    """
    Local mean-squared error with a per-window scale fit, on luminance.

    Each window scores ‖gt - α·pred‖² with α = Σ gt·pred / Σ pred². With
    normalization="variance" the mean window MSE is divided by the variance of
    gt; with "energy" the summed window errors are divided by the summed window
    energy of gt. Only a window where pred is exactly zero falls back to α = 0,
    so the score does not change when pred is scaled by any positive factor.

    Raises:
        MetricError: If the image is smaller than one window
    """
    if normalization not in ("variance", "energy"):
        raise ValueError(f"unknown LMSE normalization '{normalization}'")
    p, g = _pair(pred, gt, "LMSE")
    p, g = luminance(p), luminance(g)
    H, W = g.shape
    if H < window or W < window:
        raise MetricError(f"LMSE needs at least {window}x{window} pixels, got {g.shape}")

    sse, energy = [], []
    for i in range(0, H - window + 1, stride):
        for j in range(0, W - window + 1, stride):
            gw = g[i:i + window, j:j + window]
            pw = p[i:i + window, j:j + window]
            pp = float(np.sum(pw * pw))
            alpha = float(np.sum(gw * pw)) / pp if pp > 0.0 else 0.0
            sse.append(float(np.sum((gw - alpha * pw) ** 2)))
            energy.append(float(np.sum(gw * gw)))

    if normalization == "energy":
        total = sum(energy)
        if total == 0.0:
            logger.warning("LMSE is undefined for an all-zero reference; reporting NaN")
            return math.nan
        return sum(sse) / total

    variance = float(np.var(g))
    if variance == 0.0:
        logger.warning("LMSE is undefined for a constant reference; reporting NaN")
        return math.nan
    return float(np.mean(sse)) / (window * window) / variance


def evaluate_views(pred: LightField, gt: LightField, name: str = "scene") -> SceneMetrics:
    """
    All four metrics per view, averaged over the views.

    Raises:
        MetricError: Carrying the scene name and the failing view
    """
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"scene '{name}' prediction vs ground truth", gt.shape, pred.shape)
    per_view = []
    for u in range(gt.U):
        for v in range(gt.V):
            p, g = pred.data[u, v], gt.data[u, v]
            try:
                per_view.append(ViewMetrics(u=u, v=v, psnr=psnr(p, g), ssim=ssim(p, g), ncc=ncc(p, g), lmse=lmse(p, g)))
            except MetricError as e:
                raise MetricError(e.detail, scene=name, view=(u, v)) from e

    return SceneMetrics(
        name=name,
        psnr=float(np.mean([m.psnr for m in per_view])),
        ssim=float(np.mean([m.ssim for m in per_view])),
        ncc=float(np.mean([m.ncc for m in per_view])),
        lmse=float(np.mean([m.lmse for m in per_view])),
        per_view=per_view,
    )


def mean_row(rows: Sequence[SceneMetrics]) -> Optional[SceneMetrics]:
    """Arithmetic mean of scene rows, or None without rows."""
    if not rows:
        return None
    return SceneMetrics(
        name="MEAN",
        psnr=float(np.mean([r.psnr for r in rows])),
        ssim=float(np.mean([r.ssim for r in rows])),
        ncc=float(np.mean([r.ncc for r in rows])),
        lmse=float(np.mean([r.lmse for r in rows])),
    )


def evaluate(pred: LightField, gt: LightField, name: str = "scene") -> MetricReport:
    """Single-scene report; its mean row equals the scene row."""
    row = evaluate_views(pred, gt, name)
    return MetricReport(per_scene=[row], mean=mean_row([row]))


def evaluate_scenes(scenes: Sequence[Tuple[str, LightField, LightField]]) -> MetricReport:
    """
    Evaluate (name, pred, gt) triples; failing scenes are recorded, not raised.
    """
    rows: List[SceneMetrics] = []
    failures: List[str] = []
    for name, pred, gt in scenes:
        try:
            rows.append(evaluate_views(pred, gt, name))
        except LFDeblurError as e:
            logger.error(f"Evaluation failed for scene '{name}': {e.message}")
            failures.append(f"{name}: {e.message}")
    return MetricReport(per_scene=rows, mean=mean_row(rows), failures=failures)


def evaluate_directories(
    pred_path: Union[str, Path],
    gt_path: Union[str, Path],
    error_maps: Optional[Union[str, Path]] = None,
) -> MetricReport:
    """
    Evaluate a predicted view directory (or root of scenes) against ground truth.

    Scenes are matched by directory name; missing or unreadable scenes become
    failures. With error_maps set, per-view |pred - gt| PNGs are written to
    error_maps/<scene>.
    """
    pred_path, gt_path = Path(pred_path), Path(gt_path)
    gt_scenes = list_scene_dirs(gt_path)
    if len(gt_scenes) == 1 and gt_scenes[0] == gt_path:
        pairs = [(gt_path.name, pred_path, gt_path)]
    else:
        pairs = [(scene.name, pred_path / scene.name, scene) for scene in gt_scenes]

    rows: List[SceneMetrics] = []
    failures: List[str] = []
    for name, pred_dir, gt_dir in pairs:
        try:
            pred, gt = load_light_field(pred_dir), load_light_field(gt_dir)
            report = evaluate_scenes([(name, pred, gt)])
            if error_maps is not None and not report.failures:
                export_error_maps(pred, gt, Path(error_maps) / name)
        except (LFDeblurError, OSError) as e:
            message = getattr(e, "message", str(e))
            logger.error(f"Cannot load scene '{name}': {message}")
            failures.append(f"{name}: {message}")
            continue
        rows.extend(report.per_scene)
        failures.extend(report.failures)
    return MetricReport(per_scene=rows, mean=mean_row(rows), failures=failures)


def render_report(report: MetricReport) -> str:
    """Header line, one `name psnr ssim ncc lmse` line per scene, then the MEAN line."""
    return get_template("metric_report.txt.j2").render(report=report)


def write_report(report: MetricReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(report))
    logger.info(f"Metric report written to {path}")
    return path


def export_error_maps(pred: LightField, gt: LightField, out_dir: Union[str, Path]) -> Path:
    """Write per-view |pred - gt| as PNG views."""
    if pred.shape != gt.shape:
        raise ShapeMismatchError("error map operands", gt.shape, pred.shape)
    return save_light_field(LightField(np.abs(pred.data - gt.data)), out_dir)
