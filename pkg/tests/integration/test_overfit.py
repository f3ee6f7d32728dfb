import numpy as np
import pytest
from scipy import ndimage

from lfdeblur.core.config import ModelConfig, TrainConfig
from lfdeblur.core.lightfield import LightField
from lfdeblur.services.blur_service import sample_trajectory, synthesize_blur
from lfdeblur.services.checkpoint_service import load_model
from lfdeblur.services.inference_service import deblur_light_field
from lfdeblur.services.metrics_service import psnr
from lfdeblur.services.training_service import TrainingPair, train_loop
from tests.conftest import make_shifted_copies

STEPS = 2000


@pytest.mark.slow
def test_network_overfits_one_blurred_scene(tmp_path):
    """A small network trained on a single scene recovers at least 6 dB over the blurred input."""
    rng = np.random.default_rng(11)
    texture = ndimage.gaussian_filter(rng.random((64, 64, 3)), sigma=(1.5, 1.5, 0))
    texture = (texture - texture.min()) / (texture.max() - texture.min())
    sharp = LightField(make_shifted_copies(texture, 5, 5, 1))
    traj = sample_trajectory(seed=5, dof=3, trans_mag=0.05, T=20)
    blurred = synthesize_blur(sharp, traj, reference_disparity=100.0)

    model_cfg = ModelConfig(channels=16, num_blocks=4, residual=True)
    train_cfg = TrainConfig(
        batch_size=1,
        patch_w=64,
        patch_h=64,
        augment=False,
        max_steps=STEPS,
        total_epochs=STEPS,
        warm_epochs=STEPS,
        checkpoint_every=STEPS,
        log_every=100,
    )

    result = train_loop(model_cfg, train_cfg, [TrainingPair("scene", blurred, sharp)], tmp_path / "run")
    net, _ = load_model(result.last_checkpoint, model_cfg)
    restored = deblur_light_field(blurred, net)

    before = psnr(blurred.data, sharp.data)
    after = psnr(restored.data, sharp.data)
    assert after >= before + 6.0
