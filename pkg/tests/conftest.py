import numpy as np
import pytest

from nrmvc.networks import ModelBundle
from nrmvc.trainer import TrainConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def toy_bundle(num_views=2, input_dim=8, num_clusters=3, seed=5, hidden=16, latent=8):
    return ModelBundle.create(
        [input_dim] * num_views,
        num_clusters,
        seed=seed,
        hidden_dim=hidden,
        latent_dim=latent,
    )


def toy_config(**kwargs):
    defaults = dict(
        pretrain_epochs=2,
        train_epochs=2,
        batch_size=16,
        hidden_dim=16,
        latent_dim=8,
        seed=3,
    )
    defaults.update(kwargs)
    return TrainConfig(**defaults)


def unit_rows(rng, n, d):
    z = rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)
