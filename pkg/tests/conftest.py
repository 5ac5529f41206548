"""Shared builders for the test suite."""

import numpy as np
import pytest

from cyclevc.features import N_DIMS, NormStats, UtteranceFeatures
from cyclevc.model import CycleVCModel, ModelArch


def make_features(utt_id, n_frames, rng=None, voiced=True):
    """Random but contract-valid features for one utterance."""
    rng = rng or np.random.default_rng(hash(utt_id) % (2**32))
    mcep = rng.normal(0.0, 0.5, size=(n_frames, 45))
    lf0 = rng.uniform(np.log(100.0), np.log(250.0), size=n_frames)
    if voiced:
        uv = (rng.uniform(size=n_frames) < 0.7).astype(np.float32)
    else:
        uv = np.zeros(n_frames, dtype=np.float32)
    cap = rng.uniform(-60.0, 0.0, size=(n_frames, 3))
    return UtteranceFeatures(utt_id=utt_id, mcep=mcep, lf0=lf0, uv=uv, cap=cap)


def unit_norms():
    """Normalization stats that make normalize/denormalize the identity."""
    zeros = np.zeros(N_DIMS)
    ones = np.ones(N_DIMS)
    return (
        NormStats(mean=zeros.copy(), std=ones.copy(), domain_tag="source"),
        NormStats(mean=zeros.copy(), std=ones.copy(), domain_tag="target"),
    )


def tiny_arch(**overrides):
    """Small architecture for fast structural and gradient tests."""
    kwargs = dict(
        in_dim=50,
        out_dim=45,
        in_conv_layers=1,
        conv_channels=6,
        kernel=2,
        gru_hidden=5,
        out_conv_layers=1,
    )
    kwargs.update(overrides)
    return ModelArch(**kwargs)


def make_model(arch=None, seed=0, dtype=np.float32):
    norm_src, norm_tgt = unit_norms()
    return CycleVCModel.init(
        arch or tiny_arch(), norm_src, norm_tgt, seed=seed, dtype=dtype
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
