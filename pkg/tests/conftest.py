import dataclasses

import numpy as np
import pytest

from voxsynth.config import default_config
from voxsynth.fields import LabelVolume


def box_phantom(extent=32, ndim=3, voxel_size=4.0, labels=2):
    """Nested-box label volume with the requested label count."""
    shape = (extent,) * ndim
    data = np.zeros(shape, dtype=np.uint32)
    for j in range(1, labels):
        lo = extent * j // (2 * labels)
        hi = extent - lo
        data[tuple(slice(lo, hi) for _ in range(ndim))] = j
    return LabelVolume(data, labels, (voxel_size,) * ndim)


def identity_config(ndim=3, voxel_size=4.0, **overrides):
    """Config in which every stage draws its identity parameter."""
    base = dict(
        translation_mm=(0.0, 0.0), rotation_deg=(0.0, 0.0),
        scaling_pct=(100.0, 100.0), shear_pct=(100.0, 100.0),
        warp_strength_mm=(0.0, 0.0), crop_proportion_pct=(0.0, 0.0),
        bias_drop_pct=(0.0, 0.0), blur_sd_mm=(0.0, 0.0),
        noise_sd_pct=(0.0, 0.0), gamma=(1.0, 1.0),
        downsample_factor=(1.0, 1.0), clear_slices=(0, 0),
        ndim=ndim, voxel_size_mm=(voxel_size,) * ndim,
    )
    base.update(overrides)
    return dataclasses.replace(default_config(), **base)


@pytest.fixture
def phantom():
    return box_phantom()


@pytest.fixture
def pilot_config():
    """Default ranges at the 4 mm pilot resolution used throughout."""
    return dataclasses.replace(default_config(),
                               voxel_size_mm=(4.0, 4.0, 4.0))
