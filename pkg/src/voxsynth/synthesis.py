"""Per-label intensity lookup: the noise-free "mean" image.

Each label gets an i.i.d. uniform intensity in [0, 1]; rendering treats
the label map as an index map into the lookup table, so every label
region is exactly constant. Constraints (forced values, tied groups)
exist but are off by default: unconstrained sampling generalizes best.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .fields import LabelVolume, ScalarField
from .rng import RngStream


@dataclass(frozen=True)
class IntensityLUT:
    """One intensity in [0, 1] per zero-based label."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or len(v) < 2:
            raise ValueError("LUT must be 1-D with at least 2 entries")
        if v.min() < 0 or v.max() > 1:
            raise ValueError("LUT entries must lie in [0, 1]")

    @property
    def label_count(self):
        return len(self.values)


def sample_lut(label_count: int, rng: RngStream,
               forced: dict | None = None,
               ties: list | None = None,
               bounds: tuple = (0.0, 1.0)) -> IntensityLUT:
    """Draw i.i.d. uniform intensities, then apply constraints.

    forced maps label -> fixed intensity; ties lists label groups that
    share the first member's draw (e.g. bilateral structure pairs).
    """
    if label_count < 2:
        raise ConfigError("need at least 2 labels")
    gen = rng.generator()
    values = gen.uniform(bounds[0], bounds[1], label_count)
    for label, value in (forced or {}).items():
        if not 0 <= int(label) < label_count:
            raise ConfigError(f"forced constraint names label {label}, "
                              f"but J = {label_count}")
        values[int(label)] = float(value)
    for group in ties or []:
        if any(not 0 <= int(g) < label_count for g in group):
            raise ConfigError(f"tie group {group} names a label >= "
                              f"{label_count}")
        for member in group[1:]:
            values[int(member)] = values[int(group[0])]
    return IntensityLUT(values)


def render_mean_image(s_x: LabelVolume, lut: IntensityLUT) -> ScalarField:
    """x(M) = lut[s_x(M)]: constant intensity within each label region."""
    if int(s_x.labels.max()) >= lut.label_count:
        raise ConfigError(
            f"label {int(s_x.labels.max())} out of LUT range "
            f"{lut.label_count}")
    return ScalarField(lut.values[s_x.labels], s_x.voxel_size)
