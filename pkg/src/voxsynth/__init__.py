"""Seeded domain-randomization engine for neuroimage training data.

Synthesizes (image, label) training pairs from anatomical label maps by
sampling a randomized generative chain: affine and diffeomorphic
deformation, per-label intensity lookup, bias field, blur, noise, gamma,
resolution degradation, and field-of-view cropping. Every sample is a
pure function of (label map, config, seed).
"""

from .backend import kernels
from .config import (SynthesisConfig, default_config, max_effect_config,
                     parse_config, serialize_config)
from .errors import (ConfigError, GenerationError, VolumeIOError,
                     VoxsynthError)
from .fields import (Kernel1D, LabelVolume, ScalarField, VectorField,
                     gaussian_kernel, minmax_normalize, resample_linear,
                     resample_nearest, separable_convolve)
from .io import VolumeHeader, export_slice, load_volume, save_volume
from .noise import (NoiseSpec, fractal_noise, perlin_noise, scalar_noise,
                    smoothed_noise, value_noise, vector_noise)
from .pipeline import (STAGES, SamplePair, generate, preview_batch,
                       qc_flags)
from .rng import RngStream
from .spatial import (AffineTransform, CropMask, DeformationField, compose,
                      integrate_svf, jacobian_determinant, sample_affine,
                      sample_crop_mask, sample_elastic, warp_image,
                      warp_labels)
from .stream import (StreamJob, StreamResult, consume_directory, load_pair,
                     run_stream, save_pair, stream_pairs)
from .synthesis import IntensityLUT, render_mean_image, sample_lut

__version__ = "0.1.0"

__all__ = [
    "AffineTransform", "ConfigError", "CropMask", "DeformationField",
    "GenerationError", "IntensityLUT", "Kernel1D", "LabelVolume",
    "NoiseSpec", "RngStream", "STAGES", "SamplePair", "ScalarField",
    "StreamJob", "StreamResult", "SynthesisConfig", "VectorField",
    "VolumeHeader", "VolumeIOError", "VoxsynthError", "compose",
    "consume_directory", "default_config", "export_slice", "fractal_noise",
    "gaussian_kernel", "generate", "integrate_svf", "jacobian_determinant",
    "kernels", "load_pair", "load_volume", "max_effect_config",
    "minmax_normalize", "parse_config", "perlin_noise", "preview_batch",
    "qc_flags", "render_mean_image", "resample_linear", "resample_nearest",
    "run_stream", "sample_affine", "sample_crop_mask", "sample_elastic",
    "sample_lut", "save_pair", "save_volume", "scalar_noise",
    "separable_convolve", "serialize_config", "smoothed_noise",
    "stream_pairs", "value_noise", "vector_noise", "warp_image",
    "warp_labels",
]
