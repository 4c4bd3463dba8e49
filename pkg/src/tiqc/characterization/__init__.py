"""Noise-model evaluation and parameter estimation."""

from .detection import (
    DetectionError,
    RegisterHistogram,
    classify_bright_number,
    detection_error,
    detection_sample,
    pmt_register_histogram,
    projection_noise,
    register_thresholds,
)
from .intensity import IntensityFit, intensity_fluctuation_analysis, synthetic_intensity_runs
from .spectrum import (
    IntegrationError,
    NoiseSpectrumModel,
    RamseyDataset,
    SpectrumFit,
    dfs_coherence,
    echo_contrast,
    fit_spectrum,
    ramsey_contrast,
    synthetic_ramsey,
)
from .thermometry import NbarFit, ThermalDistribution, fit_nbar, sideband_rabi, synthetic_sideband
