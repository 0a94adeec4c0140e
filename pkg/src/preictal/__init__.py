"""Pre-ictal gamma-oscillation extraction and seizure build-up mapping.

Two routes recover oscillations from spiky multichannel recordings:
stationary-wavelet masking (swt) and parametric spike subtraction
(despike). tfmap/stmap visualize the results; evaluate compares the
routes on synthesized recordings with known ground truth.
"""
from .config import RunConfig, load_config, make_config
from .despike import (DespikeConfig, DespikeResult, SpikeCandidate,
                      SpikeModelParams, despike_channel, despike_recording,
                      detect_spikes, evaluate_spike_model, fit_spike_model)
from .errors import (E_CONFIG, E_FORMAT, E_INVALID, E_IO, E_USAGE,
                     PipelineError)
from .evaluate import (ComparisonReport, MethodReport, compare_methods,
                       oscillation_recovery_score, residual_spike_energy,
                       run_comparison, summarize)
from .io import read_recording, write_recording
from .signals import (BurstWindow, GroundTruth, Recording, SimulationSpec,
                      add_white_noise, bandpass_filter, synthesize_recording)
from .stmap import (BuildupReport, ChannelBuildup, SpatioTemporalMap,
                    band_energy_map, detect_buildup, normalize_by_low_band,
                    smooth_map)
from .swt import (KEEP_ALL, ZERO_ALL, AUTO, MaskRule, MaskSpec, WaveletPlanes,
                  apply_mask, extract_oscillations_swt, group_delay_samples,
                  iswt_reconstruct, swt_decompose, wavelet_filters)
from .tfmap import (MorletSpec, TimeFrequencyMap, morlet_kernel,
                    spike_signature_score, wavelet_transform)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # signals
    "BurstWindow", "GroundTruth", "Recording", "SimulationSpec",
    "add_white_noise", "bandpass_filter", "synthesize_recording",
    # swt
    "KEEP_ALL", "ZERO_ALL", "AUTO", "MaskRule", "MaskSpec", "WaveletPlanes",
    "apply_mask", "extract_oscillations_swt", "group_delay_samples",
    "iswt_reconstruct", "swt_decompose", "wavelet_filters",
    # despike
    "DespikeConfig", "DespikeResult", "SpikeCandidate", "SpikeModelParams",
    "despike_channel", "despike_recording", "detect_spikes",
    "evaluate_spike_model", "fit_spike_model",
    # tfmap
    "MorletSpec", "TimeFrequencyMap", "morlet_kernel",
    "spike_signature_score", "wavelet_transform",
    # stmap
    "BuildupReport", "ChannelBuildup", "SpatioTemporalMap",
    "band_energy_map", "detect_buildup", "normalize_by_low_band",
    "smooth_map",
    # evaluate
    "ComparisonReport", "MethodReport", "compare_methods",
    "oscillation_recovery_score", "residual_spike_energy", "run_comparison",
    "summarize",
    # io / config / errors
    "read_recording", "write_recording", "RunConfig", "load_config",
    "make_config", "E_CONFIG", "E_FORMAT", "E_INVALID", "E_IO", "E_USAGE",
    "PipelineError",
]
