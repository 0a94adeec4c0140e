"""Quantitative comparison of the two oscillation-recovery routes.

Both filters run on the same synthesized recording; residual spike
energy and burst-window correlation are measured against the known
components, and the build-up detector runs on each method's full-band
output (band selection happens inside the spatio-temporal maps, and the
8-30 Hz normalization band needs the full-band content to divide by).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ._parallel import map_channels
from .config import RunConfig
from .despike import despike_recording
from .signals import GroundTruth, Recording, SimulationSpec, \
    bandpass_filter, synthesize_recording
from .stmap import BuildupReport, band_energy_map, detect_buildup, \
    normalize_by_low_band, smooth_map
from .swt import apply_mask, iswt_reconstruct, swt_decompose

__all__ = [
    "MethodReport", "ComparisonReport", "residual_spike_energy",
    "oscillation_recovery_score", "compare_methods", "run_comparison",
    "summarize",
]

_RESIDUAL_HALF_WINDOW_S = 0.05


@dataclass(frozen=True)
class MethodReport:
    """Metrics for one recovery route on one simulated recording."""
    spike_residual_fraction: Optional[float]
    oscillation_recovery_corr: Optional[float]
    buildup_onset_error_s: Optional[float]
    buildup_channel_correct: bool
    runtime_s: float

    def as_dict(self) -> dict:
        return {
            "spike_residual_fraction": self.spike_residual_fraction,
            "oscillation_recovery_corr": self.oscillation_recovery_corr,
            "buildup_onset_error_s": self.buildup_onset_error_s,
            "buildup_channel_correct": self.buildup_channel_correct,
            "runtime_s": self.runtime_s,
        }


@dataclass(frozen=True)
class ComparisonReport:
    """SWT vs despiking vs no filtering on one seed."""
    seed: int
    swt: MethodReport
    despike: MethodReport
    none: MethodReport

    def as_dict(self) -> dict:
        return {"seed": self.seed, "swt": self.swt.as_dict(),
                "despike": self.despike.as_dict(),
                "none": self.none.as_dict()}


def _spike_window_masks(truth: GroundTruth, n_samples: int,
                        sample_rate_hz: float) -> list[np.ndarray]:
    masks = []
    for times in truth.spike_times:
        mask = np.zeros(n_samples, dtype=bool)
        for t in times:
            lo = max(0, int(round((t - _RESIDUAL_HALF_WINDOW_S) * sample_rate_hz)))
            hi = min(n_samples,
                     int(round((t + _RESIDUAL_HALF_WINDOW_S) * sample_rate_hz)) + 1)
            mask[lo:hi] = True
        masks.append(mask)
    return masks


def residual_spike_energy(filtered: Recording,
                          truth: GroundTruth) -> Optional[float]:
    """Energy left in +/-50 ms spike windows, as a fraction of the input's.

    1.0 means the filter removed nothing there; 0 means the windows came
    back silent. None when the ground truth contains no spikes.
    """
    original = (truth.spike_component + truth.oscillation_component
                + truth.noise_component)
    if filtered.data.shape != original.shape:
        raise ValueError("filtered: shape must match the ground truth")
    if not any(len(times) for times in truth.spike_times):
        return None
    masks = _spike_window_masks(truth, filtered.n_samples,
                                filtered.sample_rate_hz)
    num = 0.0
    den = 0.0
    for c, mask in enumerate(masks):
        num += float(np.sum(filtered.data[c, mask] ** 2))
        den += float(np.sum(original[c, mask] ** 2))
    if den == 0.0:
        return None
    return num / den


def _burst_union(windows, n_samples: int, sample_rate_hz: float) -> np.ndarray:
    mask = np.zeros(n_samples, dtype=bool)
    for w in windows:
        lo = max(0, int(round(w.start_s * sample_rate_hz)))
        hi = min(n_samples, int(round(w.end_s * sample_rate_hz)) + 1)
        mask[lo:hi] = True
    return mask


def oscillation_recovery_score(filtered: Recording, truth: GroundTruth,
                               band: tuple[float, float]) -> Optional[float]:
    """Mean burst-window Pearson correlation with the true oscillations.

    Both sides are band-passed to `band` first; channels without bursts
    (or with degenerate variance in the windows) are skipped. None when
    no channel has bursts.
    """
    if filtered.data.shape != truth.oscillation_component.shape:
        raise ValueError("filtered: shape must match the ground truth")
    reference = Recording(sample_rate_hz=filtered.sample_rate_hz,
                          labels=filtered.labels,
                          data=truth.oscillation_component)
    filt = bandpass_filter(filtered, band[0], band[1])
    ref = bandpass_filter(reference, band[0], band[1])
    scores = []
    for c, windows in enumerate(truth.burst_windows):
        if not windows:
            continue
        mask = _burst_union(windows, filtered.n_samples,
                            filtered.sample_rate_hz)
        a = filt.data[c, mask]
        b = ref.data[c, mask]
        if a.size < 2 or a.std() == 0.0 or b.std() == 0.0:
            continue
        scores.append(float(np.corrcoef(a, b)[0, 1]))
    if not scores:
        return None
    return float(np.mean(scores))


def _swt_masked_fullband(rec: Recording, cfg: RunConfig) -> Recording:
    # full-band masked reconstruction; band selection happens downstream
    mask = cfg.mask_spec()

    def one(row: np.ndarray) -> np.ndarray:
        planes = swt_decompose(row, cfg.wavelet, cfg.levels,
                               sample_rate_hz=rec.sample_rate_hz)
        return iswt_reconstruct(apply_mask(planes, mask))

    rows = map_channels(one, list(rec.data))
    return Recording(sample_rate_hz=rec.sample_rate_hz, labels=rec.labels,
                     data=np.vstack(rows))


def _buildup_report(out: Recording, cfg: RunConfig) -> BuildupReport:
    gamma = band_energy_map(out, cfg.gamma_band, cfg.omega_st)
    low = band_energy_map(out, cfg.norm_band, cfg.omega_st)
    smoothed = smooth_map(normalize_by_low_band(gamma, low), cfg.smooth_ms)
    return detect_buildup(smoothed, cfg.k_sigma, cfg.min_duration_ms)


def _method_report(out: Recording, rec: Recording, truth: GroundTruth,
                   cfg: RunConfig, started: float) -> MethodReport:
    residual = residual_spike_energy(out, truth)
    corr = oscillation_recovery_score(out, truth, cfg.gamma_band)
    report = _buildup_report(out, cfg)
    seizure_label = rec.labels[truth.seizure_channel]
    top = report.ranked_channels[0]
    channel_correct = top.label == seizure_label and top.onset_s is not None
    onset_error = (abs(report.onset_s - truth.ictal_onset_s)
                   if report.onset_s is not None else None)
    return MethodReport(spike_residual_fraction=residual,
                        oscillation_recovery_corr=corr,
                        buildup_onset_error_s=onset_error,
                        buildup_channel_correct=channel_correct,
                        runtime_s=time.perf_counter() - started)


def compare_methods(spec: SimulationSpec,
                    cfg: Optional[RunConfig] = None) -> ComparisonReport:
    """Run both filters plus the unfiltered baseline on one seed.

    Each method's runtime_s covers its filtering and its evaluation
    (metrics plus the build-up pipeline), not the shared synthesis.
    """
    cfg = cfg or RunConfig()
    rec, truth = synthesize_recording(spec)

    started = time.perf_counter()
    swt_out = _swt_masked_fullband(rec, cfg)
    swt_report = _method_report(swt_out, rec, truth, cfg, started)

    started = time.perf_counter()
    despiked = despike_recording(rec, cfg.despike_config()).despiked
    despike_report = _method_report(despiked, rec, truth, cfg, started)

    started = time.perf_counter()
    none_report = _method_report(rec, rec, truth, cfg, started)

    return ComparisonReport(seed=spec.seed, swt=swt_report,
                            despike=despike_report, none=none_report)


def run_comparison(spec: SimulationSpec, n_seeds: int,
                   cfg: Optional[RunConfig] = None) -> list[ComparisonReport]:
    """compare_methods over seeds spec.seed .. spec.seed + n_seeds - 1."""
    if n_seeds < 1:
        raise ValueError("n_seeds: must be at least 1")
    return [compare_methods(replace(spec, seed=spec.seed + i), cfg)
            for i in range(n_seeds)]


def _mean(values: Sequence[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def summarize(reports: Sequence[ComparisonReport]) -> dict:
    """Aggregate counts and means across seeds for the comparison JSON."""
    n = len(reports)
    despike_better = sum(
        1 for r in reports
        if r.despike.spike_residual_fraction is not None
        and r.swt.spike_residual_fraction is not None
        and r.despike.spike_residual_fraction < r.swt.spike_residual_fraction)
    out = {"n_seeds": n, "despike_residual_below_swt": despike_better}
    for name in ("swt", "despike", "none"):
        methods = [getattr(r, name) for r in reports]
        out[name] = {
            "mean_spike_residual_fraction":
                _mean([m.spike_residual_fraction for m in methods]),
            "mean_oscillation_recovery_corr":
                _mean([m.oscillation_recovery_corr for m in methods]),
            "buildup_channel_correct":
                sum(1 for m in methods if m.buildup_channel_correct),
            "buildup_onset_within_0.5s":
                sum(1 for m in methods
                    if m.buildup_onset_error_s is not None
                    and m.buildup_onset_error_s <= 0.5),
            "total_runtime_s": float(sum(m.runtime_s for m in methods)),
        }
    return out
