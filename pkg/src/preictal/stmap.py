"""Channel x time band-energy maps and the seizure build-up detector.

The pipeline is: Morlet band energy per channel (gamma band), divided
pointwise by the same map for a low-frequency band (which cancels
per-channel gain and broadband artifacts), smoothed with a centered
moving average, then thresholded against each channel's own baseline
statistics to find where and when sustained gamma energy emerges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from ._parallel import map_channels
from ._util import boolean_runs, moving_average
from .signals import Recording
from .tfmap import MorletSpec, wavelet_transform

__all__ = [
    "SpatioTemporalMap", "ChannelBuildup", "BuildupReport",
    "band_energy_map", "normalize_by_low_band", "smooth_map",
    "detect_buildup",
]

_BASELINE_FRACTION = 0.2
_MIN_BASELINE_S = 1.0
_EPSILON_SCALE = 1e-12


@dataclass(frozen=True)
class SpatioTemporalMap:
    """One band-energy (or normalized-ratio) time course per channel."""
    labels: tuple[str, ...]
    times_s: np.ndarray
    values: np.ndarray
    gamma_band: tuple[float, float]
    norm_band: Optional[tuple[float, float]] = None
    smoothed_ms: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.times_s, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.labels), times.size):
            raise ValueError("values: shape must be n_channels x n_times")
        if not np.all(np.isfinite(values)):
            raise ValueError("values: must be finite")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "times_s", times)
        object.__setattr__(self, "values", values)

    @property
    def sample_rate_hz(self) -> float:
        if self.times_s.size < 2:
            raise ValueError("times_s: need at least two samples")
        return 1.0 / float(self.times_s[1] - self.times_s[0])

    @property
    def duration_s(self) -> float:
        return self.times_s.size / self.sample_rate_hz


class ChannelBuildup(NamedTuple):
    label: str
    peak_value: float
    onset_s: Optional[float]


@dataclass(frozen=True)
class BuildupReport:
    """Where and when sustained band energy first exceeds baseline.

    ranked_channels is sorted by descending peak value; onset_s is the
    earliest per-channel onset, or None when no channel triggers.
    threshold_used records the k_sigma the detector ran with.
    """
    onset_s: Optional[float]
    ranked_channels: tuple[ChannelBuildup, ...]
    threshold_used: float

    def __post_init__(self):
        peaks = [c.peak_value for c in self.ranked_channels]
        if any(b > a for a, b in zip(peaks, peaks[1:])):
            raise ValueError("ranked_channels: must be sorted by peak")


def _band_frequencies(band: tuple[float, float],
                      sample_rate_hz: float) -> tuple[float, ...]:
    # integer-Hz analysis grid inside the band edges
    low, high = float(band[0]), float(band[1])
    if not 0 < low < high:
        raise ValueError("band: need 0 < low < high")
    if high >= sample_rate_hz / 2.0:
        raise ValueError(
            f"band: {high:g} Hz is not below the Nyquist frequency "
            f"{sample_rate_hz / 2.0:g} Hz")
    freqs = np.arange(math.ceil(low), math.floor(high) + 1, dtype=float)
    if freqs.size == 0:
        raise ValueError("band: contains no integer analysis frequency")
    return tuple(freqs)


def band_energy_map(rec: Recording, band: tuple[float, float],
                    omega: float = 5.0) -> SpatioTemporalMap:
    """Mean Morlet power inside `band`, per channel over time."""
    spec = MorletSpec(omega=omega,
                      freqs_hz=_band_frequencies(band, rec.sample_rate_hz))

    def one(row: np.ndarray) -> np.ndarray:
        tf = wavelet_transform(row, rec.sample_rate_hz, spec)
        return tf.power.mean(axis=0)

    rows = map_channels(one, list(rec.data))
    return SpatioTemporalMap(labels=rec.labels, times_s=rec.times_s,
                             values=np.vstack(rows),
                             gamma_band=(float(band[0]), float(band[1])))


def normalize_by_low_band(gamma_map: SpatioTemporalMap,
                          low_map: SpatioTemporalMap,
                          epsilon: Optional[float] = None) -> SpatioTemporalMap:
    """Pointwise ratio gamma / (low + epsilon).

    epsilon defaults to 1e-12 x the global mean low-band power, enough
    to guard silent channels without shifting active ones. Cells whose
    ratio is still non-finite (zero over zero) become 0.
    """
    if gamma_map.values.shape != low_map.values.shape:
        raise ValueError("low_map: shape must match gamma_map")
    if not np.array_equal(gamma_map.times_s, low_map.times_s):
        raise ValueError("low_map: time axis must match gamma_map")
    if epsilon is None:
        epsilon = _EPSILON_SCALE * float(low_map.values.mean())
    elif epsilon < 0:
        raise ValueError("epsilon: must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = gamma_map.values / (low_map.values + epsilon)
    ratio = np.where(np.isfinite(ratio), ratio, 0.0)
    return replace(gamma_map, values=ratio, norm_band=low_map.gamma_band)


def smooth_map(st_map: SpatioTemporalMap, window_ms: float) -> SpatioTemporalMap:
    """Centered moving average per row; reflection at edges; 0 = identity."""
    if window_ms < 0:
        raise ValueError("window_ms: must be nonnegative")
    if window_ms == 0:
        return st_map
    fs = st_map.sample_rate_hz
    width = 2 * int(round(window_ms * fs / 2000.0)) + 1
    smoothed = np.vstack([moving_average(row, width) for row in st_map.values])
    return replace(st_map, values=smoothed, smoothed_ms=float(window_ms))


def detect_buildup(st_map: SpatioTemporalMap, k_sigma: float = 3.0,
                   min_duration_ms: float = 300.0) -> BuildupReport:
    """Find sustained exceedances of per-channel baseline statistics.

    Baseline mean and std come from the first 20% of the record
    (assumed pre-ictal); a channel triggers at the first run of values
    above mean + k_sigma*std lasting at least min_duration_ms. Channels
    are ranked by their full-record peak regardless of triggering.
    """
    if k_sigma <= 0:
        raise ValueError("k_sigma: must be positive")
    if min_duration_ms < 0:
        raise ValueError("min_duration_ms: must be nonnegative")
    times = st_map.times_s
    n = times.size
    baseline_n = int(round(_BASELINE_FRACTION * n))
    fs = st_map.sample_rate_hz
    if baseline_n / fs < _MIN_BASELINE_S:
        raise ValueError(
            "times_s: record too short for a baseline (first 20% must "
            f"cover at least {_MIN_BASELINE_S:g} s)")
    min_run = max(1, int(round(min_duration_ms * fs / 1000.0)))
    channels = []
    for label, row in zip(st_map.labels, st_map.values):
        baseline = row[:baseline_n]
        threshold = float(baseline.mean()) + k_sigma * float(baseline.std())
        onset = None
        for start, stop in boolean_runs(row > threshold):
            if stop - start >= min_run:
                onset = float(times[start])
                break
        channels.append(ChannelBuildup(label=label,
                                       peak_value=float(row.max()),
                                       onset_s=onset))
    ranked = tuple(sorted(channels, key=lambda c: -c.peak_value))
    onsets = [c.onset_s for c in ranked if c.onset_s is not None]
    return BuildupReport(onset_s=min(onsets) if onsets else None,
                         ranked_channels=ranked,
                         threshold_used=float(k_sigma))
