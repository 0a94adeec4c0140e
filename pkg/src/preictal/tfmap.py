"""Single-channel Morlet time-frequency power maps.

The analyzing wavelet at frequency f is a complex exponential under a
Gaussian envelope of temporal std sigma_t = omega / (2*pi*f); `omega`
therefore counts oscillations inside the envelope and sets the
time-frequency trade-off. Kernels are truncated at +/-4 sigma_t.
Convolution uses reflection padding, so the map covers the full record
at native time resolution with no phase delay.

Spikes show up as broadband columns ("pyramids"), oscillations as
compact blobs around their carrier frequency; spike_signature_score
turns that visual distinction into a number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.fft import next_fast_len

__all__ = [
    "MorletSpec", "TimeFrequencyMap", "morlet_kernel",
    "wavelet_transform", "spike_signature_score",
]

_SUPPORT_SIGMAS = 4.0
_SCORE_HALF_WINDOW_S = 0.05


@dataclass(frozen=True)
class MorletSpec:
    """Analysis grid for a Morlet transform."""
    omega: float = 7.0
    freqs_hz: tuple[float, ...] = tuple(float(f) for f in range(1, 121))
    normalize: str = "amplitude"

    def __post_init__(self):
        if not self.omega >= 1.0:
            raise ValueError("omega: must be >= 1")
        freqs = tuple(float(f) for f in self.freqs_hz)
        if not freqs:
            raise ValueError("freqs_hz: must not be empty")
        if any(f <= 0 for f in freqs):
            raise ValueError("freqs_hz: frequencies must be positive")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError("freqs_hz: must be strictly increasing")
        if self.normalize not in ("amplitude", "energy"):
            raise ValueError("normalize: must be 'amplitude' or 'energy'")
        object.__setattr__(self, "freqs_hz", freqs)


@dataclass(frozen=True)
class TimeFrequencyMap:
    """Power (signal-units squared) on a frequency x time grid."""
    freqs_hz: tuple[float, ...]
    times_s: np.ndarray
    power: np.ndarray
    channel_label: str = ""

    def __post_init__(self):
        times = np.asarray(self.times_s, dtype=float)
        power = np.asarray(self.power, dtype=float)
        if power.shape != (len(self.freqs_hz), times.size):
            raise ValueError("power: shape must be n_freqs x n_times")
        if not np.all(np.isfinite(power)) or np.any(power < 0):
            raise ValueError("power: values must be finite and nonnegative")
        times.setflags(write=False)
        power.setflags(write=False)
        object.__setattr__(self, "times_s", times)
        object.__setattr__(self, "power", power)


def _half_width(freq_hz: float, sample_rate_hz: float, omega: float) -> int:
    sigma_t = omega / (2.0 * math.pi * freq_hz)
    return int(math.ceil(_SUPPORT_SIGMAS * sigma_t * sample_rate_hz))


def morlet_kernel(freq_hz: float, sample_rate_hz: float, omega: float,
                  normalize: str = "amplitude") -> np.ndarray:
    """Complex Morlet kernel sampled at +/-4 sigma_t around its center.

    Amplitude normalization gives unit peak response to a matched unit
    sinusoid; energy normalization gives a unit-L2 kernel.
    """
    if not 0 < freq_hz < sample_rate_hz / 2:
        raise ValueError("freq_hz: must lie below the Nyquist frequency")
    sigma_t = omega / (2.0 * math.pi * freq_hz)
    half = _half_width(freq_hz, sample_rate_hz, omega)
    m = np.arange(-half, half + 1)
    t = m / sample_rate_hz
    env = np.exp(-(t ** 2) / (2.0 * sigma_t ** 2))
    kern = env * np.exp(2j * math.pi * freq_hz * t)
    if normalize == "amplitude":
        return kern * (2.0 / env.sum())
    if normalize == "energy":
        return kern / np.linalg.norm(kern)
    raise ValueError("normalize: must be 'amplitude' or 'energy'")


@lru_cache(maxsize=8)
def _kernel_bank_fft(freqs_hz: tuple[float, ...], sample_rate_hz: float,
                     omega: float, normalize: str, nfft: int) -> np.ndarray:
    # Kernels stored wrap-around (sample at signed offset m lives at
    # index m mod nfft) so every row shares one output alignment.
    bank = np.zeros((len(freqs_hz), nfft), dtype=complex)
    for i, f in enumerate(freqs_hz):
        kern = morlet_kernel(f, sample_rate_hz, omega, normalize)
        half = kern.size // 2
        idx = np.arange(-half, half + 1) % nfft
        bank[i, idx] = kern
    out = np.fft.fft(bank, axis=1)
    out.setflags(write=False)
    return out


def wavelet_transform(signal: Sequence[float], sample_rate_hz: float,
                      spec: MorletSpec | None = None,
                      channel_label: str = "") -> TimeFrequencyMap:
    """Morlet power map of one channel over spec.freqs_hz.

    Coefficients at frequency f are the convolution of the
    reflection-padded signal with the complex kernel of that frequency;
    power is the squared magnitude.
    """
    spec = spec or MorletSpec()
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise ValueError("signal: must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal: samples must be finite")
    if not sample_rate_hz > 0:
        raise ValueError("sample_rate_hz: must be positive")
    nyquist = sample_rate_hz / 2.0
    if spec.freqs_hz[-1] >= nyquist:
        raise ValueError(
            f"freqs_hz: {spec.freqs_hz[-1]:g} Hz is not below the "
            f"Nyquist frequency {nyquist:g} Hz")
    pad = _half_width(spec.freqs_hz[0], sample_rate_hz, spec.omega)
    if x.size < 2 * pad + 1:
        raise ValueError(
            "signal: shorter than the longest wavelet support "
            f"({2 * pad + 1} samples)")
    n = x.size
    padded = np.pad(x, pad, mode="reflect")
    nfft = next_fast_len(n + 2 * pad)
    bank = _kernel_bank_fft(spec.freqs_hz, float(sample_rate_hz),
                            float(spec.omega), spec.normalize, nfft)
    spectrum = np.fft.fft(padded, nfft)
    coeffs = np.fft.ifft(bank * spectrum, axis=1)[:, pad:pad + n]
    power = np.abs(coeffs) ** 2
    times = np.arange(n) / sample_rate_hz
    return TimeFrequencyMap(freqs_hz=spec.freqs_hz, times_s=times,
                            power=power, channel_label=channel_label)


def spike_signature_score(tf_map: TimeFrequencyMap, event_time_s: float) -> float:
    """How spike-like the map is around `event_time_s`.

    Mean broadband column power within +/-50 ms of the event, divided by
    the median broadband column power of the whole map. Spikes splash
    power across all frequencies at one instant, so they score high;
    narrowband oscillations score near 1. All-zero maps score 0.
    """
    times = tf_map.times_s
    if not times[0] <= event_time_s <= times[-1]:
        raise ValueError("event_time_s: outside the record")
    column = tf_map.power.sum(axis=0)
    window = np.abs(times - event_time_s) <= _SCORE_HALF_WINDOW_S
    numerator = float(column[window].mean())
    denominator = float(np.median(column))
    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else math.inf
    return numerator / denominator
