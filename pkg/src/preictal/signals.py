"""Domain types for multichannel recordings, the simulated-data generator
with ground truth, and shared linear-phase band-pass filtering.

Simulated recordings are built as spike + oscillation + noise components
(summed in exactly that order, so component additivity is bitwise). All
randomness comes from counter-based Philox substreams keyed by
(seed, purpose, channel), which keeps output independent of channel
evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.signal import fftconvolve, firwin

__all__ = [
    "Recording", "GroundTruth", "SimulationSpec", "BurstWindow",
    "synthesize_recording", "bandpass_filter", "add_white_noise",
]

# ------------------------------------------------------------ domain types

class BurstWindow(NamedTuple):
    start_s: float
    end_s: float
    center_freq_hz: float


@dataclass(frozen=True)
class Recording:
    """Uniformly sampled multichannel real-valued time series."""
    sample_rate_hz: float
    labels: tuple[str, ...]
    data: np.ndarray  # n_channels x n_samples

    def __post_init__(self):
        if not (np.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise ValueError("sample_rate_hz: must be positive and finite")
        labels = tuple(str(s) for s in self.labels)
        data = np.array(self.data, dtype=float, ndmin=2)
        if data.ndim != 2:
            raise ValueError("data: expected an n_channels x n_samples matrix")
        if len(labels) != data.shape[0] or len(labels) < 1:
            raise ValueError("labels: need one label per channel")
        if data.shape[1] < 1:
            raise ValueError("data: need at least one sample")
        if not np.all(np.isfinite(data)):
            raise ValueError("data: all samples must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "data", data)

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    @property
    def times_s(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate_hz


@dataclass(frozen=True)
class GroundTruth:
    """Constructed components of a simulated recording.

    The recording's data equals (spike + oscillation) + noise, summed in
    that order. `burst_windows` and `spike_times` are per channel;
    `seizure_channel` indexes the channel carrying the sustained ictal
    oscillation.
    """
    spike_component: np.ndarray
    oscillation_component: np.ndarray
    noise_component: np.ndarray
    burst_windows: tuple[tuple[BurstWindow, ...], ...]
    spike_times: tuple[tuple[float, ...], ...]
    ictal_onset_s: float
    seizure_channel: int

    def __post_init__(self):
        arrays = {}
        shape = None
        for name in ("spike_component", "oscillation_component", "noise_component"):
            arr = np.array(getattr(self, name), dtype=float, ndmin=2)
            if shape is None:
                shape = arr.shape
            if arr.shape != shape or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: components must be finite and share one shape")
            arr.setflags(write=False)
            arrays[name] = arr
        n_ch = shape[0]
        if len(self.burst_windows) != n_ch or len(self.spike_times) != n_ch:
            raise ValueError("burst_windows/spike_times: need one tuple per channel")
        if self.ictal_onset_s < 0:
            raise ValueError("ictal_onset_s: must be nonnegative")
        if not 0 <= self.seizure_channel < n_ch:
            raise ValueError("seizure_channel: out of range")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "burst_windows",
                           tuple(tuple(BurstWindow(*w) for w in ws)
                                 for ws in self.burst_windows))
        object.__setattr__(self, "spike_times",
                           tuple(tuple(float(t) for t in ts)
                                 for ts in self.spike_times))


@dataclass(frozen=True)
class SimulationSpec:
    """Parameters of the simulated-data generator.

    Defaults follow the simulated setting of the source recordings: six
    channels at 1000 Hz with a 5 dB signal-to-noise ratio, gamma band
    65-85 Hz, sustained ictal activity on channel index 3 from 10 s.
    `snr_db = inf` disables noise.
    """
    n_channels: int = 6
    sample_rate_hz: float = 1000.0
    duration_s: float = 20.0
    snr_db: float = 5.0
    spike_rate_hz: float = 0.4
    gamma_band: tuple[float, float] = (65.0, 85.0)
    overlap_fraction: float = 0.3
    ictal_onset_s: float = 10.0
    seizure_channel: int = 3
    seed: int = 42

    def __post_init__(self):
        if self.n_channels < 1:
            raise ValueError("n_channels: must be >= 1")
        if not (np.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise ValueError("sample_rate_hz: must be positive")
        if not (np.isfinite(self.duration_s) and self.duration_s > 0):
            raise ValueError("duration_s: must be positive")
        if math.isnan(self.snr_db):
            raise ValueError("snr_db: must be a real value or +inf")
        low, high = self.gamma_band
        if not 0 < low < high < self.sample_rate_hz / 2:
            raise ValueError("gamma_band: need 0 < low < high < sample_rate_hz/2")
        if self.spike_rate_hz < 0 or not np.isfinite(self.spike_rate_hz):
            raise ValueError("spike_rate_hz: must be finite and >= 0")
        if not 0.0 <= self.overlap_fraction <= 1.0:
            raise ValueError("overlap_fraction: must be in [0, 1]")
        if self.ictal_onset_s < 0 or not np.isfinite(self.ictal_onset_s):
            raise ValueError("ictal_onset_s: must be finite and >= 0")
        if not 0 <= self.seizure_channel < self.n_channels:
            raise ValueError("seizure_channel: out of range")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed: must fit an unsigned 64-bit integer")


# --------------------------------------------------------------- generator
# Declared simulation constants (the source description gives qualitative
# shapes only). Spike amplitudes are relative to the oscillation RMS over
# its support so the detector's robust-std thresholds stay meaningful.
_BURST_RATE_HZ = 0.25
_BURST_DURATION_RANGE_S = (0.2, 1.0)
_BURST_AMPLITUDE = 1.0
_BURST_GAP_S = 0.05
_BASELINE_FRACTION = 0.2
_BASELINE_MIN_BURSTS = 2
_ICTAL_AMPLITUDE = 1.6
_ICTAL_RAMP_S = 0.05
_BACKGROUND_FREQ_RANGE_HZ = (10.0, 16.0)
_BACKGROUND_AMPLITUDE = 0.35
_SPIKE_AMP_RANGE = (3.0, 8.0)
_SPIKE_LOBE_FWHM_RANGE_S = (0.03, 0.07)
_SPIKE_GAMMA_MAX_S = 0.01
_SPIKE_REFRACTORY_S = 0.18
_SPIKE_EDGE_MARGIN_S = 0.2
_SPIKE_SUPPORT_HALF_S = 0.35

_PURPOSE_NOISE = 1
_PURPOSE_BURSTS = 2
_PURPOSE_SPIKES = 3
_PURPOSE_ICTAL = 4
_PURPOSE_BACKGROUND = 5


def _stream(seed: int, purpose: int, channel: int) -> np.random.Generator:
    # Counter-based substream; identical regardless of evaluation order.
    return np.random.Generator(
        np.random.Philox(key=[int(seed), (purpose << 32) | channel]))


def _burst_peak_proxy(duration_s: float, freq_hz: float,
                      band: tuple[float, float]) -> float:
    # expected smoothed band-energy peak of a burst: a duration factor
    # (0.5 s smoothing saturates longer bursts) times the mean response
    # of an omega=5 analysis grid (25 = omega^2) across the band
    grid = np.arange(math.ceil(band[0]), math.floor(band[1]) + 1.0)
    if grid.size == 0:
        grid = np.array([0.5 * (band[0] + band[1])])
    response = np.exp(-25.0 * (freq_hz - grid) ** 2 / grid ** 2)
    return min(duration_s, 0.5) * float(response.mean())


def _place_bursts(spec: SimulationSpec, rng: np.random.Generator) -> list[BurstWindow]:
    pre_span = min(spec.ictal_onset_s, spec.duration_s)
    if pre_span <= _BURST_DURATION_RANGE_S[0]:
        return []
    count = max(_BASELINE_MIN_BURSTS + 1,
                int(rng.poisson(_BURST_RATE_HZ * pre_span)))
    baseline_end = _BASELINE_FRACTION * spec.duration_s
    # the most detectable bursts go into the detector-baseline fifth, so
    # baseline statistics bound the excursions of every later burst
    draws = [(rng.uniform(*_BURST_DURATION_RANGE_S),
              rng.uniform(*spec.gamma_band)) for _ in range(count)]
    draws.sort(key=lambda df: -_burst_peak_proxy(df[0], df[1], spec.gamma_band))
    placed: list[BurstWindow] = []
    for i, (dur, freq) in enumerate(draws):
        limit = min(baseline_end, pre_span) if i < _BASELINE_MIN_BURSTS else pre_span
        hi = limit - dur
        if hi <= 0:
            continue
        for _ in range(100):
            start = rng.uniform(0.0, hi)
            end = start + dur
            if all(end + _BURST_GAP_S <= w.start_s or start >= w.end_s + _BURST_GAP_S
                   for w in placed):
                placed.append(BurstWindow(start, end, freq))
                break
    return sorted(placed)


def _render_oscillations(spec: SimulationSpec, n: int) -> tuple[
        np.ndarray, list[list[BurstWindow]]]:
    fs = spec.sample_rate_hz
    t = np.arange(n) / fs
    osc = np.zeros((spec.n_channels, n))
    windows: list[list[BurstWindow]] = []
    for c in range(spec.n_channels):
        # ongoing low-frequency rhythm: present on every channel for the
        # whole record, it keeps the low-band normalization denominator
        # signal-dominated (as in real recordings) without touching the
        # gamma band
        brng = _stream(spec.seed, _PURPOSE_BACKGROUND, c)
        bg_freq = brng.uniform(*_BACKGROUND_FREQ_RANGE_HZ)
        bg_phase = brng.uniform(0.0, 2.0 * np.pi)
        osc[c] += _BACKGROUND_AMPLITUDE * np.sin(
            2.0 * np.pi * bg_freq * t + bg_phase)
        rng = _stream(spec.seed, _PURPOSE_BURSTS, c)
        wins = _place_bursts(spec, rng)
        for w in wins:
            i0 = int(round(w.start_s * fs))
            i1 = min(int(round(w.end_s * fs)), n)
            m = i1 - i0
            if m < 2:
                continue
            phase = rng.uniform(0.0, 2.0 * np.pi)
            seg = t[i0:i1] - w.start_s
            osc[c, i0:i1] += (_BURST_AMPLITUDE * np.hanning(m)
                              * np.sin(2.0 * np.pi * w.center_freq_hz * seg + phase))
        if c == spec.seizure_channel and spec.ictal_onset_s < spec.duration_s:
            irng = _stream(spec.seed, _PURPOSE_ICTAL, c)
            freq = irng.uniform(*spec.gamma_band)
            phase = irng.uniform(0.0, 2.0 * np.pi)
            i0 = int(round(spec.ictal_onset_s * fs))
            m = n - i0
            if m >= 2:
                seg = t[i0:] - spec.ictal_onset_s
                env = np.ones(m)
                ramp = min(int(round(_ICTAL_RAMP_S * fs)), m // 2)
                if ramp > 0:
                    shape = 0.5 * (1.0 - np.cos(np.pi * np.arange(ramp) / ramp))
                    env[:ramp] = shape
                    env[-ramp:] = shape[::-1]
                osc[c, i0:] += (_ICTAL_AMPLITUDE * env
                                * np.sin(2.0 * np.pi * freq * seg + phase))
                wins.append(BurstWindow(spec.ictal_onset_s, n / fs, freq))
        windows.append(sorted(wins))
    return osc, windows


def _support_rms(osc: np.ndarray, windows, fs: float) -> float:
    mask = np.zeros(osc.shape, dtype=bool)
    n = osc.shape[1]
    for c, wins in enumerate(windows):
        for w in wins:
            i0 = int(round(w.start_s * fs))
            i1 = min(int(round(w.end_s * fs)), n)
            mask[c, i0:i1] = True
    if not mask.any():
        return 1.0
    return float(np.sqrt(np.mean(osc[mask] ** 2)))


def _place_spikes(spec: SimulationSpec, rng: np.random.Generator,
                  windows: Sequence[BurstWindow]) -> list[float]:
    span = spec.duration_s - 2 * _SPIKE_EDGE_MARGIN_S
    if span <= 0 or spec.spike_rate_hz == 0:
        return []
    count = int(rng.poisson(spec.spike_rate_hz * spec.duration_s))
    n_overlap = int(round(spec.overlap_fraction * count)) if windows else 0
    times: list[float] = []
    for i in range(count):
        placed = False
        for _ in range(200):
            if i < n_overlap:
                w = windows[int(rng.integers(len(windows)))]
                lo = max(w.start_s, _SPIKE_EDGE_MARGIN_S)
                hi = min(w.end_s, spec.duration_s - _SPIKE_EDGE_MARGIN_S)
                if hi <= lo:
                    continue
                cand = rng.uniform(lo, hi)
            else:
                cand = rng.uniform(_SPIKE_EDGE_MARGIN_S,
                                   spec.duration_s - _SPIKE_EDGE_MARGIN_S)
            if all(abs(cand - s) >= _SPIKE_REFRACTORY_S for s in times):
                times.append(cand)
                placed = True
                break
        if not placed:
            continue
    return sorted(times)


def _render_spikes(spec: SimulationSpec, windows, amp_ref: float,
                   n: int) -> tuple[np.ndarray, list[list[float]]]:
    # imported here to keep module dependencies one-way
    from .despike import SpikeModelParams, evaluate_spike_model

    fs = spec.sample_rate_hz
    t = np.arange(n) / fs
    spikes = np.zeros((spec.n_channels, n))
    all_times: list[list[float]] = []
    for c in range(spec.n_channels):
        rng = _stream(spec.seed, _PURPOSE_SPIKES, c)
        times = _place_spikes(spec, rng, windows[c])
        for a in times:
            amp = rng.uniform(*_SPIKE_AMP_RANGE) * amp_ref
            fwhm = rng.uniform(*_SPIKE_LOBE_FWHM_RANGE_S)
            b = (fwhm / 2.0) ** 2 / math.log(2.0)
            gamma = rng.uniform(-_SPIKE_GAMMA_MAX_S, _SPIKE_GAMMA_MAX_S)
            sign = 1 if rng.uniform() < 0.5 else -1
            params = SpikeModelParams(A=amp, a=a, b=b, gamma=gamma, sign=sign)
            i0 = max(0, int(round((a - _SPIKE_SUPPORT_HALF_S) * fs)))
            i1 = min(n, int(round((a + _SPIKE_SUPPORT_HALF_S) * fs)))
            spikes[c, i0:i1] += evaluate_spike_model(params, t[i0:i1])
        all_times.append(times)
    return spikes, all_times


def _white_noise(data: np.ndarray, snr_db: float, seed: int) -> np.ndarray:
    """Gaussian noise scaled so 10*log10(P_data / P_noise) equals snr_db
    exactly; +inf disables noise."""
    data = np.array(data, dtype=float, ndmin=2)
    if math.isinf(snr_db) and snr_db > 0:
        return np.zeros_like(data)
    if math.isnan(snr_db) or math.isinf(snr_db):
        raise ValueError("snr_db: must be a real value or +inf")
    p_clean = float(np.mean(data ** 2))
    if p_clean <= 0.0:
        raise ValueError("data: zero power, SNR undefined for finite snr_db")
    rows = [_stream(seed, _PURPOSE_NOISE, c).standard_normal(data.shape[1])
            for c in range(data.shape[0])]
    noise = np.vstack(rows)
    p_raw = float(np.mean(noise ** 2))
    target = p_clean / (10.0 ** (snr_db / 10.0))
    return noise * np.sqrt(target / p_raw)


def add_white_noise(data: np.ndarray, snr_db: float, seed: int) -> np.ndarray:
    """Return data + white Gaussian noise at the requested SNR.

    The noise is scaled so the realized power ratio matches snr_db exactly;
    generation is deterministic per seed (per-row Philox substreams).
    """
    data = np.array(data, dtype=float, ndmin=2)
    return data + _white_noise(data, snr_db, seed)


def synthesize_recording(spec: SimulationSpec) -> tuple[Recording, GroundTruth]:
    """Generate a simulated multichannel recording plus its ground truth.

    Sparse Hann-windowed gamma bursts are placed on every channel before
    the ictal onset; the seizure channel additionally carries a sustained
    gamma oscillation from the onset to the end of the record. Biphasic
    spikes with randomized parameters are superimposed (a fraction inside
    bursts), and white noise is added at the requested SNR.

    Returns
    -------
    (Recording, GroundTruth) with data = (spike + oscillation) + noise,
    summed exactly in that order.
    """
    fs = spec.sample_rate_hz
    n = int(round(spec.duration_s * fs))
    if n < 2:
        raise ValueError("duration_s: too short for the sample rate")

    osc, windows = _render_oscillations(spec, n)
    amp_ref = _support_rms(osc, windows, fs)
    spikes, spike_times = _render_spikes(spec, windows, amp_ref, n)
    clean = spikes + osc
    noise = _white_noise(clean, spec.snr_db, spec.seed)
    data = clean + noise

    labels = tuple(f"ch{c + 1}" for c in range(spec.n_channels))
    rec = Recording(sample_rate_hz=fs, labels=labels, data=data)
    truth = GroundTruth(
        spike_component=spikes,
        oscillation_component=osc,
        noise_component=noise,
        burst_windows=tuple(tuple(ws) for ws in windows),
        spike_times=tuple(tuple(ts) for ts in spike_times),
        ictal_onset_s=spec.ictal_onset_s,
        seizure_channel=spec.seizure_channel,
    )
    return rec, truth


# --------------------------------------------------------------- filtering

def _bandpass_taps(fs: float, low_hz: float, high_hz: float,
                   n_samples: int) -> np.ndarray:
    # Window design: tap count follows the Hamming transition-width rule so
    # the passband is flat (about 1e-4 ripple) by `low_hz + transition`.
    transition = min(low_hz, (high_hz - low_hz) / 2.0) / 2.0
    numtaps = int(math.ceil(6.6 * fs / transition))
    numtaps = min(numtaps, 2 * n_samples - 1)
    if numtaps % 2 == 0:
        numtaps -= 1
    numtaps = max(numtaps, 3)
    return firwin(numtaps, [low_hz, high_hz], pass_zero=False,
                  window="hamming", fs=fs)


def bandpass_filter(rec: Recording, low_hz: float, high_hz: float) -> Recording:
    """Linear-phase FIR band-pass, applied per channel with zero net group
    delay (centered symmetric taps, mirror-reflected edges)."""
    if not 0 < low_hz < high_hz < rec.sample_rate_hz / 2:
        raise ValueError("band: need 0 < low_hz < high_hz < sample_rate_hz/2")
    taps = _bandpass_taps(rec.sample_rate_hz, low_hz, high_hz, rec.n_samples)
    half = (taps.size - 1) // 2

    def one(channel: np.ndarray) -> np.ndarray:
        if half == 0:
            return channel * taps[0]
        padded = np.pad(channel, half, mode="reflect")
        return fftconvolve(padded, taps, mode="valid")

    from ._parallel import map_channels
    rows = map_channels(one, list(rec.data))
    return Recording(sample_rate_hz=rec.sample_rate_hz, labels=rec.labels,
                     data=np.vstack(rows))
