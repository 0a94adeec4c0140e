"""Spike detection, biphasic-Gaussian template fitting, and subtraction.

The spike template is

    G(t) = sign * ( -A * exp(-((t - a) + gamma)^2 / b)   for t < a
                    +A * exp(-((t - a) - gamma)^2 / b)   for t > a )

with G(a) = 0 by convention (the two branches disagree at t = a whenever
gamma != 0, so the midpoint is pinned to zero). A is the amplitude, a the
center time, b the squared-seconds scale, gamma the asymmetry; `sign`
selects the polarity (negative-lobe-first when +1).

Despiking subtracts the sum of all fitted templates from the signal, so
input = despiked + model holds exactly by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import median_filter
from scipy.signal import find_peaks

from ._parallel import map_channels
from ._util import moving_average
from .signals import Recording

__all__ = [
    "SpikeCandidate", "SpikeModelParams", "DespikeConfig", "DespikeResult",
    "evaluate_spike_model", "detect_spikes", "fit_spike_model",
    "despike_channel", "despike_recording",
]

_A_FLOOR = 1e-12  # lower amplitude bound; the zero-data fit parks here


# ------------------------------------------------------------ domain types

@dataclass(frozen=True)
class SpikeCandidate:
    """A detected transient: where it peaks and the window to fit in."""
    channel: int
    peak_time_s: float
    peak_amplitude: float
    window: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.window
        if not lo <= self.peak_time_s <= hi:
            raise ValueError("window: must contain peak_time_s")


@dataclass(frozen=True)
class SpikeModelParams:
    A: float
    a: float
    b: float
    gamma: float
    sign: int = 1

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("A: must be positive")
        if not self.b > 0:
            raise ValueError("b: must be positive")
        if self.sign not in (-1, 1):
            raise ValueError("sign: must be +1 or -1")


@dataclass(frozen=True)
class DespikeConfig:
    """Detector thresholds and fit bounds.

    `k` is the detection threshold in robust-std units (1.4826 * MAD) of
    the band-limited emphasized signal; the parameter bounds stop the
    template from absorbing oscillatory energy.
    """
    k: float = 4.0
    min_separation_s: float = 0.08
    emphasis_window_s: float = 0.2
    smooth_window_s: float = 0.025
    window_half_s: float = 0.15
    max_iterations: int = 200
    cost_tolerance: float = 1e-8
    b_bounds_s2: tuple[float, float] = (1e-6, 1.0)
    gamma_max_s: float = 0.1
    amplitude_factor_max: float = 10.0

    def __post_init__(self):
        if self.k <= 0 or self.min_separation_s < 0 or self.window_half_s <= 0:
            raise ValueError("k/min_separation_s/window_half_s: must be positive")
        if not 0 < self.b_bounds_s2[0] < self.b_bounds_s2[1]:
            raise ValueError("b_bounds_s2: need 0 < low < high")


@dataclass(frozen=True)
class DespikeResult:
    """Per-channel spike fits plus the exact signal split.

    despiked.data + model_signal reproduces the input elementwise.
    """
    despiked: Recording
    spike_train: tuple[tuple[tuple[SpikeCandidate, SpikeModelParams, float], ...], ...]
    model_signal: np.ndarray


# ------------------------------------------------------------------- model

def evaluate_spike_model(p: SpikeModelParams, t: Sequence[float]) -> np.ndarray:
    """Evaluate the biphasic template at times `t` (seconds)."""
    t = np.asarray(t, dtype=float)
    u = t - p.a
    early = -np.exp(-((u + p.gamma) ** 2) / p.b)
    late = np.exp(-((u - p.gamma) ** 2) / p.b)
    out = np.where(u < 0, early, np.where(u > 0, late, 0.0))
    return p.sign * p.A * out


def _model_and_jacobian(theta: np.ndarray, sign: int,
                        t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Columns ordered (A, a, b, gamma); the t == a sample contributes zeros.
    A, a, b, gamma = theta
    u = t - a
    late = u > 0
    early = u < 0
    v = np.where(late, u - gamma, u + gamma)
    env = np.exp(-(v ** 2) / b)
    branch = np.where(late, 1.0, np.where(early, -1.0, 0.0))
    f = sign * A * branch * env

    dA = f / A
    common = sign * A * branch * env * (2.0 * v / b)
    da = common
    dgamma = sign * A * env * (2.0 * v / b)  # +1 on both branches
    db = sign * A * branch * env * (v ** 2) / (b ** 2)
    J = np.column_stack([dA, da, db, dgamma])
    J[~(late | early)] = 0.0
    return f, J


# ---------------------------------------------------------------- detector

def robust_std(x: np.ndarray) -> float:
    """1.4826 x median absolute deviation; a spike-resistant scale."""
    x = np.asarray(x, dtype=float)
    return 1.4826 * float(np.median(np.abs(x - np.median(x))))


def detect_spikes(signal: Sequence[float], sample_rate_hz: float,
                  cfg: Optional[DespikeConfig] = None,
                  channel: int = 0) -> list[SpikeCandidate]:
    """Find spike-like transients on one channel.

    Candidates are local extrema of the band-limited emphasis (a 25 ms
    moving average, which keeps spike lobes but attenuates gamma-rate
    oscillations, minus a 200 ms running-median baseline, which removes
    drift without bulging next to large transients) whose magnitude exceeds
    cfg.k x robust-std; extrema closer than cfg.min_separation_s are merged
    keeping the larger peak. Each peak is then relocated to the largest
    baseline-removed raw excursion within half a smoothing window, undoing
    the timing bias the smoothing puts on sharp biphasic transients.
    """
    cfg = cfg or DespikeConfig()
    x = np.asarray(signal, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("signal: samples must be finite")
    fs = sample_rate_hz
    w_long = 2 * int(round(cfg.emphasis_window_s * fs / 2)) + 1
    w_short = 2 * int(round(cfg.smooth_window_s * fs / 2)) + 1
    baseline = median_filter(x, size=min(w_long, x.size), mode="reflect")
    emphasized = moving_average(x, w_short) - baseline
    height = cfg.k * robust_std(emphasized)
    distance = max(1, int(round(cfg.min_separation_s * fs)))
    peaks, _ = find_peaks(np.abs(emphasized), height=height, distance=distance)
    raw = x - baseline
    half = w_short // 2
    duration = x.size / fs
    out = []
    for p in peaks:
        lo = max(0, p - half)
        window = raw[lo:min(x.size, p + half + 1)]
        p = lo + int(np.argmax(np.abs(window)))
        tp = p / fs
        out.append(SpikeCandidate(
            channel=channel, peak_time_s=tp,
            peak_amplitude=float(raw[p]),
            window=(max(0.0, tp - cfg.window_half_s),
                    min(duration, tp + cfg.window_half_s))))
    return out


# -------------------------------------------------------------------- fit

def _window_slice(n: int, fs: float, window: tuple[float, float]) -> slice:
    i0 = max(0, int(round(window[0] * fs)))
    i1 = min(n, int(round(window[1] * fs)) + 1)
    return slice(i0, i1)


def _bounds(cfg: DespikeConfig, peak: float) -> tuple[np.ndarray, np.ndarray]:
    a_max = cfg.amplitude_factor_max * max(peak, _A_FLOOR)
    lo = np.array([_A_FLOOR, -np.inf, cfg.b_bounds_s2[0], -cfg.gamma_max_s])
    hi = np.array([a_max, np.inf, cfg.b_bounds_s2[1], cfg.gamma_max_s])
    return lo, hi


def _scan_center(y: np.ndarray, t: np.ndarray, theta: np.ndarray, sign: int,
                 lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # Coarse 1-D search over the center time with a closed-form amplitude
    # rescale per grid point; widens the Gauss-Newton basin when the
    # initial center is off by more than a lobe width.
    best = theta
    f, _ = _model_and_jacobian(theta, sign, t)
    best_cost = float(np.sum((f - y) ** 2))
    for a in np.linspace(t[0], t[-1], 33):
        cand = theta.copy()
        cand[1] = a
        g, _ = _model_and_jacobian(cand, sign, t)
        gg = float(g @ g)
        if gg <= 0:
            continue
        alpha = float(g @ y) / gg
        cand[0] = min(max(alpha * cand[0], lo[0]), hi[0])
        g2, _ = _model_and_jacobian(cand, sign, t)
        cost = float(np.sum((g2 - y) ** 2))
        if cost < best_cost:
            best, best_cost = cand, cost
    return best


def fit_spike_model(signal: Sequence[float], window: tuple[float, float],
                    init: SpikeModelParams, *, sample_rate_hz: float,
                    cfg: Optional[DespikeConfig] = None,
                    ) -> tuple[SpikeModelParams, float]:
    """Least-squares fit of the template to `signal` inside `window`.

    Damped Gauss-Newton (Levenberg-Marquardt with multiplicative
    diag(J^T J) damping, which keeps the iteration scale-equivariant);
    parameters are clipped to the configured bounds after every step.
    Stops when the relative cost decrease falls below cfg.cost_tolerance or
    after cfg.max_iterations; the best iterate is returned regardless. If
    the cost turns non-finite the initial parameters come back with
    residual_rms = NaN as the failure flag.
    """
    cfg = cfg or DespikeConfig()
    x = np.asarray(signal, dtype=float)
    sl = _window_slice(x.size, sample_rate_hz, window)
    y = x[sl]
    if y.size < 20:
        raise ValueError("window: need at least 20 samples to fit")
    t = (np.arange(sl.start, sl.stop)) / sample_rate_hz

    peak = float(np.max(np.abs(y)))
    if peak == 0.0:
        degenerate = SpikeModelParams(A=_A_FLOOR, a=init.a, b=init.b,
                                      gamma=init.gamma, sign=init.sign)
        return degenerate, 0.0

    lo, hi = _bounds(cfg, peak)
    theta = np.clip(np.array([init.A, init.a, init.b, init.gamma]), lo, hi)
    sign = init.sign
    theta = _scan_center(y, t, theta, sign, lo, hi)

    f, J = _model_and_jacobian(theta, sign, t)
    r = f - y
    cost = float(r @ r)
    if not math.isfinite(cost):
        return init, float("nan")
    best_theta, best_cost = theta.copy(), cost
    lam = 1e-3
    for _ in range(cfg.max_iterations):
        jtj = J.T @ J
        g = J.T @ r
        damp = np.diag(np.maximum(np.diag(jtj), 1e-30))
        accepted = False
        for _ in range(25):
            try:
                step = np.linalg.solve(jtj + lam * damp, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = np.clip(theta + step, lo, hi)
            fc, Jc = _model_and_jacobian(cand, sign, t)
            rc = fc - y
            cost_c = float(rc @ rc)
            if not math.isfinite(cost_c):
                return init, float("nan")
            if cost_c < cost:
                theta, f, J, r = cand, fc, Jc, rc
                decrease = cost - cost_c
                cost = cost_c
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                break
            lam *= 10.0
            if lam > 1e14:
                break
        if cost < best_cost:
            best_theta, best_cost = theta.copy(), cost
        if not accepted:
            break
        if decrease < cfg.cost_tolerance * max(best_cost, 1e-300):
            break
    params = SpikeModelParams(A=float(best_theta[0]), a=float(best_theta[1]),
                              b=float(best_theta[2]), gamma=float(best_theta[3]),
                              sign=sign)
    return params, float(np.sqrt(best_cost / y.size))


# --------------------------------------------------------------- despiking

def _initial_guess(x: np.ndarray, fs: float, cand: SpikeCandidate,
                   cfg: DespikeConfig, sign: int) -> SpikeModelParams:
    sl = _window_slice(x.size, fs, cand.window)
    y = x[sl]
    p = int(round(cand.peak_time_s * fs)) - sl.start
    p = min(max(p, 0), y.size - 1)
    amp = max(abs(y[p]), _A_FLOOR)
    # b from the contiguous half-amplitude run around the peak
    above = np.abs(y) >= amp / 2.0
    i = p
    while i > 0 and above[i - 1]:
        i -= 1
    j = p
    while j < y.size - 1 and above[j + 1]:
        j += 1
    width_s = max((j - i + 1) / fs, 2.0 / fs)
    b = (width_s / 2.0) ** 2 / math.log(2.0)
    b = min(max(b, cfg.b_bounds_s2[0]), cfg.b_bounds_s2[1])
    return SpikeModelParams(A=amp, a=cand.peak_time_s, b=b, gamma=0.0, sign=sign)


def _fit_candidate(residual: np.ndarray, fs: float, cand: SpikeCandidate,
                   cfg: DespikeConfig) -> tuple[SpikeModelParams, float]:
    # Polarity is ambiguous from one extremum: try both and keep the lower
    # cost fit against the running residual.
    best = None
    for sign in (1, -1):
        init = _initial_guess(residual, fs, cand, cfg, sign)
        params, rms = fit_spike_model(residual, cand.window, init,
                                      sample_rate_hz=fs, cfg=cfg)
        if math.isnan(rms):
            continue
        if best is None or rms < best[1]:
            best = (params, rms)
    if best is None:
        init = _initial_guess(residual, fs, cand, cfg, 1)
        return init, float("nan")
    return best


def _cluster(cands: list[SpikeCandidate]) -> list[list[SpikeCandidate]]:
    clusters: list[list[SpikeCandidate]] = []
    for cand in sorted(cands, key=lambda c: c.peak_time_s):
        if clusters and cand.window[0] < clusters[-1][-1].window[1]:
            clusters[-1].append(cand)
        else:
            clusters.append([cand])
    return clusters


def despike_channel(signal: Sequence[float], sample_rate_hz: float,
                    cfg: Optional[DespikeConfig] = None, channel: int = 0,
                    ) -> tuple[np.ndarray, list[tuple[SpikeCandidate, SpikeModelParams, float]]]:
    """Detect, fit, and subtract every spike on one channel.

    Overlapping candidates are fitted as a sum of templates: each is fitted
    against the running residual (largest peak first), then all template
    amplitudes in the cluster are jointly rescaled by closed-form least
    squares against the original signal (the projection step). Returns the
    despiked signal and the accepted (candidate, params, residual_rms)
    triples; despiked + sum(templates) equals the input by construction.
    """
    cfg = cfg or DespikeConfig()
    x = np.asarray(signal, dtype=float)
    fs = sample_rate_hz
    n = x.size
    t_full = np.arange(n) / fs
    cands = detect_spikes(x, fs, cfg, channel=channel)
    model = np.zeros(n)
    spikes: list[tuple[SpikeCandidate, SpikeModelParams, float]] = []
    for cluster in _cluster(cands):
        lo = min(c.window[0] for c in cluster)
        hi = max(c.window[1] for c in cluster)
        sl = _window_slice(n, fs, (lo, hi))
        y = x[sl]
        t_win = t_full[sl]
        fitted: list[tuple[SpikeCandidate, SpikeModelParams]] = []
        residual = y.copy()
        for cand in sorted(cluster, key=lambda c: -abs(c.peak_amplitude)):
            params, _ = _fit_candidate(_embed(residual, x, sl), fs, cand, cfg)
            template = evaluate_spike_model(params, t_win)
            residual = residual - template
            fitted.append((cand, params))
        # joint amplitude projection against the original window
        columns = []
        for _, params in fitted:
            unit = SpikeModelParams(A=1.0, a=params.a, b=params.b,
                                    gamma=params.gamma, sign=params.sign)
            columns.append(evaluate_spike_model(unit, t_win))
        basis = np.column_stack(columns)
        alphas, *_ = np.linalg.lstsq(basis, y, rcond=None)
        kept_templates = np.zeros(y.size)
        kept: list[tuple[SpikeCandidate, SpikeModelParams]] = []
        window_peak = float(np.max(np.abs(y))) if y.size else 0.0
        a_cap = cfg.amplitude_factor_max * max(window_peak, _A_FLOOR)
        for (cand, params), alpha in zip(fitted, alphas):
            amp = float(alpha)
            if amp <= _A_FLOOR:
                continue  # projection rejects the template
            amp = min(amp, a_cap)
            final = SpikeModelParams(A=amp, a=params.a, b=params.b,
                                     gamma=params.gamma, sign=params.sign)
            kept.append((cand, final))
            kept_templates += evaluate_spike_model(final, t_win)
        rms = float(np.sqrt(np.mean((y - kept_templates) ** 2))) if y.size else 0.0
        for cand, final in kept:
            model += evaluate_spike_model(final, t_full)
            spikes.append((cand, final, rms))
    despiked = x - model
    return despiked, spikes


def _embed(residual: np.ndarray, x: np.ndarray, sl: slice) -> np.ndarray:
    # full-length copy with the cluster window replaced by the residual,
    # so window slicing inside the fit sees the peeled signal
    out = x.copy()
    out[sl] = residual
    return out


def despike_recording(rec: Recording, cfg: Optional[DespikeConfig] = None,
                      ) -> DespikeResult:
    """Apply despike_channel independently to every channel."""
    cfg = cfg or DespikeConfig()

    def one(item: tuple[int, np.ndarray]):
        c, row = item
        return despike_channel(row, rec.sample_rate_hz, cfg, channel=c)

    results = map_channels(one, list(enumerate(rec.data)))
    despiked = np.vstack([r[0] for r in results])
    model = rec.data - despiked
    out = Recording(sample_rate_hz=rec.sample_rate_hz, labels=rec.labels,
                    data=despiked)
    return DespikeResult(despiked=out,
                         spike_train=tuple(tuple(r[1]) for r in results),
                         model_signal=model)
