"""Spike template model, detector, nonlinear fit, and subtraction."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from preictal import (MorletSpec, despike_channel, despike_recording,
                      detect_spikes, fit_spike_model, wavelet_transform)
from preictal.despike import SpikeModelParams, evaluate_spike_model

FS = 1000.0


# ------------------------------------------------------------------ model

def test_model_matches_closed_form_arithmetic():
    p = SpikeModelParams(A=2.0, a=0.5, b=1e-3, gamma=0.01, sign=1.0)
    t = np.array([0.4, 0.5, 0.6])
    expected = 2.0 * math.exp(-(0.1 - 0.01) ** 2 / 1e-3)
    values = evaluate_spike_model(p, t)
    assert values[1] == 0.0, "the waveform crosses zero at its center"
    assert abs(values[2] - expected) <= 1e-12
    assert abs(values[0] + expected) <= 1e-12


def test_model_is_antisymmetric_without_skew():
    p = SpikeModelParams(A=3.0, a=1.0, b=2e-3, gamma=0.0, sign=1.0)
    delta = np.linspace(0.001, 0.3, 50)
    left = evaluate_spike_model(p, 1.0 - delta)
    right = evaluate_spike_model(p, 1.0 + delta)
    assert np.max(np.abs(left + right)) <= 1e-12


def test_model_lobes_approach_amplitude_for_wide_spikes():
    p = SpikeModelParams(A=5.0, a=10.0, b=1e6, gamma=0.0, sign=1.0)
    assert evaluate_spike_model(p, np.array([11.0]))[0] == \
        pytest.approx(5.0, abs=1e-4)
    assert evaluate_spike_model(p, np.array([9.0]))[0] == \
        pytest.approx(-5.0, abs=1e-4)


def test_negative_sign_flips_the_waveform():
    pos = SpikeModelParams(A=2.0, a=0.5, b=1e-3, gamma=0.005, sign=1.0)
    neg = SpikeModelParams(A=2.0, a=0.5, b=1e-3, gamma=0.005, sign=-1.0)
    t = np.linspace(0.3, 0.7, 100)
    assert np.array_equal(evaluate_spike_model(neg, t),
                          -evaluate_spike_model(pos, t))


@settings(max_examples=50, deadline=None)
@given(A=st.floats(0.1, 10.0), a=st.floats(0.3, 0.7),
       b=st.floats(1e-5, 1e-2), gamma=st.floats(-0.05, 0.05),
       sign=st.sampled_from([-1.0, 1.0]))
def test_model_vectorization_matches_scalar_loop(A, a, b, gamma, sign):
    p = SpikeModelParams(A=A, a=a, b=b, gamma=gamma, sign=sign)
    t = np.linspace(0.0, 1.0, 101)
    vec = evaluate_spike_model(p, t)
    for ti, vi in zip(t, vec):
        if ti < a:
            ref = -sign * A * math.exp(-((ti - a) + gamma) ** 2 / b)
        elif ti > a:
            ref = sign * A * math.exp(-((ti - a) - gamma) ** 2 / b)
        else:
            ref = 0.0
        assert abs(vi - ref) <= 1e-12


# --------------------------------------------------------------- detector

def test_detector_is_silent_on_zero_input():
    assert detect_spikes(np.zeros(5000), FS) == []


@pytest.mark.parametrize("noise_seed", [2, 4])
def test_detector_finds_a_single_large_spike(noise_seed):
    rng = np.random.default_rng(noise_seed)
    n = 4000
    noise = rng.standard_normal(n)
    noise /= np.sqrt(np.mean(noise ** 2))
    t = np.arange(n) / FS
    spike = SpikeModelParams(A=10.0, a=2.0, b=8e-4, gamma=1e-9, sign=1.0)
    x = noise + evaluate_spike_model(spike, t)
    candidates = detect_spikes(x, FS)
    assert len(candidates) == 1
    assert abs(candidates[0].peak_time_s - 2.0) <= 0.010


def test_detector_recall_and_precision_on_simulation(recording, truth):
    for c in range(recording.n_channels):
        candidates = detect_spikes(recording.data[c],
                                   recording.sample_rate_hz, channel=c)
        detected = np.array([cand.peak_time_s for cand in candidates])
        hits = 0
        used = np.zeros(detected.size, dtype=bool)
        for t in truth.spike_times[c]:
            if not detected.size:
                break
            dist = np.abs(detected - t)
            dist[used] = np.inf
            j = int(np.argmin(dist))
            if dist[j] <= 0.025:
                hits += 1
                used[j] = True
        recall = hits / max(1, len(truth.spike_times[c]))
        precision = hits / max(1, detected.size)
        assert recall >= 0.9, f"ch{c + 1} recall {recall:.2f}"
        assert precision >= 0.8, f"ch{c + 1} precision {precision:.2f}"


def test_candidate_windows_are_clamped_to_the_record():
    x = np.zeros(1000)
    x[20] = 50.0
    x[980] = -50.0
    x += 0.01 * np.random.default_rng(0).standard_normal(1000)
    for cand in detect_spikes(x, FS):
        lo, hi = cand.window
        assert 0.0 <= lo < hi <= 1.0
        assert cand.channel == 0


# -------------------------------------------------------------------- fit

def test_fit_recovers_exact_parameters_from_perturbed_start():
    t = np.arange(1000) / FS
    true = SpikeModelParams(A=1.0, a=0.5, b=1e-3, gamma=0.01, sign=1.0)
    y = evaluate_spike_model(true, t)
    init = SpikeModelParams(A=1.2, a=0.515, b=0.8e-3, gamma=0.008, sign=1.0)
    fit, rms = fit_spike_model(y, (0.35, 0.65), init, sample_rate_hz=FS)
    assert abs(fit.A - true.A) / true.A <= 0.01
    assert abs(fit.a - true.a) / true.a <= 0.01
    assert abs(fit.b - true.b) / true.b <= 0.01
    assert abs(fit.gamma - true.gamma) / true.gamma <= 0.01
    assert rms <= 1e-8


def test_fit_on_silence_degrades_to_amplitude_floor():
    init = SpikeModelParams(A=1.0, a=0.5, b=1e-3, gamma=0.0, sign=1.0)
    fit, rms = fit_spike_model(np.zeros(1000), (0.35, 0.65), init,
                               sample_rate_hz=FS)
    assert fit.A <= 1e-11
    assert rms == 0.0


def test_fit_never_leaves_the_window_worse_than_the_start():
    rng = np.random.default_rng(21)
    t = np.arange(1000) / FS
    for _ in range(10):
        true = SpikeModelParams(A=rng.uniform(1, 5), a=0.5,
                                b=rng.uniform(5e-4, 5e-3),
                                gamma=rng.uniform(-0.01, 0.01), sign=1.0)
        y = evaluate_spike_model(true, t) + 0.3 * rng.standard_normal(1000)
        init = SpikeModelParams(A=true.A * 1.3, a=0.52, b=true.b * 0.7,
                                gamma=0.0, sign=1.0)
        window = (0.35, 0.65)
        mask = (t >= window[0]) & (t <= window[1])
        start_rms = float(np.sqrt(np.mean(
            (y[mask] - evaluate_spike_model(init, t[mask])) ** 2)))
        _, rms = fit_spike_model(y, window, init, sample_rate_hz=FS)
        assert rms <= start_rms + 1e-12


def test_fit_is_scale_equivariant():
    t = np.arange(1200) / FS
    true = SpikeModelParams(A=2.0, a=0.6, b=1e-3, gamma=0.008, sign=1.0)
    y = (evaluate_spike_model(true, t)
         + 0.05 * np.random.default_rng(9).standard_normal(1200))
    init = SpikeModelParams(A=1.5, a=0.62, b=1.5e-3, gamma=0.0, sign=1.0)
    init100 = SpikeModelParams(A=150.0, a=0.62, b=1.5e-3, gamma=0.0,
                               sign=1.0)
    fit1, rms1 = fit_spike_model(y, (0.45, 0.75), init, sample_rate_hz=FS)
    fit2, rms2 = fit_spike_model(100.0 * y, (0.45, 0.75), init100,
                                 sample_rate_hz=FS)
    assert fit2.A / fit1.A == pytest.approx(100.0, rel=1e-9)
    assert fit2.a == pytest.approx(fit1.a, abs=1e-12)
    assert fit2.b == pytest.approx(fit1.b, rel=1e-9)
    assert fit2.gamma == pytest.approx(fit1.gamma, abs=1e-12)
    assert rms2 / rms1 == pytest.approx(100.0, rel=1e-9)


def test_fit_flags_non_finite_cost_without_crashing():
    init = SpikeModelParams(A=1.0, a=0.5, b=1e-3, gamma=0.0, sign=1.0)
    with np.errstate(all="ignore"):
        fit, rms = fit_spike_model(np.full(1000, 1e200), (0.35, 0.65),
                                   init, sample_rate_hz=FS)
    assert math.isnan(rms)
    assert fit.A == init.A and fit.a == init.a


def test_fit_rejects_degenerate_windows():
    init = SpikeModelParams(A=1.0, a=0.5, b=1e-3, gamma=0.0, sign=1.0)
    with pytest.raises(ValueError, match="window"):
        fit_spike_model(np.zeros(1000), (0.500, 0.505), init,
                        sample_rate_hz=FS)


# ------------------------------------------------------------ subtraction

def test_despiked_plus_model_equals_input(recording, despiked):
    scale = np.max(np.abs(recording.data))
    residual = np.max(np.abs(recording.data
                             - (despiked.despiked.data
                                + despiked.model_signal)))
    assert residual <= 1e-12 * scale


def test_despike_channel_is_scale_equivariant(recording):
    x = recording.data[1]
    d1, train1 = despike_channel(x, FS)
    d5, train5 = despike_channel(5.0 * x, FS)
    assert len(train1) == len(train5)
    model1 = x - d1
    model5 = 5.0 * x - d5
    scale = np.max(np.abs(5.0 * model1))
    assert np.max(np.abs(model5 - 5.0 * model1)) <= 1e-9 * scale


def test_despike_channel_recovers_true_spike_component(recording, truth):
    for c in (1, 2, 4):
        cleaned, train = despike_channel(recording.data[c], FS, channel=c)
        model = recording.data[c] - cleaned
        spikes = truth.spike_component[c]
        residual = np.sum((spikes - model) ** 2) / np.sum(spikes ** 2)
        corr = np.corrcoef(model, spikes)[0, 1]
        assert residual <= 0.2, f"ch{c + 1} residual {residual:.3f}"
        assert corr >= 0.85, f"ch{c + 1} correlation {corr:.3f}"
        assert len(train) >= 1


def test_spike_free_input_yields_no_model_energy():
    from preictal import SimulationSpec, synthesize_recording
    spec = SimulationSpec(spike_rate_hz=0.0)
    rec, _ = synthesize_recording(spec)
    result = despike_recording(rec)
    model_energy = np.sum(result.model_signal ** 2)
    assert model_energy <= 0.01 * np.sum(rec.data ** 2)


def test_second_pass_finds_almost_nothing(recording, despiked):
    before = sum(len(detect_spikes(recording.data[c],
                                   recording.sample_rate_hz))
                 for c in range(recording.n_channels))
    after = sum(len(detect_spikes(despiked.despiked.data[c],
                                  recording.sample_rate_hz))
                for c in range(recording.n_channels))
    assert after <= 0.1 * before, f"{after} of {before} still trigger"


def test_despike_recording_preserves_structure(recording, despiked):
    out = despiked.despiked
    assert out.labels == recording.labels
    assert out.sample_rate_hz == recording.sample_rate_hz
    assert out.data.shape == recording.data.shape
    assert len(despiked.spike_train) == recording.n_channels
    for c, channel_spikes in enumerate(despiked.spike_train):
        for cand, params, rms in channel_spikes:
            assert cand.channel == c
            assert params.A > 0


def test_despiking_removes_broadband_spike_signature(recording, truth,
                                                     despiked):
    # excess over the spike-free map is compared per spike; windows that
    # overlap a gamma burst carry spike/burst cross terms, so those are
    # held to the aggregate bound only
    c = truth.seizure_channel
    fs = recording.sample_rate_hz
    clean = recording.data[c] - truth.spike_component[c]
    spec = MorletSpec(freqs_hz=np.arange(5.0, 121.0, 1.0))
    tf_orig = wavelet_transform(recording.data[c], fs, spec)
    tf_clean = wavelet_transform(clean, fs, spec)
    tf_desp = wavelet_transform(despiked.despiked.data[c], fs, spec)

    def excess(tf_map, lo, hi):
        return (float(np.sum(tf_map.power[:, lo:hi]))
                - float(np.sum(tf_clean.power[:, lo:hi])))

    pre_onset = [t for t in truth.spike_times[c]
                 if t < truth.ictal_onset_s]
    assert pre_onset, "the default simulation has pre-onset spikes here"
    total_orig = total_desp = 0.0
    for t in pre_onset:
        lo = max(0, int((t - 0.05) * fs))
        hi = int((t + 0.05) * fs) + 1
        e_orig = excess(tf_orig, lo, hi)
        e_desp = excess(tf_desp, lo, hi)
        total_orig += e_orig
        total_desp += e_desp
        on_burst = any(w.start_s < t + 0.05 and w.end_s > t - 0.05
                       for w in truth.burst_windows[c])
        if not on_burst and e_orig > 0:
            assert e_desp / e_orig <= 0.1, \
                f"spike at {t:.3f}s kept {e_desp / e_orig:.1%}"
    assert total_desp <= 0.1 * total_orig
