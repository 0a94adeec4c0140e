"""Residual and recovery metrics plus the three-way method comparison."""
import numpy as np
import pytest

from preictal import (SimulationSpec, compare_methods,
                      oscillation_recovery_score, residual_spike_energy,
                      run_comparison, synthesize_recording)
from preictal.evaluate import summarize
from preictal.signals import GroundTruth, Recording


@pytest.fixture(scope="module")
def seed42_report(default_spec):
    return compare_methods(default_spec)


def _as_recording(rec, data):
    return Recording(sample_rate_hz=rec.sample_rate_hz, labels=rec.labels,
                     data=data)


def test_unfiltered_input_scores_exactly_one(recording, truth):
    assert residual_spike_energy(recording, truth) == 1.0


def test_silenced_input_scores_exactly_zero(recording, truth):
    silent = _as_recording(recording, np.zeros_like(recording.data))
    assert residual_spike_energy(silent, truth) == 0.0


def test_residual_matches_direct_window_arithmetic(recording, truth):
    filtered = _as_recording(recording, truth.oscillation_component)
    fs = recording.sample_rate_hz
    n = recording.n_samples
    original = (truth.spike_component + truth.oscillation_component
                + truth.noise_component)
    num = den = 0.0
    for c, times in enumerate(truth.spike_times):
        mask = np.zeros(n, dtype=bool)
        for t in times:
            lo = max(0, int(round((t - 0.05) * fs)))
            hi = min(n, int(round((t + 0.05) * fs)) + 1)
            mask[lo:hi] = True
        num += float(np.sum(truth.oscillation_component[c, mask] ** 2))
        den += float(np.sum(original[c, mask] ** 2))
    assert residual_spike_energy(filtered, truth) == num / den


def test_residual_is_none_without_spikes():
    spec = SimulationSpec(spike_rate_hz=0.0, duration_s=8.0,
                          ictal_onset_s=4.0)
    rec, truth = synthesize_recording(spec)
    assert residual_spike_energy(rec, truth) is None


def test_residual_rejects_shape_mismatch(recording, truth):
    wrong = Recording(sample_rate_hz=recording.sample_rate_hz,
                      labels=("ch1",), data=recording.data[:1])
    with pytest.raises(ValueError, match="shape"):
        residual_spike_energy(wrong, truth)


def test_recovery_correlation_extremes(recording, truth):
    perfect = _as_recording(recording, truth.oscillation_component)
    flipped = _as_recording(recording, -truth.oscillation_component)
    band = (65.0, 85.0)
    assert oscillation_recovery_score(perfect, truth, band) == \
        pytest.approx(1.0, abs=1e-9)
    assert oscillation_recovery_score(flipped, truth, band) == \
        pytest.approx(-1.0, abs=1e-9)


def test_recovery_is_none_without_bursts(recording, truth):
    empty = GroundTruth(
        spike_component=truth.spike_component,
        oscillation_component=truth.oscillation_component,
        noise_component=truth.noise_component,
        burst_windows=tuple(() for _ in range(recording.n_channels)),
        spike_times=truth.spike_times,
        ictal_onset_s=truth.ictal_onset_s,
        seizure_channel=truth.seizure_channel)
    assert oscillation_recovery_score(recording, empty, (65.0, 85.0)) is None


def test_comparison_prefers_despiking_on_the_default_seed(seed42_report):
    r = seed42_report
    assert r.seed == 42
    assert r.despike.spike_residual_fraction < r.swt.spike_residual_fraction
    assert r.despike.spike_residual_fraction <= 0.2
    assert r.none.spike_residual_fraction == 1.0
    assert r.despike.oscillation_recovery_corr >= 0.85
    assert r.swt.oscillation_recovery_corr >= 0.7
    assert r.despike.buildup_channel_correct
    assert r.despike.buildup_onset_error_s <= 0.5
    for method in (r.swt, r.despike, r.none):
        assert method.runtime_s > 0.0


def test_comparison_is_deterministic(default_spec, seed42_report):
    again = compare_methods(default_spec)
    for name in ("swt", "despike", "none"):
        a = getattr(seed42_report, name)
        b = getattr(again, name)
        assert a.spike_residual_fraction == b.spike_residual_fraction
        assert a.oscillation_recovery_corr == b.oscillation_recovery_corr
        assert a.buildup_onset_error_s == b.buildup_onset_error_s
        assert a.buildup_channel_correct == b.buildup_channel_correct


def test_report_serializes_to_plain_types(seed42_report):
    payload = seed42_report.as_dict()
    assert payload["seed"] == 42
    for name in ("swt", "despike", "none"):
        for key in ("spike_residual_fraction", "oscillation_recovery_corr",
                    "buildup_onset_error_s", "buildup_channel_correct",
                    "runtime_s"):
            assert key in payload[name]


def test_run_comparison_advances_the_seed():
    spec = SimulationSpec(duration_s=8.0, ictal_onset_s=4.0)
    reports = run_comparison(spec, 2)
    assert [r.seed for r in reports] == [42, 43]
    with pytest.raises(ValueError, match="n_seeds"):
        run_comparison(spec, 0)


def test_summary_counts_are_consistent():
    spec = SimulationSpec(duration_s=8.0, ictal_onset_s=4.0)
    reports = run_comparison(spec, 2)
    agg = summarize(reports)
    assert agg["n_seeds"] == 2
    expected = sum(1 for r in reports
                   if r.despike.spike_residual_fraction
                   < r.swt.spike_residual_fraction)
    assert agg["despike_residual_below_swt"] == expected
    for name in ("swt", "despike", "none"):
        method = agg[name]
        assert 0 <= method["buildup_channel_correct"] <= 2
        assert 0 <= method["buildup_onset_within_0.5s"] <= 2
        assert method["total_runtime_s"] > 0.0
        assert method["mean_spike_residual_fraction"] is not None
