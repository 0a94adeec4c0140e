"""Channel-time gamma maps, low-band normalization, smoothing, and the
build-up detector."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from preictal import (SpatioTemporalMap, band_energy_map, detect_buildup,
                      normalize_by_low_band, smooth_map)
from preictal.signals import Recording

FS = 1000.0
GAMMA = (65.0, 85.0)
NORM = (8.0, 30.0)


def _labels(n):
    return tuple(f"ch{i + 1}" for i in range(n))


def _noise_recording(shape, seed, scale=1.0):
    data = scale * np.random.default_rng(seed).standard_normal(shape)
    return Recording(sample_rate_hz=FS, labels=_labels(shape[0]), data=data)


@pytest.fixture(scope="module")
def burst_recording():
    n = 6000
    t = np.arange(n) / FS
    data = 0.05 * np.random.default_rng(1).standard_normal((4, n))
    data[3, 2500:3500] += np.hanning(1000) * np.sin(2 * np.pi * 75.0
                                                    * t[2500:3500])
    return Recording(sample_rate_hz=FS, labels=_labels(4), data=data)


def test_band_energy_localizes_the_bursting_channel(burst_recording):
    st_map = band_energy_map(burst_recording, GAMMA)
    window = slice(2500, 3500)
    means = st_map.values[:, window].mean(axis=1)
    assert means[3] >= 5.0 * means[:3].max(), f"means {means}"
    assert st_map.labels == burst_recording.labels
    assert st_map.gamma_band == GAMMA


def test_zero_recording_gives_zero_map():
    rec = Recording(sample_rate_hz=FS, labels=_labels(2),
                    data=np.zeros((2, 6000)))
    assert np.all(band_energy_map(rec, GAMMA).values == 0.0)


def test_white_noise_rows_share_one_level():
    st_map = band_energy_map(_noise_recording((4, 20000), seed=5), GAMMA)
    row_means = st_map.values.mean(axis=1)
    grand = row_means.mean()
    assert np.all(np.abs(row_means / grand - 1.0) <= 0.2), \
        f"row spread {row_means / grand}"


def test_band_without_integer_frequency_is_rejected():
    rec = _noise_recording((1, 6000), seed=0)
    with pytest.raises(ValueError, match="integer"):
        band_energy_map(rec, (65.2, 65.8))


def test_ratio_of_a_map_with_itself_is_flat():
    st_map = band_energy_map(_noise_recording((2, 6000), seed=6), GAMMA)
    ratio = normalize_by_low_band(st_map, st_map, epsilon=0.0)
    assert np.max(np.abs(ratio.values - 1.0)) <= 1e-12
    assert ratio.norm_band == st_map.gamma_band


def test_normalized_map_ignores_channel_gain():
    rec = _noise_recording((2, 6000), seed=7)
    reports = []
    values = []
    for gain in (0.1, 1.0, 10.0):
        scaled = Recording(sample_rate_hz=FS, labels=rec.labels,
                           data=gain * rec.data)
        gamma = band_energy_map(scaled, GAMMA)
        low = band_energy_map(scaled, NORM)
        normed = smooth_map(normalize_by_low_band(gamma, low), 500.0)
        values.append(normed.values)
        reports.append(detect_buildup(normed))
    for other in values[1:]:
        scale = np.max(np.abs(values[0]))
        assert np.max(np.abs(other - values[0])) <= 1e-9 * scale
    ranked = [[c.label for c in r.ranked_channels] for r in reports]
    assert ranked[0] == ranked[1] == ranked[2]


def test_mismatched_maps_are_rejected():
    a = band_energy_map(_noise_recording((2, 6000), seed=8), GAMMA)
    b = band_energy_map(_noise_recording((3, 6000), seed=8), NORM)
    with pytest.raises(ValueError, match="shape"):
        normalize_by_low_band(a, b)


def test_seizure_ratio_rises_after_onset(despiked, truth):
    gamma = band_energy_map(despiked.despiked, GAMMA)
    low = band_energy_map(despiked.despiked, NORM)
    normed = smooth_map(normalize_by_low_band(gamma, low), 500.0)
    row = normed.values[truth.seizure_channel]
    onset_i = int(truth.ictal_onset_s * FS)
    assert row[onset_i:].mean() >= 3.0 * row[:onset_i].mean()


# -------------------------------------------------------------- smoothing

def _flat_map(values):
    values = np.asarray(values, dtype=float)
    return SpatioTemporalMap(labels=_labels(values.shape[0]),
                             times_s=np.arange(values.shape[1]) / FS,
                             values=values, gamma_band=GAMMA)


def test_smoothing_spreads_an_impulse_evenly():
    values = np.zeros((1, 4000))
    values[0, 2000] = 1.0
    out = smooth_map(_flat_map(values), 500.0)
    plateau = out.values[0, out.values[0] > 0]
    assert plateau.size == 501
    assert np.allclose(plateau, 1.0 / 501.0, atol=1e-15)
    assert out.smoothed_ms == 500.0


def test_zero_width_smoothing_is_identity():
    values = np.random.default_rng(10).random((2, 3000))
    out = smooth_map(_flat_map(values), 0.0)
    assert np.array_equal(out.values, values)


def test_smoothing_leaves_constant_maps_alone():
    out = smooth_map(_flat_map(np.full((2, 3000), 3.7)), 400.0)
    assert np.max(np.abs(out.values - 3.7)) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(window_ms=st.floats(0.0, 200.0), seed=st.integers(0, 1000))
def test_short_smoothing_windows_conserve_row_means(window_ms, seed):
    # windows up to 5% of the 4 s record
    values = np.random.default_rng(seed).random((2, 4000)) + 0.5
    out = smooth_map(_flat_map(values), window_ms)
    before = values.mean(axis=1)
    after = out.values.mean(axis=1)
    assert np.all(np.abs(after / before - 1.0) <= 0.01)


def test_negative_window_is_rejected():
    with pytest.raises(ValueError, match="window_ms"):
        smooth_map(_flat_map(np.ones((1, 3000))), -1.0)


# --------------------------------------------------------------- build-up

def test_buildup_finds_seizure_channel_and_onset(despiked, recording,
                                                 truth):
    gamma = band_energy_map(despiked.despiked, GAMMA)
    low = band_energy_map(despiked.despiked, NORM)
    normed = smooth_map(normalize_by_low_band(gamma, low), 500.0)
    report = detect_buildup(normed)
    assert report.threshold_used == 3.0
    top = report.ranked_channels[0]
    assert top.label == recording.labels[truth.seizure_channel]
    assert 9.5 <= report.onset_s <= 10.5, f"onset {report.onset_s:.2f}s"


def test_buildup_is_deterministic(despiked):
    gamma = band_energy_map(despiked.despiked, GAMMA)
    low = band_energy_map(despiked.despiked, NORM)
    normed = smooth_map(normalize_by_low_band(gamma, low), 500.0)
    assert detect_buildup(normed) == detect_buildup(normed)


def test_buildup_on_a_constant_map_reports_nothing():
    report = detect_buildup(_flat_map(np.ones((2, 8000))))
    assert report.onset_s is None
    assert all(c.onset_s is None for c in report.ranked_channels)


def test_buildup_onset_matches_a_step_change():
    values = np.ones((2, 8000))
    values[1, 5000:] += 2.0
    report = detect_buildup(_flat_map(values + 0.01
                                      * np.random.default_rng(3)
                                      .standard_normal((2, 8000))))
    assert report.ranked_channels[0].label == "ch2"
    assert report.onset_s == pytest.approx(5.0, abs=0.05)


def test_buildup_threshold_is_monotone_in_k_sigma():
    rng = np.random.default_rng(14)
    for _ in range(5):
        values = rng.random((2, 8000)) + 1.0
        ramp = np.linspace(0.0, 3.0, 3000)
        values[0, 5000:] += ramp
        st_map = _flat_map(values)
        onset_lo = detect_buildup(st_map, k_sigma=2.0).onset_s
        onset_hi = detect_buildup(st_map, k_sigma=5.0).onset_s
        if onset_lo is not None and onset_hi is not None:
            assert onset_hi >= onset_lo


def test_buildup_rejects_too_short_baselines():
    with pytest.raises(ValueError, match="baseline"):
        detect_buildup(_flat_map(np.ones((1, 3000))))


def test_buildup_rejects_bad_parameters():
    st_map = _flat_map(np.ones((1, 8000)))
    with pytest.raises(ValueError, match="k_sigma"):
        detect_buildup(st_map, k_sigma=0.0)
    with pytest.raises(ValueError, match="min_duration_ms"):
        detect_buildup(st_map, min_duration_ms=-5.0)


def test_map_validation_names_the_offender():
    with pytest.raises(ValueError, match="shape"):
        SpatioTemporalMap(labels=("a", "b"), times_s=np.arange(10) / FS,
                          values=np.ones((3, 10)), gamma_band=GAMMA)
    with pytest.raises(ValueError, match="finite"):
        SpatioTemporalMap(labels=("a",), times_s=np.arange(10) / FS,
                          values=np.full((1, 10), np.nan), gamma_band=GAMMA)
