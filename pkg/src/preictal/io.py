"""File formats: recording CSV, ground-truth sidecars, map CSVs, reports.

The recording format is line 1 `# sample_rate_hz=<value>`, line 2
comma-separated channel labels, then one sample instant per row. Floats
are written with shortest round-trip formatting, so write -> read is
bit-exact. Malformed input is rejected with the offending line number.
"""
from __future__ import annotations

import json
import math
import os
from typing import Optional

import numpy as np

from .errors import E_FORMAT, E_IO, PipelineError
from .signals import GroundTruth, Recording
from .stmap import BuildupReport, SpatioTemporalMap
from .tfmap import TimeFrequencyMap

__all__ = [
    "read_recording", "write_recording", "write_ground_truth",
    "write_tf_map", "write_st_map", "write_buildup_report",
    "write_spike_train", "write_comparison",
]

_HEADER_PREFIX = "# sample_rate_hz="


def _fmt(value: float) -> str:
    return repr(float(value))


def write_recording(rec: Recording, path: str) -> None:
    """Write the CSV format read_recording parses, bit-exactly."""
    lines = [_HEADER_PREFIX + _fmt(rec.sample_rate_hz),
             ",".join(rec.labels)]
    columns = rec.data.T
    lines.extend(",".join(_fmt(v) for v in row) for row in columns)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise PipelineError(E_IO, f"cannot write '{path}': {exc}")


def read_recording(path: str) -> Recording:
    """Parse a recording CSV; errors name the offending line."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise PipelineError(E_IO, f"cannot read '{path}': {exc}")
    if not lines or not lines[0].startswith(_HEADER_PREFIX):
        raise PipelineError(
            E_FORMAT, f"{path} line 1: expected '{_HEADER_PREFIX}<value>'")
    raw_rate = lines[0][len(_HEADER_PREFIX):]
    try:
        sample_rate = float(raw_rate)
    except ValueError:
        raise PipelineError(
            E_FORMAT, f"{path} line 1: invalid sample rate '{raw_rate}'")
    if not math.isfinite(sample_rate) or sample_rate <= 0:
        raise PipelineError(
            E_FORMAT, f"{path} line 1: sample rate must be positive")
    if len(lines) < 2 or not lines[1]:
        raise PipelineError(E_FORMAT, f"{path} line 2: missing channel labels")
    labels = lines[1].split(",")
    if any(not lab for lab in labels):
        raise PipelineError(E_FORMAT, f"{path} line 2: empty channel label")
    n_channels = len(labels)
    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            raise PipelineError(E_FORMAT, f"{path} line {lineno}: empty row")
        parts = line.split(",")
        if len(parts) != n_channels:
            raise PipelineError(
                E_FORMAT, f"{path} line {lineno}: expected {n_channels} "
                f"values, got {len(parts)}")
        try:
            row = [float(p) for p in parts]
        except ValueError:
            raise PipelineError(
                E_FORMAT, f"{path} line {lineno}: non-numeric value")
        if not all(math.isfinite(v) for v in row):
            raise PipelineError(
                E_FORMAT, f"{path} line {lineno}: non-finite value")
        rows.append(row)
    if not rows:
        raise PipelineError(E_FORMAT, f"{path} line 3: no samples")
    data = np.asarray(rows, dtype=float).T
    try:
        return Recording(sample_rate_hz=sample_rate, labels=tuple(labels),
                         data=data)
    except ValueError as exc:
        raise PipelineError(E_FORMAT, f"{path}: {exc}")


def _component_recording(rec: Recording, data: np.ndarray) -> Recording:
    return Recording(sample_rate_hz=rec.sample_rate_hz, labels=rec.labels,
                     data=data)


def write_ground_truth(truth: GroundTruth, rec: Recording,
                       base_path: str) -> list[str]:
    """Write component CSVs plus the JSON sidecar next to `base_path`.

    base_path may carry a .csv suffix (stripped). Returns the paths
    written: <base>.spike.csv, <base>.oscillation.csv, <base>.noise.csv,
    <base>.truth.json.
    """
    base, ext = os.path.splitext(base_path)
    if ext.lower() != ".csv":
        base = base_path
    paths = []
    for name, data in (("spike", truth.spike_component),
                       ("oscillation", truth.oscillation_component),
                       ("noise", truth.noise_component)):
        path = f"{base}.{name}.csv"
        write_recording(_component_recording(rec, data), path)
        paths.append(path)
    sidecar = {
        "ictal_onset_s": truth.ictal_onset_s,
        "burst_windows": [[[w.start_s, w.end_s, w.center_freq_hz]
                           for w in windows]
                          for windows in truth.burst_windows],
        "spike_times_s": [list(times) for times in truth.spike_times],
        "seizure_channel_label": rec.labels[truth.seizure_channel],
    }
    path = f"{base}.truth.json"
    _write_json(sidecar, path)
    paths.append(path)
    return paths


def _write_json(payload: dict, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise PipelineError(E_IO, f"cannot write '{path}': {exc}")


def write_tf_map(tf_map: TimeFrequencyMap, path: str) -> None:
    """First row frequencies, first column times, body = power values."""
    lines = ["," + ",".join(_fmt(f) for f in tf_map.freqs_hz)]
    for j, t in enumerate(tf_map.times_s):
        lines.append(_fmt(t) + ","
                     + ",".join(_fmt(v) for v in tf_map.power[:, j]))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise PipelineError(E_IO, f"cannot write '{path}': {exc}")


def write_st_map(st_map: SpatioTemporalMap, path: str) -> None:
    """First row times, first column channel labels."""
    lines = ["," + ",".join(_fmt(t) for t in st_map.times_s)]
    for label, row in zip(st_map.labels, st_map.values):
        lines.append(label + "," + ",".join(_fmt(v) for v in row))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise PipelineError(E_IO, f"cannot write '{path}': {exc}")


def write_buildup_report(report: BuildupReport, path: str) -> None:
    payload = {
        "onset_s": report.onset_s,
        "threshold_used": report.threshold_used,
        "ranked_channels": [
            {"label": c.label, "peak_value": c.peak_value,
             "onset_s": c.onset_s}
            for c in report.ranked_channels],
    }
    _write_json(payload, path)


def write_spike_train(result, path: str) -> None:
    """Flat JSON array of fitted spikes across all channels."""
    spikes = []
    for channel_spikes in result.spike_train:
        for cand, params, rms in channel_spikes:
            spikes.append({
                "channel": cand.channel,
                "peak_time_s": cand.peak_time_s,
                "A": params.A, "a": params.a, "b": params.b,
                "gamma": params.gamma, "sign": params.sign,
                "residual_rms": rms,
            })
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(spikes, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise PipelineError(E_IO, f"cannot write '{path}': {exc}")


def write_comparison(reports, aggregate: dict, path: str,
                     extra: Optional[dict] = None) -> None:
    payload = {"aggregate": aggregate,
               "per_seed": [r.as_dict() for r in reports]}
    if extra:
        payload.update(extra)
    _write_json(payload, path)
