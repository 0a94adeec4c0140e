"""Subcommand CLI: simulate, swt, despike, tfmap, stmap, compare.

Every failure prints one machine-parsable line `E_CODE: message` to
stderr and exits 2; success exits 0. Tunables resolve as explicit flag
> --config file > built-in default. PREICTAL_THREADS caps worker
parallelism across channels (0 or unset = one worker per CPU).
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import numpy as np

from .config import RunConfig, load_config, make_config
from .errors import E_INVALID, E_IO, E_USAGE, PipelineError
from .evaluate import run_comparison, summarize
from .io import (read_recording, write_buildup_report, write_comparison,
                 write_ground_truth, write_recording, write_spike_train,
                 write_st_map, write_tf_map)
from .despike import despike_recording
from .signals import SimulationSpec, synthesize_recording
from .stmap import (band_energy_map, detect_buildup, normalize_by_low_band,
                    smooth_map)
from .swt import MaskSpec, extract_oscillations_swt
from .tfmap import MorletSpec, wavelet_transform

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # single-line coded errors instead of usage dump
        raise PipelineError(E_USAGE, message)


def _band(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise PipelineError(E_USAGE, f"band '{text}': expected LOW:HIGH")
    try:
        low, high = float(parts[0]), float(parts[1])
    except ValueError:
        raise PipelineError(E_USAGE, f"band '{text}': edges must be numbers")
    return low, high


def _mask(text: str) -> MaskSpec:
    kind, _, arg = text.partition(":")
    if kind == "keep" and not arg:
        return MaskSpec.keep_all()
    if kind == "zero" and not arg:
        return MaskSpec.zero_all()
    if kind == "auto":
        if not arg:
            return MaskSpec.auto()
        try:
            return MaskSpec.auto(float(arg))
        except ValueError as exc:
            raise PipelineError(E_USAGE, f"mask '{text}': {exc}")
    raise PipelineError(
        E_USAGE, f"mask '{text}': expected keep, zero, or auto[:FRACTION]")


def _resolve(args, flag_values: dict) -> RunConfig:
    file_values = load_config(args.config) if args.config else None
    return make_config(file_values, flag_values)


def _build_parser() -> _Parser:
    parser = _Parser(prog="preictal",
                     description="Pre-ictal gamma-oscillation extraction "
                                 "and seizure build-up mapping.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sim = sub.add_parser("simulate",
                         help="synthesize a recording with ground truth")
    sim.add_argument("--out", required=True, help="recording CSV to write")
    sim.add_argument("--seed", type=int, default=42)
    sim.add_argument("--channels", type=int, default=6)
    sim.add_argument("--fs", type=float, default=1000.0,
                     help="sample rate in Hz")
    sim.add_argument("--duration-s", type=float, default=20.0)
    sim.add_argument("--snr-db", type=float, default=5.0)
    sim.add_argument("--spike-rate", type=float, default=0.4,
                     help="spikes per second per channel")
    sim.add_argument("--gamma", type=_band, default=(65.0, 85.0),
                     metavar="LOW:HIGH")
    sim.add_argument("--overlap", type=float, default=0.3,
                     help="fraction of spikes placed inside bursts")
    sim.add_argument("--onset-s", type=float, default=10.0,
                     help="ictal onset time")
    sim.add_argument("--seizure-channel", type=int, default=4,
                     help="1-based channel carrying the sustained tone")
    sim.add_argument("--truth", metavar="BASE",
                     help="also write ground-truth component CSVs and "
                          "sidecar JSON under this base path")
    sim.set_defaults(func=_cmd_simulate)

    swt = sub.add_parser("swt", help="extract oscillations by wavelet masking")
    swt.add_argument("--in", dest="in_path", required=True)
    swt.add_argument("--out", required=True)
    swt.add_argument("--wavelet", default=None, help="sym2..sym8")
    swt.add_argument("--levels", type=int, default=None)
    swt.add_argument("--band", type=_band, default=None, metavar="LOW:HIGH")
    swt.add_argument("--mask", type=_mask, default=None,
                     metavar="keep|zero|auto[:FRACTION]")
    swt.add_argument("--config")
    swt.set_defaults(func=_cmd_swt)

    des = sub.add_parser("despike",
                         help="extract oscillations by spike subtraction")
    des.add_argument("--in", dest="in_path", required=True)
    des.add_argument("--out", required=True)
    des.add_argument("--spikes", help="JSON array of fitted spikes to write")
    des.add_argument("--k", type=float, default=None,
                     help="detection threshold in robust-std units")
    des.add_argument("--window-ms", type=float, default=None,
                     help="fit half-window around each peak")
    des.add_argument("--config")
    des.set_defaults(func=_cmd_despike)

    tfm = sub.add_parser("tfmap", help="Morlet time-frequency power map")
    tfm.add_argument("--in", dest="in_path", required=True)
    tfm.add_argument("--out", required=True)
    tfm.add_argument("--channel", type=int, default=1,
                     help="1-based channel number")
    tfm.add_argument("--omega", type=float, default=None)
    tfm.add_argument("--fmin", type=float, default=1.0)
    tfm.add_argument("--fmax", type=float, default=120.0)
    tfm.add_argument("--fstep", type=float, default=1.0)
    tfm.add_argument("--config")
    tfm.set_defaults(func=_cmd_tfmap)

    stm = sub.add_parser("stmap",
                         help="normalized channel x time band-energy map")
    stm.add_argument("--in", dest="in_path", required=True)
    stm.add_argument("--out", required=True)
    stm.add_argument("--gamma", type=_band, default=None, metavar="LOW:HIGH")
    stm.add_argument("--norm", type=_band, default=None, metavar="LOW:HIGH")
    stm.add_argument("--omega", type=float, default=None)
    stm.add_argument("--smooth-ms", type=float, default=None)
    stm.add_argument("--k-sigma", type=float, default=None)
    stm.add_argument("--min-duration-ms", type=float, default=None)
    stm.add_argument("--report", help="build-up report JSON to write")
    stm.add_argument("--config")
    stm.set_defaults(func=_cmd_stmap)

    cmp_ = sub.add_parser("compare",
                          help="SWT vs despiking over simulation seeds")
    cmp_.add_argument("--seeds", type=int, default=20,
                      help="number of consecutive seeds starting at 42")
    cmp_.add_argument("--spec", default="default",
                      help="simulation spec name (only 'default')")
    cmp_.add_argument("--out", required=True)
    cmp_.add_argument("--config")
    cmp_.set_defaults(func=_cmd_compare)
    return parser


def _cmd_simulate(args) -> int:
    spec = SimulationSpec(
        n_channels=args.channels, sample_rate_hz=args.fs,
        duration_s=args.duration_s, snr_db=args.snr_db,
        spike_rate_hz=args.spike_rate, gamma_band=args.gamma,
        overlap_fraction=args.overlap, ictal_onset_s=args.onset_s,
        seizure_channel=args.seizure_channel - 1, seed=args.seed)
    rec, truth = synthesize_recording(spec)
    write_recording(rec, args.out)
    if args.truth:
        write_ground_truth(truth, rec, args.truth)
    return 0


def _cmd_swt(args) -> int:
    flags = {"wavelet": args.wavelet, "levels": args.levels}
    if args.band is not None:
        flags["gamma_low_hz"], flags["gamma_high_hz"] = args.band
    cfg = _resolve(args, flags)
    rec = read_recording(args.in_path)
    mask = args.mask if args.mask is not None else cfg.mask_spec()
    out = extract_oscillations_swt(rec, cfg.gamma_band, mask,
                                   wavelet_name=cfg.wavelet,
                                   levels=cfg.levels)
    write_recording(out, args.out)
    return 0


def _cmd_despike(args) -> int:
    flags = {"detector_k": args.k}
    if args.window_ms is not None:
        flags["window_half_s"] = args.window_ms / 1000.0
    cfg = _resolve(args, flags)
    rec = read_recording(args.in_path)
    result = despike_recording(rec, cfg.despike_config())
    write_recording(result.despiked, args.out)
    if args.spikes:
        write_spike_train(result, args.spikes)
    return 0


def _cmd_tfmap(args) -> int:
    cfg = _resolve(args, {"omega_tf": args.omega})
    rec = read_recording(args.in_path)
    if not 1 <= args.channel <= rec.n_channels:
        raise PipelineError(
            E_INVALID, f"channel: {args.channel} outside 1..{rec.n_channels}")
    if args.fstep <= 0 or args.fmin <= 0 or args.fmax <= args.fmin:
        raise PipelineError(
            E_USAGE, "frequency grid: need 0 < fmin < fmax and fstep > 0")
    freqs = np.arange(args.fmin, args.fmax + args.fstep / 2, args.fstep)
    spec = MorletSpec(omega=cfg.omega_tf, freqs_hz=tuple(freqs))
    idx = args.channel - 1
    tf = wavelet_transform(rec.data[idx], rec.sample_rate_hz, spec,
                           channel_label=rec.labels[idx])
    write_tf_map(tf, args.out)
    return 0


def _cmd_stmap(args) -> int:
    flags = {"omega_st": args.omega, "smooth_ms": args.smooth_ms,
             "k_sigma": args.k_sigma, "min_duration_ms": args.min_duration_ms}
    if args.gamma is not None:
        flags["gamma_low_hz"], flags["gamma_high_hz"] = args.gamma
    if args.norm is not None:
        flags["norm_low_hz"], flags["norm_high_hz"] = args.norm
    cfg = _resolve(args, flags)
    rec = read_recording(args.in_path)
    gamma = band_energy_map(rec, cfg.gamma_band, cfg.omega_st)
    low = band_energy_map(rec, cfg.norm_band, cfg.omega_st)
    smoothed = smooth_map(normalize_by_low_band(gamma, low), cfg.smooth_ms)
    write_st_map(smoothed, args.out)
    if args.report:
        report = detect_buildup(smoothed, cfg.k_sigma, cfg.min_duration_ms)
        write_buildup_report(report, args.report)
    return 0


def _cmd_compare(args) -> int:
    cfg = _resolve(args, {})
    if args.spec != "default":
        raise PipelineError(
            E_USAGE, f"spec '{args.spec}': only 'default' is available")
    if args.seeds < 1:
        raise PipelineError(E_USAGE, "seeds: must be at least 1")
    reports = run_comparison(SimulationSpec(), args.seeds, cfg)
    write_comparison(reports, summarize(reports), args.out)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except PipelineError as exc:
        print(exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        print(PipelineError(E_INVALID, str(exc)), file=sys.stderr)
        return 2
    except OSError as exc:
        print(PipelineError(E_IO, str(exc)), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
