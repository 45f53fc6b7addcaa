"""Command-line interface.

Every subcommand prints machine-readable ``key=value`` lines on stdout and
diagnostics on stderr. Exit codes: 0 success, 1 usage error, 2 data error.

Simulator settings resolve in this order (last wins): built-in defaults,
the ``[simulator]`` table of ``--config``, explicit flags.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from ._backend import AVAILABLE, BACKEND
from .codecs import EVT1_MAGIC, FORMATS, evt1_header, read_events, write_events
from .datasets import convert_dataset, extract_features, resolve_threads, scan_dataset
from .errors import ConfigError, DataError
from .events import stream_stats
from .metrics import (
    KernelSpec,
    entropy,
    mean_feature_norm,
    median_heuristic_sigma,
    mmd2,
    mmfnd,
)
from .representations import ANGLES, EstKernel, HatsConfig, ReprConfig, group_views, represent, rotate
from .simulator import (
    DEFAULT_FRAME_PERIOD,
    SaccadePattern,
    config_from_mapping,
    load_frame_dir,
    load_image,
    saccade_frames,
    save_frame_dir,
    simulate,
    tomllib,
)
from .tensorio import TEN1_MAGIC, read_matrix, read_tensor, tensor_dims, write_tensor


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(**pairs) -> None:
    for k, v in pairs.items():
        if isinstance(v, float):
            v = repr(v)
        print(f"{k}={v}")


# ---------------------------------------------------------------- options

def _add_format(p):
    p.add_argument("--format", choices=FORMATS, default="evt1", help="event file format")
    p.add_argument("--width", type=int, help="sensor width (ncaltech/csv input)")
    p.add_argument("--height", type=int, help="sensor height (ncaltech/csv input)")


def _add_simulator(p):
    p.add_argument("--config", help="TOML file with a [simulator] table")
    p.add_argument("--c-mode", choices=("fixed", "uniform", "perpixel"))
    p.add_argument("--c", type=float, help="fixed contrast threshold")
    p.add_argument("--c-lo", type=float)
    p.add_argument("--c-hi", type=float)
    p.add_argument("--refractory-us", type=float)
    p.add_argument("--log-eps", type=float)
    p.add_argument("--noise-rate", type=float, help="noise events per pixel per second")
    p.add_argument("--seed", type=int)


def _add_saccade(p):
    p.add_argument("--canvas", type=int, nargs=2, metavar=("H", "W"))
    p.add_argument("--segments", help="'dx,dy;dx,dy;...' pixel displacements (write --segments=-3,... if it starts negative)")
    p.add_argument("--frames-per-segment", type=int, default=SaccadePattern().frames_per_segment)
    p.add_argument("--frame-period-us", type=int, default=DEFAULT_FRAME_PERIOD)


def _add_repr(p, kinds=("voxel", "hats", "est")):
    if len(kinds) > 1:
        p.add_argument("--repr", choices=kinds, default="voxel")
    p.add_argument("--bins", type=int, default=9)
    p.add_argument("--kernel", choices=("trilinear", "exp"), default="trilinear", help="EST kernel")
    p.add_argument("--alpha", type=float, default=1.0, help="exponential kernel decay")
    p.add_argument("--cell-size", type=int, default=8)
    p.add_argument("--rho", type=int, default=3)
    p.add_argument("--tau-us", type=float, default=100_000.0)
    p.add_argument("--delta-t-us", type=float, default=math.inf)


def _add_sigma(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sigma", type=float, nargs="+", help="explicit Gaussian bandwidths")
    g.add_argument(
        "--sigma-median", type=float, nargs="+", metavar="MULT",
        help="median-heuristic multipliers (default 0.5 1 2)",
    )


def _simulator_config(args):
    table = {}
    if args.config:
        with open(args.config, "rb") as fh:
            table.update(tomllib.load(fh).get("simulator", {}))
    flags = {
        "threshold_mode": args.c_mode, "c": args.c, "c_lo": args.c_lo, "c_hi": args.c_hi,
        "refractory_us": args.refractory_us, "log_eps": args.log_eps,
        "noise_rate": args.noise_rate, "seed": args.seed,
    }
    table.update({k: v for k, v in flags.items() if v is not None})
    return config_from_mapping(table)


def _repr_config(args, kind=None) -> ReprConfig:
    kernel = EstKernel("exponential" if args.kernel == "exp" else "trilinear", alpha=args.alpha)
    hats_cfg = HatsConfig(args.cell_size, args.rho, args.tau_us, args.delta_t_us)
    cfg = ReprConfig(kind or args.repr, args.bins, kernel, hats_cfg)
    cfg.validate()
    return cfg


def _kernel_spec(args) -> KernelSpec:
    if args.sigma:
        return KernelSpec(bandwidths=tuple(args.sigma))
    if args.sigma_median:
        return KernelSpec(multipliers=tuple(args.sigma_median))
    return KernelSpec()


def _pattern(args) -> SaccadePattern:
    if args.segments:
        try:
            segs = tuple(
                tuple(float(v) for v in seg.split(","))
                for seg in args.segments.split(";") if seg.strip()
            )
        except ValueError:
            raise UsageError(f"bad --segments {args.segments!r}") from None
        if any(len(s) != 2 for s in segs):
            raise UsageError("--segments entries must be dx,dy pairs")
        return SaccadePattern(segs, args.frames_per_segment)
    return SaccadePattern(frames_per_segment=args.frames_per_segment)


def _read_stream(args, path):
    return read_events(path, args.format, width=args.width, height=args.height)


def _geometry(args):
    if args.width and args.height:
        return args.width, args.height
    return None


# ---------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    cfg = _simulator_config(args)
    if bool(args.frames) == bool(args.image):
        raise UsageError("simulate needs exactly one of --frames or --image")
    if args.frames:
        seq = load_frame_dir(args.frames)
    else:
        seq = saccade_frames(load_image(args.image), _pattern(args), args.canvas, args.frame_period_us)
    stream = simulate(seq, cfg)
    nbytes = write_events(stream, args.output, args.out_format)
    _emit(events=len(stream), width=stream.width, height=stream.height, bytes=nbytes,
          output=args.output, backend=BACKEND)
    return 0


def cmd_saccade(args) -> int:
    seq = saccade_frames(load_image(args.image), _pattern(args), args.canvas, args.frame_period_us)
    save_frame_dir(seq, args.out_dir)
    _emit(frames=len(seq.frames), height=seq.height, width=seq.width, output=args.out_dir)
    return 0


def cmd_convert(args) -> int:
    manifest = scan_dataset(args.input, args.format)
    report = convert_dataset(manifest, _repr_config(args), args.out_root, args.threads, _geometry(args))
    if args.report:
        report.save(args.report)
    for r in report.results:
        if r.status == "failed":
            print(f"failed {r.entry.relative_path}: {r.reason}", file=sys.stderr)
    _emit(entries=len(manifest), converted=report.converted, skipped=report.skipped,
          failed=report.failed, wall_time_s=round(report.wall_time, 3))
    return 0


def _cmd_repr(kind):
    def run_repr(args) -> int:
        stream = _read_stream(args, args.input)
        tensor = represent(stream, _repr_config(args, kind))
        write_tensor(tensor, args.output)
        _emit(dims=",".join(map(str, tensor.shape)), output=args.output)
        return 0
    return run_repr


def cmd_rotate(args) -> int:
    t = read_tensor(args.input)
    axes = (1, 2) if t.ndim == 4 else (0, 1)
    out = rotate(t, args.angle, axes)
    write_tensor(out, args.output)
    _emit(dims=",".join(map(str, out.shape)), angle=args.angle, output=args.output)
    return 0


def cmd_group(args) -> int:
    t = read_tensor(args.input)
    if t.ndim != 3:
        raise DataError(f"group expects an [H, W, F] tensor, got dims {t.shape}")
    vs = group_views(t)
    write_tensor(vs.views, args.output)
    _emit(views=vs.n_views, pad_channels=vs.pad_channels,
          dims=",".join(map(str, vs.views.shape)), output=args.output)
    return 0


def cmd_mmd(args) -> int:
    s = read_matrix(args.source)
    t = read_matrix(args.target)
    spec = _kernel_spec(args)
    value = mmd2(s, t, spec)
    sigmas = spec.resolve(s, t) if s.shape[1] == t.shape[1] else []
    _emit(mmd2=value, sigmas=",".join(repr(x) for x in sigmas), n_source=len(s), n_target=len(t))
    return 0


def cmd_afn(args) -> int:
    s = read_matrix(args.source)
    t = read_matrix(args.target)
    _emit(mmfnd=mmfnd(s, t), mean_norm_source=mean_feature_norm(s), mean_norm_target=mean_feature_norm(t))
    return 0


def cmd_entropy(args) -> int:
    p = read_matrix(args.probs)
    _emit(entropy=entropy(p), n=p.shape[0], k=p.shape[1], max_entropy=math.log(p.shape[1]))
    return 0


def shift_report(source_dir, target_dir, repr_config, fmt="evt1", pool="channel_stats",
                 kernel=None, threads=1, geometry=None) -> dict:
    """Overall and per-class discrepancy between two event datasets."""
    src = scan_dataset(source_dir, fmt)
    tgt = scan_dataset(target_dir, fmt)
    fs = extract_features(src, repr_config, pool, threads, geometry)
    ft = extract_features(tgt, repr_config, pool, threads, geometry)
    kernel = kernel or KernelSpec()
    out = {
        "overall.n_source": len(fs),
        "overall.n_target": len(ft),
        "overall.mmd2": mmd2(fs, ft, kernel),
        "overall.sigma_median": median_heuristic_sigma(fs, ft),
        "overall.mmfnd": mmfnd(fs, ft),
        "overall.mean_norm_source": mean_feature_norm(fs),
        "overall.mean_norm_target": mean_feature_norm(ft),
    }
    cls_s = np.array([e.class_name for e in src.entries])
    cls_t = np.array([e.class_name for e in tgt.entries])
    for name in sorted(set(cls_s) & set(cls_t)):
        a = fs[cls_s == name]
        b = ft[cls_t == name]
        out[f"class.{name}.mmd2"] = mmd2(a, b, kernel)
        out[f"class.{name}.mmfnd"] = mmfnd(a, b)
        out[f"class.{name}.mean_norm_source"] = mean_feature_norm(a)
        out[f"class.{name}.mean_norm_target"] = mean_feature_norm(b)
    return out


def cmd_diag(args) -> int:
    report = shift_report(
        args.source_dir, args.target_dir, _repr_config(args), args.format, args.pool,
        _kernel_spec(args), args.threads, _geometry(args),
    )
    if args.probs_source:
        report["entropy_source"] = entropy(read_matrix(args.probs_source))
    if args.probs_target:
        report["entropy_target"] = entropy(read_matrix(args.probs_target))
    _emit(**report)
    return 0


def cmd_stats(args) -> int:
    st = stream_stats(_read_stream(args, args.input))
    _emit(count=st.count, duration_us=st.duration, mean_rate=st.mean_rate,
          positive_fraction=st.positive_fraction)
    return 0


def cmd_info(args) -> int:
    if not args.input:
        _emit(version=__version__, backend=BACKEND, available=",".join(sorted(AVAILABLE)))
        return 0
    with open(args.input, "rb") as fh:
        magic = fh.read(4)
    if magic == EVT1_MAGIC:
        _emit(kind="evt1", **evt1_header(args.input))
    elif magic == TEN1_MAGIC:
        _emit(kind="ten1", dims=",".join(map(str, tensor_dims(args.input))))
    else:
        raise DataError(f"{args.input}: unrecognized file (not EVT1 or TEN1)")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="evshift",
        description="Event-camera simulation, representations and sim-vs-real shift diagnostics.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="frames or a still image to events")
    p.add_argument("--frames", help="directory of PGM frames plus timestamps.txt")
    p.add_argument("--image", help="still image, moved along a saccade")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--out-format", choices=FORMATS, default="evt1")
    _add_simulator(p)
    _add_saccade(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("saccade", help="still image to a PGM frame directory")
    p.add_argument("--image", required=True)
    p.add_argument("--out-dir", required=True)
    _add_saccade(p)
    p.set_defaults(func=cmd_saccade)

    p = sub.add_parser("convert", help="convert a class-per-directory dataset to TEN1 tensors")
    p.add_argument("--input", required=True, help="dataset root")
    p.add_argument("--out-root", required=True)
    p.add_argument("--report", help="write the per-entry conversion report here")
    p.add_argument("--threads", type=int, default=1, help="0 = one per CPU")
    _add_format(p)
    _add_repr(p)
    p.set_defaults(func=cmd_convert)

    for kind in ("voxel", "hats", "est"):
        p = sub.add_parser(kind, help=f"{kind} representation of one event file")
        p.add_argument("input")
        p.add_argument("-o", "--output", required=True)
        _add_format(p)
        _add_repr(p, kinds=(kind,))
        p.set_defaults(func=_cmd_repr(kind))

    p = sub.add_parser("rotate", help="rotate a TEN1 tensor counterclockwise")
    p.add_argument("input")
    p.add_argument("--angle", type=int, choices=ANGLES, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_rotate)

    p = sub.add_parser("group", help="group an [H,W,F] tensor into 3-channel views")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("mmd", help="squared MMD between two feature matrices")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    _add_sigma(p)
    p.set_defaults(func=cmd_mmd)

    p = sub.add_parser("afn", help="mean feature-norm discrepancy")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.set_defaults(func=cmd_afn)

    p = sub.add_parser("entropy", help="mean prediction entropy of a probability matrix")
    p.add_argument("--probs", required=True)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("diag", help="sim-vs-real shift report between two datasets")
    p.add_argument("--source-dir", required=True)
    p.add_argument("--target-dir", required=True)
    p.add_argument("--pool", choices=("mean", "channel_stats"), default="channel_stats")
    p.add_argument("--probs-source")
    p.add_argument("--probs-target")
    p.add_argument("--threads", type=int, default=1, help="0 = one per CPU")
    _add_format(p)
    _add_repr(p)
    _add_sigma(p)
    p.set_defaults(func=cmd_diag)

    p = sub.add_parser("stats", help="event count, duration, rate and polarity balance")
    p.add_argument("input")
    _add_format(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("info", help="describe an EVT1/TEN1 file, or the installation")
    p.add_argument("input", nargs="?")
    p.set_defaults(func=cmd_info)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", None) is not None:
            resolve_threads(args.threads)
        return args.func(args)
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else 0
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"evshift: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"evshift: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
