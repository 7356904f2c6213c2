"""Command line interface: ``mhm learn | apply | evaluate | synth | export-curves``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import curves as curve_export
from .image import SUPPORTED_SUFFIXES
from .pipeline import (
    OVERWRITE_POLICIES,
    ConfigError,
    JobConfig,
    LearnError,
    apply_batch,
    evaluate_compare,
    evaluate_loo,
    image_files,
    ingest,
    learn,
    synthesize,
)
from .synthetic import CurveSpecError, parse_curve
from .transfer import TransformDocumentError, load_transform

log = logging.getLogger("mhmatch")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2


def _created():
    """Honor SOURCE_DATE_EPOCH so repeated runs give identical documents."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    return None


def _add_job_flags(p, resolution=True):
    p.add_argument("--config", help="JSON file with job settings; flags take precedence")
    p.add_argument("-j", "--workers", type=int, help="parallel workers (env MHM_WORKERS)")
    if resolution:
        p.add_argument("-K", "--quantiles", dest="K", type=int, help="quantile points (256)")
        p.add_argument("-G", "--grid", dest="G", type=int, help="curve grid intervals (255)")


def _add_pair_flags(p):
    p.add_argument("--damaged", help="directory of damaged scans")
    p.add_argument("--reference", help="directory of reference scans (matched by stem)")
    p.add_argument("--manifest", help="CSV manifest with damaged,reference[,id] columns")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mhm", description="Median histogram matching for color-shifted photographs.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn CMY transfer curves from image pairs")
    _add_pair_flags(p)
    _add_job_flags(p)
    p.add_argument("-o", "--output-dir", required=True)

    p = sub.add_parser("apply", help="restore images with a learned transform")
    p.add_argument("transform", help="transform document (JSON)")
    p.add_argument("inputs", nargs="+", help="image files or directories")
    p.add_argument("-o", "--output-dir", required=True)
    p.add_argument("--overwrite", choices=OVERWRITE_POLICIES)
    _add_job_flags(p, resolution=False)

    p = sub.add_parser("evaluate", help="leave-one-out or manual-edit comparison reports")
    p.add_argument("mode", choices=("loo", "compare"))
    _add_pair_flags(p)
    p.add_argument("--edited", help="compare: directory of manually edited images")
    p.add_argument("--transform", help="compare: transform document; learned from pairs if absent")
    p.add_argument("--originals", help="compare: directory of uncorrected images "
                                       "(defaults to --damaged)")
    p.add_argument("-B", "--bins", dest="B", type=int, help="density bins (256)")
    p.add_argument("--density-source", choices=("damaged", "reference"))
    p.add_argument("--format", dest="report_format", choices=("text", "json", "both"))
    p.add_argument("-o", "--output-dir", help="also write report files here")
    _add_job_flags(p)

    p = sub.add_parser("synth", help="degrade clean images with known CMY curves")
    p.add_argument("clean_dir")
    p.add_argument("-o", "--output-dir", required=True)
    for name in ("cyan", "magenta", "yellow"):
        p.add_argument(f"--{name}", default="identity",
                       help="identity | gamma:E | points:x=y,... (clean -> damaged)")
    p.add_argument("--noise", type=float, default=0.0,
                   help="per-image log-exponent jitter amplitude")
    p.add_argument("--seed", type=int)
    p.add_argument("-G", "--grid", dest="G", type=int)
    p.add_argument("--config")
    p.add_argument("-j", "--workers", type=int)

    p = sub.add_parser("export-curves", help="write per-channel CSVs and an SVG plot")
    p.add_argument("transform")
    p.add_argument("--estimates", nargs="*", default=(),
                   help="per-pair transform documents drawn in grey")
    p.add_argument("-o", "--output-dir", required=True)
    return parser


def _config(args, **extra):
    keys = ("K", "G", "B", "workers", "overwrite", "report_format", "density_source", "seed")
    overrides = {k: getattr(args, k, None) for k in keys}
    overrides.update(extra)
    return JobConfig.load(getattr(args, "config", None), **overrides)


def _manifest(args):
    return ingest(args.damaged, args.reference, args.manifest)


def _expand_inputs(items):
    out = []
    for item in items:
        path = Path(item)
        if path.is_dir():
            out.extend(image_files(path))
        elif path.suffix.lower() in SUPPORTED_SUFFIXES or path.exists():
            out.append(path)
        else:
            raise ConfigError(f"no such input: {item}")
    return out


def cmd_learn(args):
    config = _config(args, output_dir=args.output_dir)
    result = learn(_manifest(args), config, created=_created())
    print(f"learned median of {len(result.estimates)} pairs -> {result.paths['transform']}")
    return EXIT_PARTIAL if result.failures else EXIT_OK


def cmd_apply(args):
    config = _config(args)
    ts = load_transform(args.transform)
    inputs = _expand_inputs(args.inputs)
    result = apply_batch(inputs, ts, args.output_dir, config.workers, config.overwrite)
    print(f"wrote {len(result.written)}, skipped {len(result.skipped)}, "
          f"failed {len(result.failures)}")
    return EXIT_PARTIAL if result.failures else EXIT_OK


def _emit(report, config, out_dir, stem):
    fmt = config.report_format
    if fmt in ("text", "both"):
        sys.stdout.write(report.format_table())
    if fmt in ("json", "both"):
        sys.stdout.write(report.to_json())
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.txt").write_text(report.format_table(), encoding="utf-8")
        (out / f"{stem}.json").write_text(report.to_json(), encoding="utf-8")


def cmd_evaluate(args):
    config = _config(args)
    if args.mode == "loo":
        report, failures = evaluate_loo(_manifest(args), config)
        _emit(report, config, args.output_dir, "loo_report")
    else:
        originals = args.originals or args.damaged
        if not args.edited or not originals:
            raise ConfigError("compare mode needs --edited and --originals (or --damaged)")
        if args.transform:
            ts = load_transform(args.transform)
        else:
            ts = learn(_manifest(args), config, created=_created()).transform
        report, failures = evaluate_compare(originals, args.edited, ts, config.workers)
        _emit(report, config, args.output_dir, "compare_report")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_synth(args):
    config = _config(args)
    curves = [parse_curve(getattr(args, c)) for c in ("cyan", "magenta", "yellow")]
    truth, result = synthesize(args.clean_dir, curves, args.output_dir, config,
                               noise=args.noise, created=_created())
    print(f"wrote {len(result.written)} degraded images and ground_truth.json")
    return EXIT_PARTIAL if result.failures else EXIT_OK


def cmd_export_curves(args):
    ts = load_transform(args.transform)
    estimates = [load_transform(p) for p in args.estimates]
    out = Path(args.output_dir)
    paths = curve_export.write_curve_csvs(ts, out)
    curve_export.write_svg(out / "curves.svg", ts, estimates)
    print(f"wrote {len(paths)} CSVs and curves.svg to {out}")
    return EXIT_OK


COMMANDS = {
    "learn": cmd_learn,
    "apply": cmd_apply,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
    "export-curves": cmd_export_curves,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, CurveSpecError, TransformDocumentError) as exc:
        print(f"mhm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LearnError, OSError) as exc:
        print(f"mhm: error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
