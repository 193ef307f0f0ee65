"""Command line entry point.

    urbandensity analyze --optical P --sar P [--resolution-m F] [--config cfg.json] [--out DIR]
    urbandensity synth --spec spec.json --out DIR

Exit codes: 0 success, 1 stage failure, 2 input/config error.
"""

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import AnalysisError, InputError
from .pipeline import PipelineConfig, load_config, run_pipeline

log = logging.getLogger("urbandensity")

EXIT_OK, EXIT_STAGE, EXIT_INPUT = 0, 1, 2


def _parser():
    p = argparse.ArgumentParser(prog="urbandensity", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the full pipeline on an optical/SAR pair")
    a.add_argument("--optical", required=True, help="optical PNG or .f32 raster")
    a.add_argument("--sar", required=True, help="SAR PNG or .f32 raster")
    a.add_argument("--resolution-m", type=float, help="pixel size in meters (overrides sidecars)")
    a.add_argument("--config", help="pipeline config JSON")
    a.add_argument("--out", default="out", help="output directory (default: ./out)")
    a.add_argument("--timestamp", action="store_true",
                   help="add a generated_at key to report.json")

    s = sub.add_parser("synth", help="write a synthetic optical/SAR pair with ground truth")
    s.add_argument("--spec", required=True, help="synthetic scene spec JSON")
    s.add_argument("--out", required=True, help="output directory")
    return p


def _analyze(args):
    from .outputs import emit_outputs, validate_config

    raw = load_config(args.config) if args.config else {}
    validate_config(raw)
    cfg = PipelineConfig.from_dict(
        raw, optical=args.optical, sar=args.sar, resolution_m=args.resolution_m, out_dir=args.out
    )
    result = run_pipeline(cfg)
    if args.timestamp:
        result.report["generated_at"] = datetime.now(timezone.utc).isoformat()
    paths = emit_outputs(result, cfg.out_dir)
    m = result.report["metrics"]
    th = result.report["thresholds"]
    print(f"thresholds: water={th['tau_water']:.4f} urban={th['tau_urban']:.4f} ({th['provenance']})")
    print(f"alpha={m['alpha_per_km']:.5f}/km  LD={m['ld_km']:.3f} km  "
          f"peaks={m['n_peaks']}  morphology={m['morphology']}")
    for r in result.report["regions"]["regions"]:
        print(f"region {r['start_km']:.2f}-{r['end_km']:.2f} km: {r['label']}")
    for w in result.report["warnings"]:
        print(f"warning: {w}")
    print(f"wrote {paths['report.json'].parent}")


def _synth(args):
    from .raster import save_png
    from .synthetic import SyntheticSpec, generate_scene_pair, write_ground_truth

    try:
        raw = json.loads(Path(args.spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read spec {args.spec}: {exc}") from exc
    spec = SyntheticSpec.from_dict(raw)
    optical, sar = generate_scene_pair(spec)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        save_png(optical.values, out / "optical.png", spec.resolution, bits=8)
        save_png(sar.values, out / "sar.png", spec.resolution, bits=16)
        write_ground_truth(spec, out / "ground_truth.json")
    except OSError as exc:
        raise InputError(f"cannot write to {out}: {exc}") from exc
    print(f"wrote {out / 'optical.png'}, {out / 'sar.png'}, {out / 'ground_truth.json'}")


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "analyze":
            _analyze(args)
        else:
            _synth(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AnalysisError as exc:
        print(f"error: stage failed: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
