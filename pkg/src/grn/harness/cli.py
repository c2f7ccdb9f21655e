"""Command-line interface.

Verbs: synth, train, eval, sweep, ablate, report. Exit codes: 0 on success,
1 for usage or configuration errors, 2 for runtime failures (diverged
training, missing data, I/O).
"""

import argparse
import logging
import sys
from pathlib import Path

from ..data import load_manifest, load_samples
from ..data.phantom import PhantomConfig, generate_phantom
from ..errors import ConfigError, DataError, GrnError
from ..evaluation import write_report_csv, write_report_json
from ..models import load_checkpoint
from .config import load_experiment_config, resolve_dataset_path
from .experiments import consolidate_reports, run_ablation, run_sweep
from .runs import evaluate_bundle, prepare_dataset, run_cell

log = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the CLI contract reserves 2 for
    runtime failures, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="experiment config JSON")
    common.add_argument("--seed", type=int, help="override the config's seed list")
    common.add_argument("--out", help="output (or dataset) directory")
    common.add_argument("--device", help="torch device, default cpu")

    parser = _Parser(prog="grn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", parents=[common],
                             help="generate a synthetic layered phantom dataset")
    p_synth.add_argument("--layers", type=int, default=6)
    p_synth.add_argument("--size", type=int, default=64)
    p_synth.add_argument("--scans", type=int, default=4)
    p_synth.add_argument("--slices", type=int, default=50)
    p_synth.add_argument("--waviness", type=float, default=1.5)
    p_synth.add_argument("--speckle", type=float, default=0.35)
    p_synth.add_argument("--noise", type=float, default=0.03)
    p_synth.set_defaults(func=cmd_synth)

    p_train = sub.add_parser("train", parents=[common],
                             help="run one training and write its artifacts")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", parents=[common],
                            help="evaluate a checkpoint on a labeled manifest")
    p_eval.add_argument("--checkpoint", help="checkpoint file")
    p_eval.add_argument("--data", help="manifest path of the held-out set")
    p_eval.add_argument("--sge", action="store_true",
                        help="enhance through the generator before segmenting")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="label-fraction grid: train, evaluate, plot")
    p_sweep.set_defaults(func=cmd_sweep)

    p_ablate = sub.add_parser("ablate", parents=[common],
                              help="ablation grid at one labeled fraction")
    p_ablate.set_defaults(func=cmd_ablate)

    p_report = sub.add_parser("report", parents=[common],
                              help="consolidate metrics.json files under a directory")
    p_report.set_defaults(func=cmd_report)

    return parser


def _require(args, name):
    value = getattr(args, name, None)
    if not value:
        raise ConfigError(f"this command needs --{name}")
    return value


def _load_experiment(args):
    config_path = _require(args, "config")
    overrides = {}
    if args.out:
        overrides["out_dir"] = args.out
    if args.seed is not None:
        overrides["seeds"] = [args.seed]
    experiment = load_experiment_config(config_path, overrides)
    if args.device:
        experiment.train["device"] = args.device
    return experiment


def cmd_synth(args):
    out = _require(args, "out")
    config = PhantomConfig(
        height=args.size,
        width=args.size,
        layer_count=args.layers,
        waviness=args.waviness,
        speckle_strength=args.speckle,
        additive_sigma=args.noise,
        seed=args.seed if args.seed is not None else 0,
    )
    generate_phantom(config, args.scans, args.slices, out)
    print(Path(out) / "manifest.json")
    return 0


def cmd_train(args):
    experiment = _load_experiment(args)
    manifest = prepare_dataset(experiment)
    record = run_cell(
        experiment, manifest, experiment.mode, experiment.ablation,
        experiment.label_fractions[0], experiment.seeds[0],
        Path(experiment.out_dir),
        eval_split="validation", use_sge=experiment.eval_sge,
    )
    print(record.checkpoint_path)
    return 0


def cmd_eval(args):
    checkpoint = _require(args, "checkpoint")
    data = _require(args, "data")
    manifest = load_manifest(resolve_dataset_path(data))
    missing = [e for e in manifest.entries if not e.labeled]
    if missing:
        raise DataError(
            f"evaluation needs ground truth for every entry; {len(missing)} "
            f"entries have no mask"
        )
    bundle = load_checkpoint(checkpoint, expect_class_count=manifest.class_count)
    samples = load_samples(manifest)
    report = evaluate_bundle(bundle, samples, manifest.class_count, use_sge=args.sge)
    out_dir = Path(args.out) if args.out else Path(checkpoint).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report_json(
        report, out_dir / "metrics.json",
        use_sge=bool(args.sge), checkpoint=str(checkpoint),
    )
    write_report_csv(report, out_dir / "metrics.csv")
    overall = report.overall["dsc"]["mean"]
    print(f"overall DSC {overall:.2f}" if overall is not None else "overall DSC undefined")
    return 0


def cmd_sweep(args):
    experiment = _load_experiment(args)
    _, csv_path, plot_path = run_sweep(experiment)
    print(csv_path)
    print(plot_path)
    return 0


def cmd_ablate(args):
    experiment = _load_experiment(args)
    table, csv_path = run_ablation(experiment)
    for row in table:
        print(
            f"{row['variant']:<34s} dsc={row['dsc']:8.2f} "
            f"delta={row['delta_vs_supervised']:+8.2f}"
        )
    print(csv_path)
    return 0


def cmd_report(args):
    out = _require(args, "out")
    entries, summary_path = consolidate_reports(out)
    for entry in entries:
        dsc = f"{entry['dsc']:.2f}" if entry["dsc"] is not None else "n/a"
        print(f"{entry['path']}: dsc={dsc}")
    print(summary_path)
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if not logging.getLogger().handlers:
        logging.basicConfig(
            level=logging.INFO, stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )
    try:
        return args.func(args) or 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (GrnError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
