"""Command-line entry point: filter, describe, train-eval, bench, sweep."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .bench import (
    LAYOUTS,
    DatasetError,
    DescriptorCache,
    SplitProtocol,
    describe_paths,
    load_dataset,
    run_experiment,
    sweep_steps,
    write_report,
    write_sweep,
)
from .config import PipelineConfig, format_lbp_set, parse_lbp_set
from .descriptor import DescriptorConfig
from .diffusion import SolverParams, diffusion_step
from .features import Classifier, FitError, save_model
from .grid import InvalidMeshError, MeshParams
from .imageio import ImageReadError, is_image_file, load_image, save_pgm
from .kernels import ConvergenceError
from .lbp import DEFAULT_LBP_SET, SamplingError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4

# flags that never enter a reproducibility snapshot
_VOLATILE = {"command", "config", "jobs", "verbose", "out", "output", "output_dir", "cache_dir", "model_out"}

log = logging.getLogger("pplbp")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1 (got {v})")
    return v


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("values must be integers >= 1")
    return vals


def _add_pde_flags(p, steps_default=50):
    g = p.add_argument_group("diffusion")
    g.add_argument("--steps", type=_positive_int, default=steps_default, help="number of images N in the scale space")
    g.add_argument("--tau", type=float, default=5.0, help="damping coefficient")
    g.add_argument("--dt", type=float, default=1.0, help="time step")
    g.add_argument("--dx", type=float, default=1.0, help="mesh step along rows")
    g.add_argument("--dy", type=float, default=1.0, help="mesh step along columns")
    g.add_argument("--tol", type=float, default=SolverParams().tol, help="PCG relative residual tolerance")
    g.add_argument("--max-iter", type=_positive_int, default=SolverParams().max_iter, help="PCG iteration cap")


def _add_descriptor_flags(p):
    _add_pde_flags(p)
    g = p.add_argument_group("descriptor")
    g.add_argument(
        "--lbp", default=format_lbp_set(DEFAULT_LBP_SET), help="semicolon-separated P,R pairs for the riu2 encoders"
    )
    g.add_argument("--no-t0", action="store_true", help="encode U_1..U_N instead of U_0..U_{N-1}")
    g.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1, help="worker processes")
    g.add_argument("--cache-dir", type=Path, default=None, help="content-addressed descriptor cache")


def _add_protocol_flags(p):
    p.add_argument("--dataset", type=Path, required=True, help="dataset root, one directory per class")
    p.add_argument("--layout", choices=LAYOUTS, default="flat", help="directory layout (kth adds group subdirectories)")
    p.add_argument(
        "--protocol", choices=["random-half", "k-per-class", "group-holdout"], default="random-half", help="split protocol"
    )
    p.add_argument("--reps", type=_positive_int, default=10, help="repetitions for random protocols")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--k", type=_positive_int, default=None, help="training images per class (k-per-class)")
    p.add_argument("--train-groups", type=_int_list, default=None, help="group ids used for training (group-holdout)")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="pplbp",
        description=(
            "Texture recognition with pseudo-parabolic scale-space LBP descriptors. "
            "Defaults: tau=5, dt=dx=dy=1, N=50, (P,R) in (8,1) (16,2) (24,3) (24,4)."
        ),
        formatter_class=fmt,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--config", type=Path, default=None, help="config snapshot (config.json) to reproduce a run")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="evolve one image and write U_1..U_N as PGM", formatter_class=fmt)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output-dir", type=Path, required=True)
    _add_pde_flags(p)

    p = sub.add_parser("describe", help="write descriptors of images to CSV", formatter_class=fmt)
    p.add_argument("--input", type=Path, required=True, help="image file or directory (searched recursively)")
    p.add_argument("--output", type=Path, required=True, help="features CSV")
    _add_descriptor_flags(p)

    p = sub.add_parser("train-eval", help="fit KL+LDA on one feature CSV, predict another", formatter_class=fmt)
    p.add_argument("--train", type=Path, required=True, help="training features CSV")
    p.add_argument("--test", type=Path, required=True, help="test features CSV")
    p.add_argument("--train-labels", type=Path, default=None, help="CSV path,label (default: parent directory name)")
    p.add_argument("--test-labels", type=Path, default=None, help="CSV path,label (default: parent directory name)")
    p.add_argument("--components", type=_positive_int, default=None, help="KL components (default: 99%% variance rule)")
    p.add_argument("--output", type=Path, required=True, help="predictions CSV")
    p.add_argument("--model-out", type=Path, default=None, help="write the fitted model (.npz)")

    for name, helptext in (("bench", "run a classification experiment"), ("sweep", "accuracy as a function of N")):
        p = sub.add_parser(name, help=helptext, formatter_class=fmt)
        _add_protocol_flags(p)
        _add_descriptor_flags(p)
        if name == "sweep":
            p.add_argument("--n-values", type=_int_list, default=[10, 20, 30, 40, 50, 60])
    return parser


_PATH_ARGS = {"dataset", "input", "train", "test", "train_labels", "test_labels"}


def _parse(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    """Parse ``argv``; values from a ``--config`` snapshot become defaults."""
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    snap = json.loads(args.config.read_text())
    saved = {k: v for k, v in snap.get("args", {}).items() if k not in _VOLATILE}
    saved = {k: Path(v) if k in _PATH_ARGS and v is not None else v for k, v in saved.items()}
    parser._subparsers._group_actions[0].choices[args.command].set_defaults(**saved)  # noqa: SLF001
    return parser.parse_args(argv)


def _validate(a) -> None:
    """Build every config record up front so invalid values fail before any work."""
    if a.command == "filter":
        MeshParams(a.dx, a.dy, a.dt, a.tau)
        SolverParams(a.tol, a.max_iter)
    elif a.command in ("describe", "bench", "sweep"):
        _descriptor_config(a)
        if a.command != "describe":
            _protocol(a)


def _descriptor_config(a) -> DescriptorConfig:
    return DescriptorConfig(
        steps=a.steps,
        mesh=MeshParams(a.dx, a.dy, a.dt, a.tau),
        solver=SolverParams(a.tol, a.max_iter),
        lbp_set=parse_lbp_set(a.lbp),
        include_t0=not a.no_t0,
    )


def _protocol(a) -> SplitProtocol:
    return SplitProtocol(kind=a.protocol, repetitions=a.reps, seed=a.seed, k=a.k, train_groups=a.train_groups)


def _args_snapshot(a) -> dict:
    out = {}
    for k, v in vars(a).items():
        if k in _VOLATILE:
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


def _print_config(snapshot: dict) -> None:
    print("resolved config: " + json.dumps(snapshot, sort_keys=True), file=sys.stderr)


def _collect_images(path: Path) -> list[Path]:
    if path.is_dir():
        found = sorted(p for p in path.rglob("*") if is_image_file(p))
        if not found:
            raise DatasetError(f"no images under {path}")
        return found
    if not path.exists():
        raise DatasetError(f"{path} does not exist")
    return [path]


def cmd_filter(a) -> dict:
    mesh = MeshParams(a.dx, a.dy, a.dt, a.tau)
    sp = SolverParams(a.tol, a.max_iter)
    snapshot = {"command": "filter", "args": _args_snapshot(a), "mesh": vars(mesh), "solver": vars(sp)}
    _print_config(snapshot)
    img = load_image(a.input)
    a.output_dir.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(a.steps)))
    u = img
    for n in range(1, a.steps + 1):
        u = diffusion_step(u, mesh, sp)
        save_pgm(a.output_dir / f"{a.input.stem}_t{n:0{width}d}.pgm", u)
    (a.output_dir / "config.json").write_text(json.dumps(snapshot, indent=2, sort_keys=True) + "\n")
    return snapshot


def write_features_csv(path: Path, paths, X: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for p, row in zip(paths, X):
            w.writerow([str(p), *map(repr, row.tolist())])


def read_features_csv(path: Path) -> tuple[list[str], np.ndarray]:
    names, rows = [], []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec:
                continue
            names.append(rec[0])
            try:
                rows.append([float(v) for v in rec[1:]])
            except ValueError as exc:
                raise DatasetError(f"{path}: bad feature row for {rec[0]}: {exc}") from None
    if not rows:
        raise DatasetError(f"{path} holds no feature rows")
    return names, np.array(rows)


def _read_labels(names: list[str], label_csv: Path | None) -> list[str]:
    if label_csv is None:
        return [Path(n).parent.name for n in names]
    table = {}
    with open(label_csv, newline="") as fh:
        for rec in csv.reader(fh):
            if rec:
                table[rec[0]] = rec[1]
    missing = [n for n in names if n not in table]
    if missing:
        raise DatasetError(f"{label_csv} has no label for {missing[0]}")
    return [table[n] for n in names]


def cmd_describe(a) -> dict:
    cfg = _descriptor_config(a)
    snapshot = {"command": "describe", "args": _args_snapshot(a), "descriptor": cfg.to_dict()}
    _print_config(snapshot)
    paths = _collect_images(a.input)
    cache = DescriptorCache(a.cache_dir) if a.cache_dir else None
    X = describe_paths(paths, cfg, a.jobs, cache)
    a.output.parent.mkdir(parents=True, exist_ok=True)
    write_features_csv(a.output, paths, X)
    a.output.with_suffix(".config.json").write_text(json.dumps(snapshot, indent=2, sort_keys=True) + "\n")
    return snapshot


def cmd_train_eval(a) -> dict:
    snapshot = {"command": "train-eval", "args": _args_snapshot(a)}
    _print_config(snapshot)
    train_names, Xtr = read_features_csv(a.train)
    test_names, Xte = read_features_csv(a.test)
    if Xtr.shape[1] != Xte.shape[1]:
        raise DatasetError(f"feature length mismatch: train {Xtr.shape[1]}, test {Xte.shape[1]}")
    ytr = np.array(_read_labels(train_names, a.train_labels))
    clf = Classifier.fit(Xtr, ytr, a.components)
    pred = clf.predict(Xte)
    a.output.parent.mkdir(parents=True, exist_ok=True)
    rows = [["path", "predicted"]] + [[n, str(p)] for n, p in zip(test_names, pred)]
    with open(a.output, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    if a.test_labels is not None or all(Path(n).parent.name in set(ytr.tolist()) for n in test_names):
        yte = np.array(_read_labels(test_names, a.test_labels))
        print(f"accuracy {np.mean(pred == yte):.6f} ({int(np.sum(pred == yte))}/{yte.size})")
    if a.model_out is not None:
        save_model(a.model_out, clf, snapshot)
    snapshot["components"] = clf.k
    return snapshot


def cmd_bench(a) -> dict:
    pipeline = PipelineConfig(_descriptor_config(a), _protocol(a))
    snapshot = {"command": a.command, "args": _args_snapshot(a), **pipeline.to_dict()}
    _print_config(snapshot)
    ds = load_dataset(a.dataset, a.layout)
    cache = DescriptorCache(a.cache_dir) if a.cache_dir else None
    if a.command == "bench":
        report = run_experiment(ds, pipeline.protocol, pipeline.descriptor, a.jobs, cache, config=snapshot)
        write_report(report, a.out)
        print(f"mean accuracy {report.mean_accuracy:.6f} std {report.std_accuracy:.6f} over {len(report.accuracies)} splits")
    else:
        rows = sweep_steps(ds, pipeline.protocol, pipeline.descriptor, a.n_values, a.jobs, cache)
        a.out.mkdir(parents=True, exist_ok=True)
        write_sweep(rows, a.out / "sweep.csv")
        (a.out / "config.json").write_text(json.dumps(snapshot, indent=2, sort_keys=True) + "\n")
        for n, mean, std in rows:
            print(f"N={n} mean accuracy {mean:.6f} std {std:.6f}")
    return snapshot


COMMANDS = {
    "filter": cmd_filter,
    "describe": cmd_describe,
    "train-eval": cmd_train_eval,
    "bench": cmd_bench,
    "sweep": cmd_bench,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _parse(parser, argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    except (OSError, json.JSONDecodeError) as exc:
        print(f"usage error: cannot read config snapshot: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _validate(args)
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    log.info("kernel backend: %s", kernels.BACKEND)
    try:
        COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DatasetError, ImageReadError, SamplingError, InvalidMeshError, FitError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
