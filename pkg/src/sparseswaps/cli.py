"""Command-line front end.

Subcommands cover the whole pipeline on SSWT tensor files: `gram`
accumulates the calibration Gram matrix, `warmstart` builds a feasible
initial mask, `refine` runs the 1-swap engine, `eval` scores a mask,
`oracle` certifies small instances by brute force, and `bench` sweeps the
synthetic suite into CSV/JSON reports.

Every command is deterministic given its flags and seed. Config precedence
is flags > JSON config file > defaults, and reports echo the resolved
configuration plus SHA-256 hashes of the tensor artifacts involved.

Exit codes: 0 success, 2 usage or validation failure, 3 enumeration budget
exceeded, 1 internal error.
"""

import argparse
import csv
import hashlib
import json
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .constraints import PerRow, format_constraint, parse_constraint
from .errors import (
    IncompatibleConstraint,
    InfeasibleWarmstart,
    InvalidConfig,
    IoFailure,
    MalformedHeader,
    NonBinaryEntry,
    NonFiniteValue,
    ShapeMismatch,
    SparseSwapsError,
    TooLarge,
    TruncatedPayload,
    DimensionOverflow,
)
from .gram import accumulate_gram, check_gram
from .kernels import active_backend
from .objective import full_loss, row_loss_gram
from .oracle import brute_force_row, is_one_swap_optimal
from .swapengine import RefineConfig, refine_matrix
from .synth import SynthConfig, generate_layer
from . import tensorio
from .tensorio import CalibrationMeta
from .warmstart import (
    prune_count_from_fraction,
    score_magnitude,
    score_ria,
    score_wanda,
    select_mask,
)

_USAGE_ERRORS = (
    MalformedHeader,
    DimensionOverflow,
    NonFiniteValue,
    TruncatedPayload,
    NonBinaryEntry,
    IoFailure,
    ShapeMismatch,
    IncompatibleConstraint,
    InfeasibleWarmstart,
    InvalidConfig,
)

CRITERIA = ("magnitude", "wanda", "ria")


def _label(exc) -> str:
    # ShapeMismatch -> "shape mismatch"
    return re.sub(r"(?<!^)(?=[A-Z])", " ", type(exc).__name__).lower()


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2))


class _Resolved:
    """Flag values with JSON-config fallback (flags > file > defaults)."""

    def __init__(self, args):
        self._args = args
        self._file = {}
        if getattr(args, "config", None):
            try:
                self._file = json.loads(Path(args.config).read_text())
            except OSError as exc:
                raise IoFailure(f"cannot read config {args.config}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise InvalidConfig(f"config {args.config}: {exc}") from exc
            if not isinstance(self._file, dict):
                raise InvalidConfig(f"config {args.config}: expected a JSON object")

    def get(self, key, default=None, required=False, cast=None):
        value = getattr(self._args, key, None)
        if value is None:
            value = self._file.get(key)
        if value is None:
            value = default
        if value is None and required:
            raise InvalidConfig(f"missing required option --{key.replace('_', '-')}")
        if value is not None and cast is not None:
            try:
                value = cast(value)
            except (TypeError, ValueError) as exc:
                raise InvalidConfig(f"bad value for {key}: {exc}") from exc
        return value


def _int_list(value):
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    items = [s for s in str(value).split(",") if s.strip() != ""]
    return [int(s) for s in items]


def _str_list(value):
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [s.strip() for s in str(value).split(",") if s.strip() != ""]


def _score_matrix(criterion, weights, gram, ria_exponent):
    if criterion == "magnitude":
        return score_magnitude(weights)
    if criterion == "wanda":
        return score_wanda(weights, gram)
    if criterion == "ria":
        return score_ria(weights, gram, a=ria_exponent)
    raise InvalidConfig(f"unknown criterion {criterion!r}; choose from {CRITERIA}")


# ----------------------------------------------------------------- commands


def cmd_gram(args) -> int:
    res = _Resolved(args)
    out = res.get("out", required=True)
    t0 = time.perf_counter()
    blocks = [tensorio.load_matrix(p) for p in args.activations]
    g = accumulate_gram(blocks)
    tensorio.save_matrix(g, out)
    _print_json(
        {
            "d_in": int(g.shape[0]),
            "total_cols": int(sum(b.shape[1] for b in blocks)),
            "trace": float(np.trace(g)),
            "out": str(out),
            "timing_ms": {"gram": (time.perf_counter() - t0) * 1000.0},
        }
    )
    return 0


def cmd_warmstart(args) -> int:
    res = _Resolved(args)
    t0 = time.perf_counter()
    weights = tensorio.load_matrix(res.get("weights", required=True))
    gram = check_gram(tensorio.load_matrix(res.get("gram", required=True)))
    criterion = res.get("criterion", default="wanda")
    constraint = parse_constraint(res.get("constraint", required=True))
    ria_exponent = res.get("ria_exponent", default=0.5, cast=float)
    scores = _score_matrix(criterion, weights, gram, ria_exponent)
    mask = select_mask(scores, constraint)
    out = res.get("mask_out", required=True)
    tensorio.save_mask(mask, out)
    _print_json(
        {
            "criterion": criterion,
            "constraint": format_constraint(constraint),
            "realized_sparsity": float(np.mean(mask == 0.0)),
            "mask_out": str(out),
            "timing_ms": {"warmstart": (time.perf_counter() - t0) * 1000.0},
        }
    )
    return 0


def _report_rows(report):
    return [
        {
            "row": r.row,
            "loss_before": r.loss_before,
            "loss_after": r.loss_after,
            "swaps": r.swaps,
            "reduction_pct": r.reduction_pct,
        }
        for r in report.rows
    ]


def _write_refine_csv(path, report):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["layer", "row", "loss_before", "loss_after", "swaps", "reduction_pct"]
        )
        for r in report.rows:
            writer.writerow(
                [
                    0,
                    r.row,
                    repr(r.loss_before),
                    repr(r.loss_after),
                    r.swaps,
                    "" if r.reduction_pct is None else repr(r.reduction_pct),
                ]
            )


def cmd_refine(args) -> int:
    res = _Resolved(args)
    paths = {
        "weights": res.get("weights", required=True),
        "gram": res.get("gram", required=True),
        "mask_in": res.get("mask_in", required=True),
    }
    t0 = time.perf_counter()
    weights = tensorio.load_matrix(paths["weights"])
    gram = check_gram(tensorio.load_matrix(paths["gram"]))
    mask_in = tensorio.load_mask(paths["mask_in"])
    load_ms = (time.perf_counter() - t0) * 1000.0

    constraint = parse_constraint(res.get("constraint", required=True))
    cfg = RefineConfig(
        t_max=res.get("t_max", required=True, cast=int),
        accept_threshold=res.get("epsilon", default=0.0, cast=float),
    )
    mask_out_path = res.get("mask_out", required=True)

    mask, report = refine_matrix(weights, mask_in, gram, constraint, cfg)
    tensorio.save_mask(mask, mask_out_path)

    summary = {
        "command": "refine",
        "version": __version__,
        "config": {
            "constraint": format_constraint(constraint),
            "t_max": cfg.t_max,
            "epsilon": cfg.accept_threshold,
            "backend": active_backend(),
        },
        "inputs": {k: {"path": str(p), "sha256": _sha256(p)} for k, p in paths.items()},
        "layer": {
            "rows": int(weights.shape[0]),
            "cols": int(weights.shape[1]),
            "total_before": report.total_before,
            "total_after": report.total_after,
            "mean_reduction_pct": report.mean_reduction_pct,
            "swaps": int(sum(r.swaps for r in report.rows)),
        },
        "timing_ms": {"load": load_ms, "refine": report.wall_time_ms},
        "mask_out": str(mask_out_path),
    }

    report_path = res.get("report")
    if report_path is not None:
        report_path = Path(report_path)
        payload = dict(summary)
        payload["rows"] = _report_rows(report)
        report_path.write_text(json.dumps(payload, indent=2) + "\n")
        _write_refine_csv(report_path.with_suffix(".csv"), report)
        summary["report"] = str(report_path)

    _print_json(summary)
    return 0


def cmd_eval(args) -> int:
    res = _Resolved(args)
    weights = tensorio.load_matrix(res.get("weights", required=True))
    gram = check_gram(tensorio.load_matrix(res.get("gram", required=True)))
    mask = tensorio.load_mask(res.get("mask", required=True))
    total, breakdown = full_loss(weights, mask, gram)
    _print_json(
        {
            "total": total,
            "per_row": [
                {"row": b.row_index, "loss": b.loss, "pruned": b.pruned_count}
                for b in breakdown
            ],
        }
    )
    return 0


def cmd_oracle(args) -> int:
    res = _Resolved(args)
    weights = tensorio.load_matrix(res.get("weights", required=True))
    gram = check_gram(tensorio.load_matrix(res.get("gram", required=True)))
    constraint = parse_constraint(res.get("constraint", required=True))
    mask_path = res.get("mask")
    mask = tensorio.load_mask(mask_path) if mask_path else None
    if mask is not None and mask.shape != weights.shape:
        raise ShapeMismatch(f"mask {mask.shape} != weights {weights.shape}")
    epsilon = res.get("epsilon", default=0.0, cast=float)

    rows = []
    total_opt = 0.0
    for i in range(weights.shape[0]):
        result = brute_force_row(weights[i], gram, constraint)
        entry = {
            "row": i,
            "optimum": result.best_loss,
            "n_evaluated": result.n_evaluated,
        }
        if mask is not None:
            loss = row_loss_gram(weights[i], mask[i], gram)
            entry["mask_loss"] = loss
            entry["gap"] = loss - result.best_loss
            entry["one_swap_optimal"] = is_one_swap_optimal(
                weights[i], mask[i], gram, constraint, epsilon
            )
        total_opt += result.best_loss
        rows.append(entry)
    _print_json({"total_optimum": total_opt, "rows": rows})
    return 0


def cmd_bench(args) -> int:
    res = _Resolved(args)
    out_dir = Path(res.get("out_dir", required=True))
    out_dir.mkdir(parents=True, exist_ok=True)

    cfg = SynthConfig(
        d_in=res.get("d_in", default=128, cast=int),
        d_out=res.get("d_out", default=32, cast=int),
        n_cols=res.get("n_cols", default=256, cast=int),
        corr_rank=res.get("corr_rank", default=4, cast=int),
        outlier_count=res.get("outlier_count", default=8, cast=int),
        outlier_scale=res.get("outlier_scale", default=10.0, cast=float),
        seed=res.get("seed", default=0, cast=int),
    )
    n_layers = res.get("layers", default=1, cast=int)
    if n_layers < 1:
        raise InvalidConfig("layers must be >= 1")
    criteria = res.get("criteria", default="wanda", cast=_str_list)
    for crit in criteria:
        if crit not in CRITERIA:
            raise InvalidConfig(f"unknown criterion {crit!r}; choose from {CRITERIA}")
    t_max_list = res.get("t_max_list", default="0,1,2,5", cast=_int_list)
    if not t_max_list:
        raise InvalidConfig("t_max list is empty; pass e.g. --t-max-list 0,1,2,5")
    epsilon = res.get("epsilon", default=0.0, cast=float)
    ria_exponent = res.get("ria_exponent", default=0.5, cast=float)

    constraint_spec = res.get("constraint")
    if constraint_spec is not None:
        constraint = parse_constraint(constraint_spec)
    else:
        sparsity = res.get("sparsity", default=0.6, cast=float)
        constraint = PerRow(prune_count_from_fraction(cfg.d_in, sparsity))

    resolved = {
        "d_in": cfg.d_in,
        "d_out": cfg.d_out,
        "n_cols": cfg.n_cols,
        "corr_rank": cfg.corr_rank,
        "outlier_count": cfg.outlier_count,
        "outlier_scale": cfg.outlier_scale,
        "seed": cfg.seed,
        "layers": n_layers,
        "criteria": criteria,
        "t_max_list": t_max_list,
        "epsilon": epsilon,
        "ria_exponent": ria_exponent,
        "constraint": format_constraint(constraint),
        "backend": active_backend(),
    }

    artifacts = {}
    csv_path = out_dir / "bench.csv"
    aggregate = {}
    per_layer = []
    phase_ms = {"generate": 0.0, "gram": 0.0, "warmstart": 0.0, "refine": 0.0}

    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "layer",
                "row",
                "criterion",
                "t_max",
                "loss_warm",
                "loss_refined",
                "swaps",
                "reduction_pct",
            ]
        )
        for layer in range(n_layers):
            layer_cfg = SynthConfig(
                d_in=cfg.d_in,
                d_out=cfg.d_out,
                n_cols=cfg.n_cols,
                corr_rank=cfg.corr_rank,
                outlier_count=cfg.outlier_count,
                outlier_scale=cfg.outlier_scale,
                seed=cfg.seed + layer,
            )
            t0 = time.perf_counter()
            weights, x = generate_layer(layer_cfg)
            t1 = time.perf_counter()
            gram = accumulate_gram([x])
            t2 = time.perf_counter()
            phase_ms["generate"] += (t1 - t0) * 1000.0
            phase_ms["gram"] += (t2 - t1) * 1000.0
            for name, mat in (("W", weights), ("X", x), ("G", gram)):
                path = out_dir / f"layer{layer}_{name}.sswt"
                tensorio.save_matrix(mat, path)
                artifacts[path.name] = _sha256(path)

            for crit in criteria:
                t0 = time.perf_counter()
                scores = _score_matrix(crit, weights, gram, ria_exponent)
                warm = select_mask(scores, constraint)
                phase_ms["warmstart"] += (time.perf_counter() - t0) * 1000.0
                for t_max in t_max_list:
                    run_cfg = RefineConfig(t_max=t_max, accept_threshold=epsilon)
                    t0 = time.perf_counter()
                    _, report = refine_matrix(weights, warm, gram, constraint, run_cfg)
                    wall_ms = (time.perf_counter() - t0) * 1000.0
                    phase_ms["refine"] += wall_ms

                    for r in report.rows:
                        writer.writerow(
                            [
                                layer,
                                r.row,
                                crit,
                                t_max,
                                repr(r.loss_before),
                                repr(r.loss_after),
                                r.swaps,
                                "" if r.reduction_pct is None else repr(r.reduction_pct),
                            ]
                        )

                    key = (crit, t_max)
                    agg = aggregate.setdefault(
                        key,
                        {
                            "criterion": crit,
                            "t_max": t_max,
                            "total_warm": 0.0,
                            "total_refined": 0.0,
                            "reductions": [],
                            "rows_improved": 0,
                            "rows_total": 0,
                            "swaps": 0,
                            "wall_time_ms": 0.0,
                        },
                    )
                    agg["total_warm"] += report.total_before
                    agg["total_refined"] += report.total_after
                    agg["reductions"].extend(
                        r.reduction_pct for r in report.rows if r.reduction_pct is not None
                    )
                    agg["rows_improved"] += sum(
                        1
                        for r in report.rows
                        if r.reduction_pct is not None and r.reduction_pct > 0.0
                    )
                    agg["rows_total"] += len(report.rows)
                    agg["swaps"] += sum(r.swaps for r in report.rows)
                    agg["wall_time_ms"] += wall_ms

                    per_layer.append(
                        {
                            "layer": layer,
                            "criterion": crit,
                            "t_max": t_max,
                            "mean_reduction_pct": report.mean_reduction_pct,
                            "total_warm": report.total_before,
                            "total_refined": report.total_after,
                        }
                    )

    records = []
    for (crit, t_max) in sorted(aggregate, key=lambda k: (criteria.index(k[0]), k[1])):
        agg = aggregate[(crit, t_max)]
        reductions = agg.pop("reductions")
        agg["mean_reduction_pct"] = float(np.mean(reductions)) if reductions else None
        records.append(agg)

    summary = {
        "command": "bench",
        "version": __version__,
        "config": resolved,
        "calibration": {
            "n_samples": 1,
            "seq_len": cfg.n_cols,
            "total_cols": CalibrationMeta.from_counts(1, cfg.n_cols).total_cols,
        },
        "artifacts": artifacts,
        "records": records,
        "per_layer": per_layer,
        "csv": csv_path.name,
        "timing_ms": phase_ms,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _print_json(
        {
            "out_dir": str(out_dir),
            "csv": str(csv_path),
            "records": len(records),
        }
    )
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparseswaps",
        description="Exact per-row pruning-mask refinement via greedy 1-swaps.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")

    p = sub.add_parser("gram", parents=[common], help="accumulate G = X X^T from activation blocks")
    p.add_argument("activations", nargs="+", help="SSWT activation blocks (d_in x b_i)")
    p.add_argument("--out", help="output path for the Gram matrix")
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("warmstart", parents=[common], help="build a feasible initial mask")
    p.add_argument("--weights")
    p.add_argument("--gram")
    p.add_argument("--criterion", choices=CRITERIA)
    p.add_argument("--constraint", help='"perrow:<p>" or "nm:<N>:<M>"')
    p.add_argument("--ria-exponent", type=float, dest="ria_exponent")
    p.add_argument("--mask-out", dest="mask_out")
    p.set_defaults(func=cmd_warmstart)

    p = sub.add_parser("refine", parents=[common], help="run 1-swap refinement on a mask")
    p.add_argument("--weights")
    p.add_argument("--gram")
    p.add_argument("--mask-in", dest="mask_in")
    p.add_argument("--constraint")
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--mask-out", dest="mask_out")
    p.add_argument("--report", help="write a JSON report here plus a .csv sibling")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("eval", parents=[common], help="evaluate the loss of a mask")
    p.add_argument("--weights")
    p.add_argument("--gram")
    p.add_argument("--mask")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", parents=[common], help="brute-force optimum on small instances")
    p.add_argument("--weights")
    p.add_argument("--gram")
    p.add_argument("--constraint")
    p.add_argument("--mask", help="optional mask to certify against the optimum")
    p.add_argument("--epsilon", type=float)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", parents=[common], help="synthetic benchmark sweep")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--d-in", dest="d_in", type=int)
    p.add_argument("--d-out", dest="d_out", type=int)
    p.add_argument("--n-cols", dest="n_cols", type=int)
    p.add_argument("--corr-rank", dest="corr_rank", type=int)
    p.add_argument("--outlier-count", dest="outlier_count", type=int)
    p.add_argument("--outlier-scale", dest="outlier_scale", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--criteria", help="comma-separated list from magnitude,wanda,ria")
    p.add_argument("--t-max-list", dest="t_max_list", help="comma-separated iteration budgets")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--ria-exponent", type=float, dest="ria_exponent")
    p.add_argument("--constraint")
    p.add_argument("--sparsity", type=float, help="per-row prune fraction if no --constraint")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except TooLarge as exc:
        print(f"error: {_label(exc)}: {exc}", file=sys.stderr)
        return 3
    except _USAGE_ERRORS as exc:
        print(f"error: {_label(exc)}: {exc}", file=sys.stderr)
        return 2
    except SparseSwapsError as exc:
        print(f"error: {_label(exc)}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
