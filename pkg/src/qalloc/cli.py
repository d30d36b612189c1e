"""Command-line interface: ``qalloc {calibrate,build-circuit,simulate,backtest}``.

Exit codes: 0 on success, 2 for usage or validation errors, 1 for anything
unexpected. Errors are reported on stderr as a single
``error: <ErrorName>: <message>`` line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import dumps as dump_circuit
from .circuit import lower
from .distload import DEFAULT_BOUNDS_K, QubitAllocation, synthesis_cost
from .errors import QallocError
from .market import build_model, load_model, load_prices, save_model
from .portfolio import (
    POLICY_NAMES,
    RebalancePolicy,
    backtest,
    delta_sigma,
    delta_sigma_disc,
    prepare,
    read_return_path,
    run_execution,
    write_return_path,
)
from .statevec import child_seed


def _floats(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _alloc(text):
    try:
        return QubitAllocation.parse(text)
    except QallocError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        v = 0
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _metadata(command, args) -> dict:
    params = {k: (str(v) if isinstance(v, (Path, QubitAllocation)) else v)
              for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    return {"tool": "qalloc", "version": __version__, "command": command, "params": params}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_calibrate(args) -> int:
    series = load_prices(args.prices, fill_gaps=args.fill_gaps)
    alloc = args.alloc or QubitAllocation((3,) * series.num_assets)
    model = build_model(args.mu_annual, alloc, args.bounds_k, series=series)
    target = _out_dir(args) / "model.json"
    save_model(target, model, metadata=_metadata("calibrate", args))
    print(f"wrote {target}")
    print("mu_monthly: " + ", ".join(f"{x:.7f}" for x in model.mu_monthly))
    return 0


def cmd_build_circuit(args) -> int:
    model = load_model(args.model)
    if args.alloc is not None:
        model = model.with_alloc(args.alloc)
    prepared = prepare(model)
    cost = synthesis_cost(model.alloc, prepared.dist)
    out = _out_dir(args)
    meta = _metadata("build-circuit", args)
    (out / "circuit.json").write_text(dump_circuit(prepared.circuit, meta))
    (out / "circuit_lowered.json").write_text(dump_circuit(lower(prepared.circuit), meta))
    _dump_json(out / "cost.json", {"metadata": meta, **cost.to_dict()})
    c = cost.lowered_counts
    print(f"alloc [{model.alloc}]: {model.alloc.total} qubits, RY={c['RY']} CX={c['CX']} "
          f"(predicted RY={cost.predicted_ry}); synthesis {cost.synthesis_seconds * 1e3:.3f} ms, "
          f"lowering {cost.lowering_seconds * 1e3:.3f} ms")
    return 0


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    if args.alloc is not None:
        model = model.with_alloc(args.alloc)
    prepared = prepare(model)
    out = _out_dir(args)
    meta = _metadata("simulate", args)
    disc = delta_sigma_disc(model, prepared)

    rows, maxima, paths = [], [], []
    for i in range(args.executions):
        seed = child_seed(args.seed, i)
        path = run_execution(model, args.shots, seed, execution=i, prepared=prepared)
        write_return_path(out / f"returns_{i:04d}.csv", path,
                          {**meta, "execution": i, "child_seed": seed})
        paths.append(path.returns)
        if args.shots >= 2:
            ds = delta_sigma(model, path)
            m = float(np.abs(ds).max())
            maxima.append(m)
            rows.append([i, seed, repr(m), *(repr(float(x)) for x in ds[np.triu_indices(len(ds))])])
        else:
            rows.append([i, seed, "", *[""] * (model.num_assets * (model.num_assets + 1) // 2)])

    names = model.names
    pairs = [f"ds_{names[a]}_{names[b]}" for a, b in zip(*np.triu_indices(len(names)))]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["execution", "seed", "max_abs_delta_sigma", *pairs])
    w.writerows(rows)
    (out / "summary.csv").write_text(buf.getvalue())

    pooled = np.vstack(paths)
    summary = {
        "metadata": meta,
        "executions": args.executions,
        "shots": args.shots,
        "delta_sigma_disc": disc.tolist(),
        "median_max_abs_delta_sigma": float(np.median(maxima)) if maxima else None,
        "mean_max_abs_delta_sigma": float(np.mean(maxima)) if maxima else None,
        "pooled_delta_sigma": (np.cov(pooled, rowvar=False, ddof=1) - model.sigma_monthly).tolist()
        if pooled.shape[0] >= 2 else None,
    }
    _dump_json(out / "summary.json", summary)
    if maxima:
        print(f"{args.executions} execution(s) x {args.shots} shots; "
              f"median max|dSigma| = {summary['median_max_abs_delta_sigma']:.3e}")
    return 0


def cmd_backtest(args) -> int:
    path = read_return_path(args.returns)
    model = load_model(args.model) if args.model else None
    weights = args.weights
    if weights is None:
        weights = [1.0 / path.returns.shape[1]] * path.returns.shape[1]
    report = backtest(path, weights, RebalancePolicy.parse(args.policy), model=model)
    target = _out_dir(args) / f"report_{args.policy}.json"
    _dump_json(target, {"metadata": _metadata("backtest", args), **report.to_dict()})
    line = f"{args.policy}: terminal wealth {report.terminal_wealth:.6f}"
    if report.annual_return is not None:
        line += (f", annual return {report.annual_return:.4%}, "
                 f"annual vol {report.annual_volatility:.4%}")
    print(line)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"error: UsageError: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qalloc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qalloc {__version__}")
    parser.add_argument("--config", type=Path,
                        help="JSON file of flag defaults; command-line flags override it")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("calibrate", help="estimate a market model from a price CSV")
    p.add_argument("--prices", type=Path, required=True)
    p.add_argument("--mu-annual", type=_floats, required=True)
    p.add_argument("--alloc", type=_alloc, default=None, help="qubits per asset, e.g. 3,3,3")
    p.add_argument("--bounds-k", type=float, default=DEFAULT_BOUNDS_K)
    p.add_argument("--fill-gaps", action="store_true",
                   help="forward-fill missing months instead of failing")
    p.add_argument("--out", type=Path, default=Path("."))
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("build-circuit", help="synthesize the state-preparation circuit")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--alloc", type=_alloc, default=None, help="override the model's allocation")
    p.add_argument("--out", type=Path, default=Path("."))
    p.set_defaults(func=cmd_build_circuit)

    p = sub.add_parser("simulate", help="sample executions and write return paths")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--alloc", type=_alloc, default=None, help="override the model's allocation")
    p.add_argument("--shots", type=_positive_int, default=120)
    p.add_argument("--executions", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("backtest", help="backtest a rebalancing policy on a return path")
    p.add_argument("--returns", type=Path, required=True)
    p.add_argument("--weights", type=_floats, default=None,
                   help="target weights (default: equal weight)")
    p.add_argument("--policy", choices=POLICY_NAMES, default="monthly")
    p.add_argument("--model", type=Path, default=None,
                   help="model file; adds covariance diagnostics to the report")
    p.add_argument("--out", type=Path, default=Path("."))
    p.set_defaults(func=cmd_backtest)
    return parser


def _expand_config(argv: list[str]) -> list[str]:
    """Splice flags from ``--config FILE`` in front of the explicit ones."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise QallocError(f"cannot read config {path}: {exc}") from exc
    flags = []
    for key, value in cfg.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                flags.append(flag)
        else:
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            flags += [flag, str(value)]
    cmd = next((j for j, a in enumerate(rest) if not a.startswith("-")), None)
    if cmd is None:
        return rest
    return rest[:cmd + 1] + flags + rest[cmd + 1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_expand_config(argv))
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except (QallocError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: InternalError: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
