"""Command-line entry point: ``harfe <command> ...``.

Settings resolve as flag > config file > built-in default.  Any config key can
be overridden with ``--set section.key=value``.
"""

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from .config import load_config
from .data import load_csv, mse, read_feature_matrix, save_csv
from .exceptions import HarfeError
from .experiments import TRIAL_COLUMNS, run_benchmark, run_diagnostics, run_trial, write_json
from .model import load_model, predict, save_model, variable_importance, write_importance_csv
from .synthetic import SyntheticSpec, generate_dataset

log = logging.getLogger("harfe")


def _config(args, extra=()):
    overrides = list(args.set or ())
    if getattr(args, "seed", None) is not None:
        overrides.append(f"protocol.seed={args.seed}")
    if getattr(args, "output", None) is not None:
        overrides.append(f"output.directory={args.output}")
    overrides.extend(extra)
    return load_config(args.config, overrides)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _table_csv(rows, columns):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def cmd_fit(args):
    cfg = _config(args).require_training()
    row, model, report, extras = run_trial(cfg, 0)
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    write_json(out / "fit_report.json", {
        "config": cfg.resolved(),
        "metrics": row,
        "report": report.summary(),
        "support_trace": [list(s) for s in report.support_trace],
        "timing": extras,
    })
    print(f"fit: {report.iterations_run} iterations, converged={report.converged}, "
          f"relative residual={report.final_relative_residual:.3e}, test rel_error={row['rel_error']:.4e}, "
          f"test mse={row['mse']:.4e}")
    print(f"wrote {out / 'model.json'} and {out / 'fit_report.json'}")
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    if args.target_column is not None:
        target = int(args.target_column) if args.target_column.lstrip("-").isdigit() else args.target_column
        data = load_csv(args.input, has_header=args.has_header, target_column=target,
                        delimiter=args.delimiter)
        X, y = data.X, data.y
    else:
        X, y = read_feature_matrix(args.input, has_header=args.has_header, delimiter=args.delimiter), None
    pred = predict(model, X)
    text = "prediction\n" + "".join(f"{v!r}\n" for v in pred.tolist())
    if args.predictions is None:
        sys.stdout.write(text)
    else:
        Path(args.predictions).write_text(text)
    if y is not None:
        print(f"mse={mse(y, pred):.6e}", file=sys.stderr)
    return 0


def cmd_benchmark(args):
    extra = [f"protocol.trials={args.trials}"] if args.trials is not None else []
    if args.lambdas:
        values = [float(v) for v in args.lambdas.split(",") if v.strip()]
        extra += ["solver.lambda=null", "solver.m_lambda=null", f"solver.lambdas={values!r}"]
    cfg = _config(args, extra).require_training()
    rows, summary, timings = run_benchmark(cfg)
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    if "csv" in cfg.output.formats:
        (out / "trials.csv").write_text(_table_csv(rows, TRIAL_COLUMNS))
        cols = list(summary)
        (out / "summary.csv").write_text(_table_csv([summary], cols))
    if "json" in cfg.output.formats:
        # the output location is left out so reruns elsewhere give identical files
        settings = {k: v for k, v in cfg.resolved().items() if k != "output"}
        write_json(out / "summary.json", {"config": settings, "summary": summary, "trials": rows})
    write_json(out / "timings.json", timings)
    stat = summary["statistic"]
    print(f"{cfg.name}: {summary['trials']} trials, {stat} rel_error={summary['rel_error']:.4e}, "
          f"{stat} mse={summary['mse']:.4e}"
          + (f", {stat} normalized mse={summary['mse_normalized']:.4e}"
             if summary["mse_normalized"] is not None else ""))
    return 0


def cmd_importance(args):
    model = load_model(args.model)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for mode in ("magnitude", "count"):
        hist = variable_importance(model, mode)
        write_importance_csv(hist, out / f"importance_{mode}.csv")
        top = hist.top(min(args.top, model.d))
        print(f"{mode}: top {len(top)} dimensions {top.tolist()}")
    return 0


def cmd_diagnose(args):
    cfg = _config(args)
    report = run_diagnostics(cfg)
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / "diagnostics.json").write_text(report.to_json() + "\n")
    for r in report.rip:
        print(f"delta_{r.s} = {r.delta_s:.6g}")
    if report.coherence is not None:
        print(f"coherence = {report.coherence:.6g}")
    if report.convergence is not None:
        print(f"convergence: beta_hat={report.convergence.beta_hat}, floor={report.convergence.floor}")
    return 0


def cmd_gen_synthetic(args):
    if args.config is not None:
        cfg = _config(args)
        t, p = cfg.target, cfg.protocol
        if t is None or t.synthetic is None:
            raise ValueError("gen-synthetic needs a synthetic target")
        spec = SyntheticSpec(t.synthetic, t.d, p.m_train or 500, p.m_test or 500,
                             tuple(t.input_distribution) if t.input_distribution else None,
                             t.noise_sigma, p.seed)
        out = Path(cfg.output.directory)
    else:
        if args.target is None:
            raise ValueError("give a config file or --target")
        spec = SyntheticSpec(args.target, args.d, args.m_train, args.m_test, None, args.noise,
                             args.seed or 0)
        out = Path(args.output or ".")
    train, test = generate_dataset(spec)
    out.mkdir(parents=True, exist_ok=True)
    save_csv(train, out / "train.csv")
    save_csv(test, out / "test.csv")
    print(f"wrote {train.n_samples} training and {test.n_samples} test rows to {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="harfe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p, required=True):
        p.add_argument("config", nargs=None if required else "?", help="YAML/JSON experiment config")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key, e.g. solver.s=100 (repeatable)")
        p.add_argument("--seed", type=int, help="master seed (protocol.seed)")
        p.add_argument("--output", help="output directory (output.directory)")

    p = sub.add_parser("fit", help="fit one model and save it with its fit report")
    with_config(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="CSV of inputs")
    p.add_argument("--predictions", help="output CSV (default: stdout)")
    p.add_argument("--no-header", dest="has_header", action="store_false")
    p.add_argument("--target-column", help="if the CSV holds a target column, report MSE against it")
    p.add_argument("--delimiter", default=",")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("benchmark", help="run seeded trials and aggregate the errors")
    with_config(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--lambdas", help="comma-separated lambda values to select from on a validation split")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("importance", help="per-variable importance histograms of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--output", default=".")
    p.add_argument("--top", type=int, default=5)
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("diagnose", help="RIP constants, coherence and convergence checks")
    with_config(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("gen-synthetic", help="write a synthetic train/test pair as CSV")
    with_config(p, required=False)
    p.add_argument("--target")
    p.add_argument("--d", type=int)
    p.add_argument("--m-train", type=int, default=500)
    p.add_argument("--m-test", type=int, default=500)
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: invalid config\n{exc}", file=sys.stderr)
        return 2
    except (HarfeError, OSError, ValueError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
