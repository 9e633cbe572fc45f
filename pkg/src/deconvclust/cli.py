"""Command-line interface: ``deconvclust {run,tables,figures,rates}``.

Every subcommand accepts ``--config FILE`` (a JSON object of
:class:`~deconvclust.bench.ExperimentConfig` fields, or rate-grid fields
for ``rates``); explicit flags override values from the file.

Exit status is 0 on success.  On failure a JSON object
``{"format": "deconvclust-error", "version": 1, "error", "message", "exit_code"}``
is written to stderr and the process exits with ``exit_code``:
2 for invalid parameters, 3 for I/O errors, 1 otherwise.
"""

import argparse
import json
import sys

from . import bench, theory
from .exceptions import ParameterError

EXIT_PARAMETER = 2
EXIT_IO = 3
EXIT_OTHER = 1


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}") from None

    return parse


def _add_experiment_flags(p):
    p.add_argument("--config", help="JSON file with experiment settings")
    p.add_argument("--kernel", choices=["laplace", "gaussian", "delta"])
    p.add_argument("--lam", type=float)
    p.add_argument("--snr", type=float)
    p.add_argument("--function-set", dest="function_set", choices=["smooth", "nonsmooth"])
    p.add_argument("--n", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--pipelines", type=_csv_list(str), help="comma list of before,after,none")
    p.add_argument("--k-mode", dest="k_mode", choices=["known", "auto"])
    p.add_argument("--threshold", choices=["rows", "elements"])
    p.add_argument("--kappa", type=float)
    p.add_argument("--basis", choices=["fourier", "daubechies8"])
    p.add_argument("--cluster-on", dest="cluster_on", choices=["Y", "UY"])
    p.add_argument("--restarts", dest="kmeans_restarts", type=int)
    p.add_argument("--normalization", choices=["grid", "unit_sum"])


_EXPERIMENT_KEYS = (
    "kernel", "lam", "snr", "function_set", "n", "M", "K", "replications", "seed", "pipelines",
    "k_mode", "threshold", "kappa", "basis", "cluster_on", "kmeans_restarts", "normalization",
)


def _experiment_config(args):
    base = bench.ExperimentConfig.from_json_file(args.config) if args.config else bench.ExperimentConfig()
    overrides = {k: getattr(args, k) for k in _EXPERIMENT_KEYS if getattr(args, k, None) is not None}
    return bench.ExperimentConfig.from_dict({**base.to_dict(), **overrides})


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        bench.write_text(out, text)


def cmd_run(args):
    cfg = _experiment_config(args)
    report = bench.run_experiment(cfg)
    _emit(bench.emit_table(report, args.format), args.out)


def cmd_tables(args):
    file_cfg = bench._read_json(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else file_cfg.pop("seed", 0)
    reps = args.replications if args.replications is not None else file_cfg.pop("replications", 100)
    tables = args.tables or file_cfg.pop("tables", [1, 2, 3, 4])
    file_cfg.pop("seed", None)
    file_cfg.pop("replications", None)
    written, failures = bench.reproduce_tables(args.out_dir, seed, reps, tuple(tables), **file_cfg)
    for path in written:
        print(path)
    if failures:
        raise RuntimeError(f"{len(failures)} table cells failed: {json.dumps(failures)}")


def cmd_figures(args):
    cfg = _experiment_config(args)
    for path in bench.emit_figure_data(cfg, args.out_dir):
        print(path)


_RATE_DEFAULTS = {
    "r": 1.0, "gamma": 1.0, "alpha": 0.0, "beta": 0.0,
    "M": [100, 1000, 10000, 100000, 1000000], "K": [2], "delta": [1e-1, 1e-2, 1e-3], "diagonal": False,
}


def rate_grid(spec):
    """``RateParams`` for a grid spec; ``diagonal=True`` sets ``M = delta^-2`` for each delta."""
    unknown = set(spec) - set(_RATE_DEFAULTS)
    if unknown:
        raise ParameterError(f"unknown rate-grid keys {sorted(unknown)}")
    s = {**_RATE_DEFAULTS, **spec}
    common = dict(r=s["r"], gamma=s["gamma"], alpha=s["alpha"], beta=s["beta"])
    if s["diagonal"]:
        pairs = [(int(round(d**-2)), d) for d in s["delta"]]
    else:
        pairs = [(int(M), d) for M in s["M"] for d in s["delta"]]
    return [theory.RateParams(M=M, K=int(K), delta=float(d), **common) for M, d in pairs for K in s["K"]]


def cmd_rates(args):
    spec = bench._read_json(args.config) if args.config else {}
    for key in ("r", "gamma", "alpha", "beta", "M", "K", "delta"):
        value = getattr(args, key)
        if value is not None:
            spec[key] = value
    if args.diagonal:
        spec["diagonal"] = True
    rows = theory.rate_sweep(rate_grid(spec))
    _emit(theory.rate_sweep_csv(rows, header_comment=f"deconvclust-rates v{bench.FORMAT_VERSION}"), args.out)


def build_parser():
    parser = argparse.ArgumentParser(prog="deconvclust", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment and print its report")
    _add_experiment_flags(p)
    p.add_argument("--format", choices=["csv", "json", "text"], default="csv")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("tables", help="reproduce the four simulation tables")
    p.add_argument("--config", help="JSON file: seed, replications, tables and ExperimentConfig overrides")
    p.add_argument("--out-dir", dest="out_dir", default="tables")
    p.add_argument("--seed", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--tables", type=_csv_list(int))
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("figures", help="write estimated curves of one run")
    _add_experiment_flags(p)
    p.add_argument("--out-dir", dest="out_dir", default="figures")
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("rates", help="evaluate the risk rates on a grid")
    p.add_argument("--config", help="JSON file with grid settings")
    p.add_argument("--r", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--M", type=_csv_list(lambda v: int(float(v))))
    p.add_argument("--K", type=_csv_list(int))
    p.add_argument("--delta", type=_csv_list(float))
    p.add_argument("--diagonal", action="store_true", help="use M = delta^-2")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_rates)
    return parser


def _error_json(exc, code):
    return json.dumps(
        {"format": "deconvclust-error", "version": 1, "error": type(exc).__name__, "message": str(exc), "exit_code": code},
        sort_keys=True,
    )


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        sys.stderr.write(_error_json(ValueError("invalid command-line arguments"), EXIT_PARAMETER) + "\n")
        return EXIT_PARAMETER
    try:
        args.func(args)
    except (ValueError, TypeError) as exc:
        sys.stderr.write(_error_json(exc, EXIT_PARAMETER) + "\n")
        return EXIT_PARAMETER
    except OSError as exc:
        sys.stderr.write(_error_json(exc, EXIT_IO) + "\n")
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001 - top-level guard
        sys.stderr.write(_error_json(exc, EXIT_OTHER) + "\n")
        return EXIT_OTHER
    return 0


if __name__ == "__main__":
    sys.exit(main())
