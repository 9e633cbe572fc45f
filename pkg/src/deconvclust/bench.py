"""Monte Carlo harness for the simulation study: experiments, tables and figure data.

Seeding
-------
Replication ``i`` of an experiment with seed ``s`` uses child ``i`` of
``SeedSequence(s)``.  That child spawns two more: one draws the balanced
random assignment, the other seeds the observation noise.  Replications
may run on several threads (``DECONVCLUST_THREADS``), but results are
collected and summed in replication order, so reports do not depend on
the thread count.

File formats
------------
Every CSV starts with a ``# <format> v<version>`` line followed by
``# key=value`` metadata lines.  Report CSV columns::

    pipeline,mean_error,sd_mean,mean_miss_rate,replications

Table CSV columns are :data:`TABLE_COLUMNS`.  Floats are written with
``repr`` so parsing and rewriting a file reproduces it exactly.  JSON
outputs follow the schemas shipped in ``deconvclust/schemas``.
"""

import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import pipelines, signals, transforms
from .clustering import ClusteringAssignment, KMeansConfig
from .exceptions import ParameterError
from .forward_model import KernelSpec, build_instance, config_hash, simulate
from .transforms import Basis

FORMAT_VERSION = 1
REPORT_FORMAT = "deconvclust-report"
TABLE_FORMAT = "deconvclust-table"
FIGURE_FORMAT = "deconvclust-figure"
THREADS_ENV = "DECONVCLUST_THREADS"

PIPELINES = ("before", "after", "none")
REPORT_COLUMNS = ("pipeline", "mean_error", "sd_mean", "mean_miss_rate", "replications")
VALUE_COLUMNS = ("before_error", "before_miss", "after_error", "after_miss", "none_error")
TABLE_COLUMNS = ("lambda", "snr") + VALUE_COLUMNS + ("before_sd", "after_sd", "none_sd")

# kernel family, function set, lambda grid, SNR grid
REFERENCE_TABLES = {
    1: ("laplace", "smooth", (7.0, 5.0, 3.0), (3.0, 5.0, 7.0)),
    2: ("gaussian", "smooth", (15.0, 12.0, 10.0), (5.0, 7.0, 10.0)),
    3: ("laplace", "nonsmooth", (7.0, 5.0, 3.0), (3.0, 5.0, 7.0)),
    4: ("gaussian", "nonsmooth", (15.0, 12.0, 10.0), (5.0, 7.0, 10.0)),
}


def n_threads():
    """Worker threads for replications: ``$DECONVCLUST_THREADS`` or 1."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation setting.

    ``threshold`` and ``basis`` default to the choices tied to the
    function set (rows and Fourier for 'smooth', elements and
    Daubechies-8 for 'nonsmooth').  ``kmeans_restarts`` defaults to a
    single k-means++ start, the protocol used for table reproduction.
    """

    kernel: str = "laplace"
    lam: float = 5.0
    snr: float = 5.0
    function_set: str = "smooth"
    n: int = 256
    M: int = 60
    K: int = 4
    replications: int = 100
    seed: int = 0
    pipelines: tuple = PIPELINES
    k_mode: str = "known"
    threshold: str = None
    kappa: float = 3.0
    basis: str = None
    cluster_on: str = "Y"
    kmeans_restarts: int = 1
    normalization: str = "grid"

    def __post_init__(self):
        object.__setattr__(self, "pipelines", tuple(self.pipelines))
        if self.replications < 1:
            raise ParameterError("replications must be >= 1")
        if self.function_set not in (signals.SMOOTH, signals.NONSMOOTH):
            raise ParameterError(f"function_set must be 'smooth' or 'nonsmooth', got {self.function_set!r}")
        if self.K != 4:
            raise ParameterError("the test-function sets have exactly K=4 members")
        if self.M < self.K or self.M % self.K:
            raise ParameterError(f"balanced design needs K dividing M, got M={self.M}, K={self.K}")
        unknown = set(self.pipelines) - set(PIPELINES)
        if unknown:
            raise ParameterError(f"unknown pipelines {sorted(unknown)}; choose from {PIPELINES}")
        if self.k_mode not in ("known", "auto"):
            raise ParameterError("k_mode must be 'known' or 'auto'")
        if not self.snr > 0:
            raise ParameterError("snr must be positive")
        KernelSpec(self.kernel, self.lam, self.normalization)
        Basis(self.resolved_basis, self.n)
        self.pipeline_config()

    @property
    def resolved_basis(self):
        if self.basis is not None:
            return self.basis
        return transforms.FOURIER if self.function_set == signals.SMOOTH else transforms.DAUBECHIES8

    @property
    def resolved_threshold(self):
        if self.threshold is not None:
            return self.threshold
        return pipelines.ROWS if self.function_set == signals.SMOOTH else pipelines.ELEMENTS

    def kernel_spec(self):
        return KernelSpec(self.kernel, self.lam, self.normalization)

    def pipeline_config(self):
        return pipelines.PipelineConfig(
            basis=self.resolved_basis,
            threshold=pipelines.ThresholdRule(self.resolved_threshold, self.kappa),
            cluster_on=self.cluster_on,
            kmeans=KMeansConfig(restarts=self.kmeans_restarts),
        )

    def to_dict(self):
        d = asdict(self)
        d["pipelines"] = list(self.pipelines)
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ParameterError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json_file(cls, path):
        return cls.from_dict(_read_json(path))

    def provenance_hash(self):
        return config_hash(self.to_dict())


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc.strerror}") from exc


@dataclass
class ExperimentReport:
    """Aggregated results of one experiment, one row per pipeline."""

    config: dict
    config_hash: str
    rows: list = field(default_factory=list)
    elapsed_s: float = 0.0

    def row(self, pipeline):
        for r in self.rows:
            if r["pipeline"] == pipeline:
                return r
        raise KeyError(pipeline)

    def to_dict(self):
        return {
            "format": REPORT_FORMAT,
            "version": FORMAT_VERSION,
            "config": self.config,
            "config_hash": self.config_hash,
            "elapsed_s": self.elapsed_s,
            "rows": self.rows,
        }


def replication_seeds(seed, replications):
    """(assignment seed, noise seed) pairs, one per replication."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(replications):
        a, e = child.spawn(2)
        out.append((a, int(e.generate_state(1)[0])))
    return out


def make_instance(config, assignment_seed):
    basis = Basis(config.resolved_basis, config.n)
    a = ClusteringAssignment.balanced_random(config.M, config.K, np.random.default_rng(assignment_seed))
    L = signals.function_set(config.function_set, config.n)
    return build_instance(L, a, config.kernel_spec(), config.snr, basis, function_set=config.function_set)


def run_pipelines(X, instance, config):
    """Run the configured pipelines on one data set; returns ``{name: PipelineOutput}``."""
    cfg = config.pipeline_config()
    K = "auto" if config.k_mode == "auto" else config.K
    out = {}
    if "before" in config.pipelines:
        out["before"] = pipelines.clustering_before(X, instance, K, cfg)
    if "after" in config.pipelines:
        out["after"] = pipelines.clustering_after(X, instance, config.K, cfg)
    if "none" in config.pipelines:
        out["none"] = pipelines.no_clustering(X, instance, cfg)
    return out


def _replicate(config, seeds):
    a_seed, e_seed = seeds
    inst = make_instance(config, a_seed)
    res = run_pipelines(simulate(inst, e_seed), inst, config)
    return {k: (v.error, v.miss_rate) for k, v in res.items()}


def _sd_of_mean(values):
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


def run_experiment(config):
    """Run all replications of ``config`` and aggregate per pipeline.

    ``sd_mean`` is the sample SD of the per-replication errors divided by
    ``sqrt(replications)`` (0 for a single replication).
    """
    start = time.perf_counter()
    seeds = replication_seeds(config.seed, config.replications)
    workers = n_threads()
    if workers == 1:
        results = [_replicate(config, s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: _replicate(config, s), seeds))
    rows = []
    for name in PIPELINES:
        if name not in config.pipelines:
            continue
        errors = [r[name][0] for r in results]
        misses = [r[name][1] for r in results]
        rows.append(
            {
                "pipeline": name,
                "mean_error": float(np.mean(errors)),
                "sd_mean": _sd_of_mean(errors),
                "mean_miss_rate": None if misses[0] is None else float(np.mean(misses)),
                "replications": config.replications,
            }
        )
    return ExperimentReport(
        config=config.to_dict(),
        config_hash=config.provenance_hash(),
        rows=rows,
        elapsed_s=time.perf_counter() - start,
    )


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(text):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _write_csv(fmt, meta, columns, rows):
    buf = io.StringIO()
    buf.write(f"# {fmt} v{FORMAT_VERSION}\n")
    for key, value in meta.items():
        buf.write(f"# {key}={value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def parse_csv(text):
    """Parse a report or table CSV.

    Returns
    -------
    fmt : str
    meta : dict
        The ``# key=value`` lines (values as strings).
    columns : list of str
    rows : list of dict
    """
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ParameterError("missing versioned header line")
    fmt, _, version = lines[0][2:].rpartition(" v")
    if version != str(FORMAT_VERSION):
        raise ParameterError(f"unsupported format version {version!r}")
    meta = {}
    i = 1
    while i < len(lines) and lines[i].startswith("# "):
        key, _, value = lines[i][2:].partition("=")
        meta[key] = value
        i += 1
    reader = csv.reader(lines[i:])
    columns = next(reader)
    rows = [dict(zip(columns, map(_parse_value, rec))) for rec in reader]
    return fmt, meta, columns, rows


def report_to_csv(report):
    meta = {
        "config": json.dumps(report.config, sort_keys=True),
        "config_hash": report.config_hash,
        "elapsed_s": repr(float(report.elapsed_s)),
    }
    return _write_csv(REPORT_FORMAT, meta, REPORT_COLUMNS, report.rows)


def report_from_csv(text):
    fmt, meta, columns, rows = parse_csv(text)
    if fmt != REPORT_FORMAT or tuple(columns) != REPORT_COLUMNS:
        raise ParameterError(f"not a {REPORT_FORMAT} file")
    for r in rows:
        r["mean_error"] = float(r["mean_error"])
        r["sd_mean"] = float(r["sd_mean"])
        if r["mean_miss_rate"] is not None:
            r["mean_miss_rate"] = float(r["mean_miss_rate"])
    return ExperimentReport(
        config=json.loads(meta["config"]),
        config_hash=meta["config_hash"],
        rows=rows,
        elapsed_s=float(meta["elapsed_s"]),
    )


def report_to_text(report):
    head = f"{'pipeline':<10}{'mean_error':>14}{'sd_mean':>12}{'miss_rate':>12}"
    lines = [head]
    for r in report.rows:
        miss = "-" if r["mean_miss_rate"] is None else f"{r['mean_miss_rate']:.4f}"
        lines.append(f"{r['pipeline']:<10}{r['mean_error']:>14.4f}{r['sd_mean']:>12.4f}{miss:>12}")
    return "\n".join(lines) + "\n"


def emit_table(report, fmt="csv"):
    """Serialize an :class:`ExperimentReport` as 'csv', 'json' or 'text'."""
    if fmt == "csv":
        return report_to_csv(report)
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "text":
        return report_to_text(report)
    raise ParameterError(f"unknown format {fmt!r}; expected csv, json or text")


def load_schema(name="report"):
    """The shipped JSON schema ``'report'`` or ``'table'``."""
    text = resources.files("deconvclust").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def write_text(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def emit_figure_data(config, out_dir):
    """Write one curve file per cluster representative from a single seeded run.

    File ``h{k}.csv`` (``k = 1..K``) holds ``x, truth`` and one column per
    configured pipeline, evaluated for the first object in cluster ``k``.
    Returns the list of written paths.
    """
    a_seed, e_seed = replication_seeds(config.seed, 1)[0]
    inst = make_instance(config, a_seed)
    res = run_pipelines(simulate(inst, e_seed), inst, config)
    x = signals.grid(config.n)
    names = [p for p in PIPELINES if p in config.pipelines]
    meta = {"config": json.dumps(config.to_dict(), sort_keys=True), "config_hash": config.provenance_hash()}
    paths = []
    for k in range(config.K):
        m = int(np.flatnonzero(inst.assignment.labels == k)[0])
        rows = [
            {"x": float(x[i]), "truth": float(inst.F_true[i, m]), **{p: float(res[p].F_hat[i, m]) for p in names}}
            for i in range(config.n)
        ]
        text = _write_csv(FIGURE_FORMAT, {**meta, "object": m}, ("x", "truth", *names), rows)
        paths.append(write_text(Path(out_dir) / f"h{k + 1}.csv", text))
    return paths


def table_configs(table, seed=0, replications=100, **overrides):
    """``ExperimentConfig`` for every (lambda, SNR) cell of a table, in row order."""
    if table not in REFERENCE_TABLES:
        raise ParameterError(f"table must be one of {sorted(REFERENCE_TABLES)}")
    kernel, fset, lams, snrs = REFERENCE_TABLES[table]
    configs = []
    for i, (lam, snr) in enumerate((lam, snr) for lam in lams for snr in snrs):
        cell_seed = int(np.random.SeedSequence([seed, table, i]).generate_state(1)[0])
        configs.append(
            ExperimentConfig(
                kernel=kernel, lam=lam, snr=snr, function_set=fset,
                replications=replications, seed=cell_seed, **overrides,
            )
        )
    return configs


def table_row(report):
    cfg = report.config
    b, a, nc = report.row("before"), report.row("after"), report.row("none")
    return {
        "lambda": cfg["lam"],
        "snr": cfg["snr"],
        "before_error": b["mean_error"],
        "before_miss": b["mean_miss_rate"],
        "after_error": a["mean_error"],
        "after_miss": a["mean_miss_rate"],
        "none_error": nc["mean_error"],
        "before_sd": b["sd_mean"],
        "after_sd": a["sd_mean"],
        "none_sd": nc["sd_mean"],
    }


def table_text(rows):
    lines = [f"{'lambda':>7}{'snr':>6}  {'before':>16}{'miss':>8}  {'after':>16}{'miss':>8}  {'none':>16}"]
    for r in rows:
        lines.append(
            f"{r['lambda']:>7g}{r['snr']:>6g}  "
            f"{r['before_error']:>8.4f}({r['before_sd']:.4f}){r['before_miss']:>8.4f}  "
            f"{r['after_error']:>8.4f}({r['after_sd']:.4f}){r['after_miss']:>8.4f}  "
            f"{r['none_error']:>8.4f}({r['none_sd']:.4f})"
        )
    return "\n".join(lines) + "\n"


def reproduce_tables(out_dir, seed=0, replications=100, tables=(1, 2, 3, 4), **overrides):
    """Run every cell of the requested tables and write ``table{t}.csv/.json/.txt``.

    Files contain no timing information, so the same ``seed`` gives
    byte-identical output.  A failing cell is recorded in the returned
    ``failures`` list and the remaining cells still run.

    Returns
    -------
    written : list of Path
    failures : list of dict
    """
    out_dir = Path(out_dir)
    written, failures = [], []
    for t in tables:
        kernel, fset, _, _ = REFERENCE_TABLES[t]
        rows = []
        for cfg in table_configs(t, seed, replications, **overrides):
            try:
                rows.append(table_row(run_experiment(cfg)))
            except (ValueError, ArithmeticError) as exc:
                failures.append({"table": t, "lambda": cfg.lam, "snr": cfg.snr, "error": str(exc)})
        meta = {"table": t, "kernel": kernel, "function_set": fset, "replications": replications, "seed": seed}
        written.append(write_text(out_dir / f"table{t}.csv", _write_csv(TABLE_FORMAT, meta, TABLE_COLUMNS, rows)))
        doc = {"format": TABLE_FORMAT, "version": FORMAT_VERSION, **meta, "rows": rows}
        written.append(write_text(out_dir / f"table{t}.json", json.dumps(doc, indent=2, sort_keys=True) + "\n"))
        written.append(write_text(out_dir / f"table{t}.txt", table_text(rows)))
    return written, failures


def with_overrides(config, **kwargs):
    """Copy of ``config`` with the non-``None`` keyword arguments replaced."""
    return replace(config, **{k: v for k, v in kwargs.items() if v is not None})
