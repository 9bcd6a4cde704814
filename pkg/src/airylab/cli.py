"""Experiment orchestration: config parsing, runs, and report emission.

Configs are INI-style text (sections of ``key = value``).  Exponents may be
written as fractions (``1/4``) and are kept exact until they reach the
numerics.  Runs serialize to line-delimited JSON records; reports render as
text tables, CSV, or SVG figures.

CSV columns are fixed: kind, r, s, b, b_prime, lambda, sample_id, lhs, rhs,
ratio.  The ``lambda`` column holds the dilation factor, except for runs
that sweep a window length, where it holds the window length.  Every row
carries lhs and rhs, so its ratio can be recomputed offline.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import probes as pr
from . import solver as sv
from . import spectral as sp
from .norms import ParameterError
from .probes import BandRangeError, EstimateKind, RefinementError
from .solver import DivergenceError, InstabilityError, ResolutionError


class ConfigError(ValueError):
    """Invalid experiment configuration; the message lists every violation."""


class EmptyRecordError(ValueError):
    """A report was requested for a record with no rows."""


EXPERIMENT_KINDS = ("probe", "sweep", "solve", "lipschitz")

# parameter keys each estimate accepts, beyond what validate_params derives
_PARAM_KEYS = ("r", "s", "b", "b_prime", "b_tilde", "p", "q", "sigma", "beta",
               "r0", "s0", "b0", "r1", "s1", "b1")

_GRID_KEYS = ("n_modes", "half_length", "n_times", "t_half")

# a valid parameter point for every estimate, used when no config names one
DEFAULT_PARAMS = {
    EstimateKind.L8_STRICHARTZ: {},
    EstimateKind.LEMMA4: {"q": Fraction(6)},
    EstimateKind.FS_AIRY: {"r": Fraction(2)},
    EstimateKind.COR3_GENERAL: {"p": Fraction(6), "q": Fraction(6)},
    EstimateKind.XNORM_30: {"p": Fraction(8), "q": Fraction(8),
                            "b": Fraction(3, 5)},
    EstimateKind.XNORM_31: {"p": Fraction(8), "q": Fraction(8),
                            "b": Fraction(3, 5)},
    EstimateKind.BILINEAR_L3: {},
    EstimateKind.COR_K1: {"s": Fraction(1, 4), "b": Fraction(3, 5),
                          "b_tilde": Fraction(2, 5)},
    EstimateKind.COR_K2: {"s": Fraction(1, 4), "b": Fraction(3, 5),
                          "b_tilde": Fraction(2, 5)},
    EstimateKind.COR_K10: {"r": Fraction(9, 5), "sigma": Fraction(3, 10),
                           "beta": Fraction(3, 5), "b_prime": Fraction(-2, 5)},
    EstimateKind.LEMMA2_DELTA: {"r": Fraction(2), "s": Fraction(0),
                                "b": Fraction(3, 5), "b_prime": Fraction(-3, 10)},
    EstimateKind.HOMOG_5: {"r": Fraction(2), "s": Fraction(1, 4),
                           "b": Fraction(1, 2)},
    EstimateKind.EMBED_4: {"r0": Fraction(2), "s0": Fraction(0),
                           "b0": Fraction(3, 10), "r1": Fraction(3, 2),
                           "s1": Fraction(1, 2), "b1": Fraction(3, 4)},
    EstimateKind.EMBED_52: {"r": Fraction(2), "s": Fraction(1, 4),
                            "b": Fraction(11, 20)},
    EstimateKind.TRILINEAR_T2: {"r": Fraction(2), "s": Fraction(1, 4),
                                "b": Fraction(11, 20),
                                "b_prime": Fraction(-17, 40)},
}

DILATION_LADDER = tuple(2.0 ** (k / 4.0) for k in range(-3, 4))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: what to run, on what parameters, with what seed."""

    kind: str
    seed: int
    samples: int = 8
    estimate: EstimateKind = None
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    dilations: tuple = ()
    solve: dict = field(default_factory=dict)
    eps_list: tuple = ()


@dataclass(frozen=True)
class RunRecord:
    """Rows plus summary of one finished (or partial) experiment."""

    config_hash: str
    timestamp: str
    kind: str
    rows: tuple
    summary: dict


# ---------------------------------------------------------------------------
# config parsing


def _number(text):
    """Exact rational from '2', '1/4' or '0.55'."""
    return Fraction(text.strip())


def _number_list(text):
    return tuple(_number(t) for t in text.split(",") if t.strip())


_SOLVE_KEYS = ("delta", "r", "s", "b", "b_prime", "amplitude", "width",
               "n_modes", "half_length", "n_times", "constant_c")


def parse_config(text):
    """Parse and validate; raises ConfigError listing every violation."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}") from None
    problems = []
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    exp = cp["experiment"]
    kind = exp.get("kind", "")
    if kind not in EXPERIMENT_KINDS:
        problems.append(f"experiment kind {kind!r} not one of "
                        f"{'/'.join(EXPERIMENT_KINDS)}")
    if "seed" not in exp:
        problems.append("experiment seed is required for reproducibility")
    seed = 0
    try:
        seed = int(exp.get("seed", "0"))
    except ValueError:
        problems.append(f"seed {exp['seed']!r} is not an integer")
    samples = 8
    try:
        samples = int(exp.get("samples", "8"))
    except ValueError:
        problems.append(f"samples {exp['samples']!r} is not an integer")
    for key in exp:
        if key not in ("kind", "seed", "samples"):
            problems.append(f"unknown key {key!r} in [experiment]")

    estimate = None
    params = {}
    if "estimate" in cp:
        est = cp["estimate"]
        name = est.get("kind", "")
        try:
            estimate = EstimateKind(name)
        except ValueError:
            problems.append(f"unknown estimate kind {name!r}")
        for key, value in est.items():
            if key == "kind":
                continue
            if key not in _PARAM_KEYS:
                problems.append(f"unknown key {key!r} in [estimate]")
                continue
            try:
                params[key] = _number(value)
            except ValueError:
                problems.append(f"[estimate] {key} = {value!r} is not a number")

    grid = {}
    if "grid" in cp:
        for key, value in cp["grid"].items():
            if key not in _GRID_KEYS:
                problems.append(f"unknown key {key!r} in [grid]")
                continue
            try:
                grid[key] = (int(value) if key in ("n_modes", "n_times")
                             else float(Fraction(value)))
            except ValueError:
                problems.append(f"[grid] {key} = {value!r} is not a number")

    dilations = ()
    if "sweep" in cp:
        for key, value in cp["sweep"].items():
            if key != "dilations":
                problems.append(f"unknown key {key!r} in [sweep]")
                continue
            try:
                dilations = tuple(float(v) for v in _number_list(value))
            except ValueError:
                problems.append(f"[sweep] dilations = {value!r}: not numbers")

    solve = {}
    if "solve" in cp:
        for key, value in cp["solve"].items():
            if key not in _SOLVE_KEYS:
                problems.append(f"unknown key {key!r} in [solve]")
                continue
            try:
                solve[key] = (int(value) if key in ("n_modes", "n_times")
                              else _number(value))
            except ValueError:
                problems.append(f"[solve] {key} = {value!r} is not a number")

    eps_list = ()
    if "lipschitz" in cp:
        for key, value in cp["lipschitz"].items():
            if key != "eps":
                problems.append(f"unknown key {key!r} in [lipschitz]")
                continue
            try:
                eps_list = tuple(float(v) for v in _number_list(value))
            except ValueError:
                problems.append(f"[lipschitz] eps = {value!r}: not numbers")

    for section in cp.sections():
        if section not in ("experiment", "estimate", "grid", "sweep",
                           "solve", "lipschitz"):
            problems.append(f"unknown section [{section}]")

    if kind in ("probe", "sweep") and estimate is None and not any(
            p.startswith("unknown estimate") for p in problems):
        problems.append(f"experiment kind {kind!r} needs an [estimate] section")
    if kind == "solve" and "delta" not in solve:
        problems.append("solve experiments need delta in [solve]")
    if kind == "lipschitz" and not eps_list:
        problems.append("lipschitz experiments need eps in [lipschitz]")

    if estimate is not None and not problems:
        try:
            params = pr.validate_params(estimate, params)
        except ParameterError as exc:
            problems.append(str(exc))

    if problems:
        raise ConfigError("; ".join(problems))
    return ExperimentConfig(kind=kind, seed=seed, samples=samples,
                            estimate=estimate, params=params, grid=grid,
                            dilations=dilations, solve=solve,
                            eps_list=eps_list)


def serialize_config(config):
    """Canonical text form; parse(serialize(c)) preserves semantic content."""
    cp = configparser.ConfigParser()
    cp["experiment"] = {"kind": config.kind, "seed": str(config.seed),
                        "samples": str(config.samples)}
    if config.estimate is not None:
        est = {"kind": config.estimate.value}
        for key in sorted(config.params):
            if key in _PARAM_KEYS:
                est[key] = str(Fraction(config.params[key]).limit_denominator())
        cp["estimate"] = est
    if config.grid:
        cp["grid"] = {k: str(config.grid[k]) for k in sorted(config.grid)}
    if config.dilations:
        cp["sweep"] = {"dilations": ", ".join(repr(d) for d in config.dilations)}
    if config.solve:
        cp["solve"] = {k: str(config.solve[k]) for k in sorted(config.solve)}
    if config.eps_list:
        cp["lipschitz"] = {"eps": ", ".join(repr(e) for e in config.eps_list)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def config_hash(config):
    """Order-independent digest of the semantic content."""
    blob = {
        "kind": config.kind, "seed": config.seed, "samples": config.samples,
        "estimate": config.estimate.value if config.estimate else None,
        "params": {k: str(Fraction(v).limit_denominator())
                   for k, v in sorted(config.params.items())},
        "grid": {k: config.grid[k] for k in sorted(config.grid)},
        "dilations": list(config.dilations),
        "solve": {k: str(v) for k, v in sorted(config.solve.items())},
        "eps": list(config.eps_list),
    }
    payload = json.dumps(blob, sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


# ---------------------------------------------------------------------------
# running


def _param_cols(params):
    def col(key):
        v = params.get(key)
        return "" if v is None else repr(float(v))
    return {"r": col("r"), "s": col("s"), "b": col("b"),
            "b_prime": col("b_prime")}


def _probe_record(config, dilations):
    # exponents stay exact rationals through validation; the numerics get floats
    run_params = {k: float(v) for k, v in config.params.items()}
    cfg = pr.default_config(config.estimate, run_params,
                            n_samples=config.samples, seed=config.seed,
                            dilations=dilations, **config.grid)
    report = pr.run_probe(cfg)
    cols = _param_cols(report.params)
    rows = []
    for srow in report.samples:
        abscissa = srow.delta if srow.delta else srow.lam
        rows.append(dict(kind=config.estimate.value, **cols,
                         **{"lambda": repr(float(abscissa))},
                         sample_id=srow.sample_id, lhs=repr(srow.lhs),
                         rhs=repr(srow.rhs), ratio=repr(srow.ratio)))
    summary = {"max_ratio": report.max_ratio,
               "median_ratio": report.median_ratio,
               "dilation_spread": report.dilation_spread,
               "slope": report.slope,
               "slope_residual": report.slope_residual}
    return rows, summary


def _solve_record(config):
    s = config.solve
    grid = sp.Grid1D(float(s.get("half_length", 20.0)),
                     int(s.get("n_modes", 256)),
                     representation="periodic-fft")
    amp = float(s.get("amplitude", Fraction(1, 10)))
    width = float(s.get("width", 1.0))
    phys = sp.SpectralField(grid, amp * np.exp(-(grid.x / width) ** 2),
                            sp.PHYSICAL)
    u0 = sp.to_frequency(phys)
    cfg = sv.PicardConfig(
        delta=float(s["delta"]), r=float(s.get("r", 2.0)),
        s=float(s.get("s", Fraction(1, 4))), b=float(s.get("b", 0.55)),
        b_prime=float(s.get("b_prime", -0.4)),
        n_times=int(s.get("n_times", 1024)),
        constant_c=float(s.get("constant_c", 1.0)))
    result = sv.picard_solve(u0, cfg)
    cols = {"r": repr(cfg.r), "s": repr(cfg.s), "b": repr(cfg.b),
            "b_prime": repr(cfg.b_prime)}
    rows = []
    dists = result.distances
    for i, d in enumerate(dists):
        prev = dists[i - 1] if i else 0.0
        ratio = d / prev if prev > 0 else 0.0
        rows.append(dict(kind="solve", **cols,
                         **{"lambda": repr(cfg.delta)}, sample_id=i,
                         lhs=repr(d), rhs=repr(prev), ratio=repr(ratio)))
    summary = {"converged": result.converged, "iterations": result.iterations,
               "residual": result.residual, "delta": cfg.delta}
    if result.contraction_factors:
        summary["max_contraction_factor"] = max(result.contraction_factors)
    return rows, summary


def _lipschitz_record(config):
    s = config.solve
    grid = sp.Grid1D(float(s.get("half_length", 20.0)),
                     int(s.get("n_modes", 256)),
                     representation="periodic-fft")
    amp = float(s.get("amplitude", Fraction(1, 10)))
    width = float(s.get("width", 1.0))
    phys = sp.SpectralField(grid, amp * np.exp(-(grid.x / width) ** 2),
                            sp.PHYSICAL)
    u0 = sp.to_frequency(phys)
    cfg = sv.PicardConfig(
        delta=float(s.get("delta", Fraction(1, 2))), r=float(s.get("r", 2.0)),
        s=float(s.get("s", Fraction(1, 4))), b=float(s.get("b", 0.55)),
        b_prime=float(s.get("b_prime", -0.4)),
        n_times=int(s.get("n_times", 512)))
    table = sv.lipschitz_probe(u0, config.eps_list, cfg, seed=config.seed)
    cols = {"r": repr(cfg.r), "s": repr(cfg.s), "b": repr(cfg.b),
            "b_prime": repr(cfg.b_prime)}
    rows = []
    partial = False
    quotients = []
    for i, eps in enumerate(config.eps_list):
        q = table[eps]
        if isinstance(q, tuple):
            partial = True
            continue
        quotients.append(q)
        rows.append(dict(kind="lipschitz", **cols,
                         **{"lambda": repr(eps)}, sample_id=i,
                         lhs=repr(q), rhs=repr(1.0), ratio=repr(q)))
    summary = {"quotient_spread": (max(quotients) / min(quotients)
                                   if quotients else float("nan"))}
    if partial:
        summary["partial"] = True
    return rows, summary


def run_experiment(config):
    """Execute the experiment; deterministic given the seed."""
    if config.kind == "probe":
        rows, summary = _probe_record(config, config.dilations or (1.0,))
    elif config.kind == "sweep":
        rows, summary = _probe_record(config,
                                      config.dilations or DILATION_LADDER)
    elif config.kind == "solve":
        rows, summary = _solve_record(config)
    elif config.kind == "lipschitz":
        rows, summary = _lipschitz_record(config)
    else:
        raise ConfigError(f"experiment kind {config.kind!r} not one of "
                          f"{'/'.join(EXPERIMENT_KINDS)}")
    return RunRecord(config_hash=config_hash(config),
                     timestamp=datetime.datetime.now(
                         datetime.timezone.utc).isoformat(),
                     kind=config.kind, rows=tuple(rows), summary=summary)


# ---------------------------------------------------------------------------
# persistence and reports


CSV_COLUMNS = ("kind", "r", "s", "b", "b_prime", "lambda", "sample_id",
               "lhs", "rhs", "ratio")


def write_record(record, path):
    """Line-delimited JSON: header, one line per row, summary line."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"type": "run", "config_hash": record.config_hash,
                             "timestamp": record.timestamp,
                             "kind": record.kind}) + "\n")
        for row in record.rows:
            fh.write(json.dumps({"type": "row", **row}) + "\n")
        fh.write(json.dumps({"type": "summary", **record.summary}) + "\n")
    return path


def read_record(path):
    rows = []
    header = {}
    summary = {}
    with open(path) as fh:
        for line in fh:
            obj = json.loads(line)
            t = obj.pop("type", None)
            if t == "run":
                header = obj
            elif t == "row":
                rows.append(obj)
            elif t == "summary":
                summary = obj
    return RunRecord(config_hash=header.get("config_hash", ""),
                     timestamp=header.get("timestamp", ""),
                     kind=header.get("kind", ""), rows=tuple(rows),
                     summary=summary)


def render_csv(record):
    """Deterministic CSV text: rows, then one summary row, no timestamp."""
    if not record.rows:
        raise EmptyRecordError("record has no rows; nothing to report")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in record.rows:
        w.writerow({k: row.get(k, "") for k in CSV_COLUMNS})
    if record.summary.get("partial"):
        w.writerow({"kind": record.kind, "sample_id": "partial"})
    summary_row = {k: "" for k in CSV_COLUMNS}
    summary_row["kind"] = record.kind
    summary_row["sample_id"] = "summary"
    summary_row["ratio"] = ";".join(
        f"{k}={record.summary[k]!r}" for k in sorted(record.summary))
    w.writerow(summary_row)
    return buf.getvalue()


def render_table(record):
    if not record.rows:
        raise EmptyRecordError("record has no rows; nothing to report")
    widths = {k: max([len(k)] + [len(str(r.get(k, ""))) for r in record.rows])
              for k in CSV_COLUMNS}
    lines = ["  ".join(k.ljust(widths[k]) for k in CSV_COLUMNS)]
    for row in record.rows:
        lines.append("  ".join(str(row.get(k, "")).ljust(widths[k])
                               for k in CSV_COLUMNS))
    lines.append("summary: " + ", ".join(
        f"{k}={record.summary[k]}" for k in sorted(record.summary)))
    return "\n".join(lines) + "\n"


def render_svg(record, path):
    """Log-log ratio-vs-abscissa figure with the fitted slope annotated."""
    if not record.rows:
        raise EmptyRecordError("record has no rows; nothing to report")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = np.array([float(r["lambda"]) for r in record.rows])
    ys = np.array([float(r["ratio"]) for r in record.rows])
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.loglog(xs, ys, "o", ms=4, alpha=0.7)
    pos = (xs > 0) & (ys > 0)
    if np.sum(pos) >= 2 and np.ptp(np.log(xs[pos])) > 0:
        slope, intercept = np.polyfit(np.log(xs[pos]), np.log(ys[pos]), 1)
        xf = np.array([xs[pos].min(), xs[pos].max()])
        ax.loglog(xf, np.exp(intercept) * xf ** slope, "-", lw=1)
        shown = record.summary.get("slope", 0.0) or slope
        ax.annotate(f"slope = {shown:.4f}", xy=(0.05, 0.92),
                    xycoords="axes fraction", fontsize=9)
    ax.set_xlabel("dilation / window")
    ax.set_ylabel("lhs / rhs")
    ax.set_title(record.rows[0]["kind"])
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def emit_report(record, fmt, out_dir):
    """Write the requested report files; returns the paths written."""
    import os
    stem = f"{record.kind}_{record.config_hash[:8] or 'record'}"
    if fmt == "table":
        text = render_table(record)
        sys.stdout.write(text)
        return []
    os.makedirs(out_dir, exist_ok=True)
    if fmt == "csv":
        path = os.path.join(out_dir, stem + ".csv")
        with open(path, "w") as fh:
            fh.write(render_csv(record))
        return [path]
    if fmt == "svg":
        path = os.path.join(out_dir, stem + ".svg")
        render_svg(record, path)
        return [path]
    raise ConfigError(f"format {fmt!r} not one of table/csv/svg")


# ---------------------------------------------------------------------------
# command line


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="airylab",
        description="dispersive-estimate probes and contraction solves")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--resolution", type=int,
                       help="override the number of spatial modes")
        p.add_argument("--format", default="table",
                       choices=("table", "csv", "svg"))

    pv = sub.add_parser("verify", help="probe one estimate at fixed dilation")
    pv.add_argument("kind", help="estimate kind, e.g. trilinear_t2")
    common(pv)
    common(sub.add_parser("sweep", help="probe across a dilation ladder"))
    common(sub.add_parser("solve", help="Picard contraction solve"))
    common(sub.add_parser("lipschitz", help="data-to-solution quotients"))
    pr_ = sub.add_parser("report", help="re-render a stored record")
    pr_.add_argument("record", help="line-delimited record file")
    pr_.add_argument("--out", default=".")
    pr_.add_argument("--format", default="table",
                     choices=("table", "csv", "svg"))
    return ap


def _load_config(args, kind, require_estimate=False):
    if args.config:
        with open(args.config) as fh:
            config = parse_config(fh.read())
        if config.kind != kind:
            raise ConfigError(f"config is a {config.kind!r} experiment; "
                              f"this command runs {kind!r}")
    else:
        if require_estimate:
            raise ConfigError("this command needs --config")
        config = ExperimentConfig(kind=kind, seed=0)
    if args.seed is not None:
        config = ExperimentConfig(**{**config.__dict__, "seed": args.seed})
    if args.resolution is not None:
        grid = dict(config.grid)
        grid["n_modes"] = args.resolution
        config = ExperimentConfig(**{**config.__dict__, "grid": grid})
    return config


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "report":
            record = read_record(args.record)
            emit_report(record, args.format, args.out)
            return 0
        if args.command == "verify":
            try:
                ek = EstimateKind(args.kind)
            except ValueError:
                raise ConfigError(
                    f"unknown estimate kind {args.kind!r}; choose from "
                    + ", ".join(k.value for k in EstimateKind)) from None
            if args.config:
                config = _load_config(args, "probe")
                if config.estimate != ek:
                    raise ConfigError(
                        f"config probes {config.estimate.value!r}, "
                        f"not {ek.value!r}")
            else:
                config = ExperimentConfig(
                    kind="probe", seed=args.seed or 0, samples=6,
                    estimate=ek,
                    params=pr.validate_params(ek, dict(DEFAULT_PARAMS[ek])),
                    grid=({"n_modes": args.resolution}
                          if args.resolution else {}))
        else:
            config = _load_config(args, args.command, require_estimate=True)
        record = run_experiment(config)
        files = emit_report(record, args.format, args.out)
        if args.format != "table":
            path = write_record(
                record, files[0].rsplit(".", 1)[0] + ".jsonl")
            for f in files + [path]:
                print(f)
        return 0
    except (ConfigError, ParameterError, EmptyRecordError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DivergenceError, ResolutionError, InstabilityError,
            RefinementError, BandRangeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
