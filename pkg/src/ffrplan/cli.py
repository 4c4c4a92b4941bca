"""Command-line front end: ``ffrplan {coverage,rate,optimize,simulate}``.

SINR quantities are given in dB, distances in meters. ``--config file.json``
supplies any flag (keys are the ``RunConfig`` field names); explicit flags
override the file. Exit codes: 0 success, 2 usage error, 3 numerical or
solver failure, 4 validation check failed.
"""
import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import analytics as an
from . import montecarlo as mc
from . import optimizer as opt
from .errors import ConfigurationError, FFRError, NumericalError, ParameterError
from .fading import FULLY_CORRELATED, INDEPENDENT, CorrelationMode

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_CHECK = 4

CHECK_SIGMAS = 3.0


@dataclass
class RunConfig:
    command: str = "coverage"
    alpha: float = an.DEFAULT_ALPHA
    target_db: float = 0.0
    threshold_db: float | None = None
    noise_over_power: float = 0.0
    R: float = an.DEFAULT_RADIUS
    min_radius: float = 0.0
    mode: str = INDEPENDENT
    r_steps: int = 50
    r_range: str | None = None
    sth_range: str = "-5:5:0.25"
    alphas: list = field(default_factory=lambda: [2.0, 2.5, 3.0, 3.5, 4.0])
    samples: int = 10**6
    seed: int = mc.DEFAULT_SEED
    streams: int = mc.DEFAULT_STREAMS
    threads: int | None = None
    check: str | None = None
    channel: str | None = None
    n_r: int = an.DEFAULT_QUADRATURE.n_r
    n_theta: int = an.DEFAULT_QUADRATURE.n_theta
    output: str = "-"
    summary: str | None = None

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def params(self):
        return an.SystemParams.from_db(
            alpha=self.alpha, target_db=self.target_db, threshold_db=self.threshold_db,
            noise_over_power=self.noise_over_power, R=self.R, min_radius=self.min_radius,
        )

    def quadrature(self):
        return an.Quadrature(self.n_r, self.n_theta)


def parse_range(text, what="range"):
    """``start:stop:step`` (inclusive stop) into a float array."""
    try:
        parts = [float(x) for x in str(text).split(":")]
    except ValueError:
        raise ParameterError(f"{what} must look like start:stop:step, got {text!r}") from None
    if len(parts) != 3:
        raise ParameterError(f"{what} must look like start:stop:step, got {text!r}")
    start, stop, step = parts
    if not all(math.isfinite(x) for x in parts) or step <= 0 or stop < start:
        raise ParameterError(f"invalid {what} {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 10)


def radial_grid(cfg):
    if cfg.r_range:
        r = parse_range(cfg.r_range, "r-range")
    else:
        if cfg.r_steps < 1:
            raise ParameterError("--r-steps must be >= 1")
        r = cfg.R * np.arange(1, cfg.r_steps + 1) / cfg.r_steps
    if r.min() <= 0 or r.max() > cfg.R * (1 + 1e-12):
        raise ParameterError("radial grid must lie in (0, R]")
    return r


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".9g")
    return str(v)


def write_csv(rows, columns, path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    _write_text(buf.getvalue(), path)


def _write_text(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_coverage(cfg):
    params = cfg.params()
    mode = _analytic_mode(cfg.mode)
    r = radial_grid(cfg)
    curves = an.coverage_curves(params, r, mode, cfg.n_theta)
    rows = [
        {"r_m": r[i], "cp_fr1": curves["fr1"][i], "cp_fr3": curves["fr3"][i],
         "cp_ffr_centre": curves["ffr_centre"][i], "cp_ffr_edge": curves["ffr_edge"][i],
         "cp_ffr": curves["ffr"][i]}
        for i in range(r.size)
    ]
    write_csv(rows, ["r_m", "cp_fr1", "cp_fr3", "cp_ffr_centre", "cp_ffr_edge", "cp_ffr"], cfg.output)
    return EXIT_OK


def cmd_rate(cfg):
    params = cfg.params().interference_limited()
    mode = _analytic_mode(cfg.mode)
    quad = cfg.quadrature()
    sth = parse_range(cfg.sth_range, "sth-range")
    fr1 = an.rate_fr1(params, quad)
    fr3 = an.rate_fr3(params, quad, bandwidth_fraction=1.0 / 3.0)
    ffr = np.array([an.rate_ffr(params.with_threshold_db(s), mode, quad) for s in sth])
    best = int(np.argmax(ffr))
    rows = [
        {"s_th_db": s, "rate_fr1": fr1, "rate_fr3": fr3, "rate_ffr": v, "is_max": i == best}
        for i, (s, v) in enumerate(zip(sth, ffr))
    ]
    write_csv(rows, ["s_th_db", "rate_fr1", "rate_fr3", "rate_ffr", "is_max"], cfg.output)
    return EXIT_OK


def cmd_optimize(cfg):
    quad = cfg.quadrature()
    rows = [opt.threshold_table_row(a, R=cfg.R, quad=quad) for a in cfg.alphas]
    _write_text(_dumps(rows), cfg.output)
    return EXIT_OK


def _sim_config(cfg, params, mode, **kw):
    threads = cfg.threads if cfg.threads is not None else mc.default_threads()
    return mc.SimConfig(params=params, mode=mode, n_samples=int(cfg.samples), seed=int(cfg.seed),
                        n_streams=int(cfg.streams), threads=threads, **kw)


def _check_rows(cfg):
    params = cfg.params()
    quad = cfg.quadrature()
    what = cfg.check
    rows = []
    for mode in (INDEPENDENT, FULLY_CORRELATED):
        rule = mc.EDGE_RULE_SINR if mode == INDEPENDENT else mc.EDGE_RULE_MATCHED
        p = params if what == "coverage" else params.interference_limited()
        est = mc.simulate(_sim_config(cfg, p, CorrelationMode.parse(mode), edge_rule=rule))
        checks = []
        if what in ("coverage", "all"):
            checks += [("cov_fr1", an.average_coverage(p, "fr1", mode, quad)),
                       ("cov_fr3", an.average_coverage(p, "fr3", mode, quad)),
                       ("cov_ffr", an.average_coverage(p, "ffr", mode, quad))]
        if what in ("rate", "all"):
            checks += [("rate_fr1", an.rate_fr1(p, quad)),
                       ("rate_fr3", an.rate_fr3(p, quad)),
                       ("rate_ffr", an.rate_ffr(p, mode, quad))]
        for name, ref in checks:
            e = est[name]
            rows.append({"quantity": name, "mode": mode, "alpha": p.alpha,
                         "target_db": p.target_db, "threshold_db": p.threshold_db,
                         "analytic": ref, "estimate": e.value, "std_error": e.std_error,
                         "z": e.z_score(ref), "pass": e.agrees(ref, CHECK_SIGMAS)})
    cols = ["quantity", "mode", "alpha", "target_db", "threshold_db",
            "analytic", "estimate", "std_error", "z", "pass"]
    return rows, cols


def _tdl_rows(cfg):
    mode = CorrelationMode.tapped_delay_line(cfg.channel)
    sim = _sim_config(cfg, cfg.params(), mode)
    out = mc.simulate_tdl_ffr_coverage(sim, radial_grid(cfg), cfg.n_theta)
    rows = []
    for row in out:
        e = row["estimate"]
        slack = e.tolerance(CHECK_SIGMAS)
        ok = (e.value <= row["independent"] + slack) and (e.value >= row["correlated"] - slack)
        rows.append({"r_m": row["r"], "cp_ffr_mc": e.value, "std_error": e.std_error,
                     "cp_ffr_independent": row["independent"],
                     "cp_ffr_correlated": row["correlated"], "pass": ok})
    cols = ["r_m", "cp_ffr_mc", "std_error", "cp_ffr_independent", "cp_ffr_correlated", "pass"]
    return rows, cols


def _plain_rows(cfg):
    params = cfg.params()
    mode = CorrelationMode.parse(cfg.mode)
    est = mc.simulate(_sim_config(cfg, params, mode))
    rows = [{"quantity": q, "mode": mode.label, "estimate": e.value,
             "std_error": e.std_error, "n_samples": e.n_samples}
            for q, e in est.items() if q != "fr3_below_shat"]
    return rows, ["quantity", "mode", "estimate", "std_error", "n_samples"]


def cmd_simulate(cfg):
    if cfg.check and cfg.channel:
        raise ParameterError("--check and --channel are mutually exclusive")
    if cfg.check:
        rows, cols = _check_rows(cfg)
    elif cfg.channel:
        rows, cols = _tdl_rows(cfg)
    else:
        rows, cols = _plain_rows(cfg)
    write_csv(rows, cols, cfg.output)
    failures = [r for r in rows if "pass" in r and not r["pass"]]
    # worker count and output paths never affect results, keep them out of the record
    record = {k: v for k, v in dataclasses.asdict(cfg).items()
              if k not in ("threads", "output", "summary")}
    summary = {
        "config": record,
        "rows": len(rows),
        "checks": sum("pass" in r for r in rows),
        "failures": len(failures),
        "passed": not failures,
    }
    if cfg.summary:
        _write_text(_dumps(summary), cfg.summary)
    elif cfg.output not in (None, "-"):
        _write_text(_dumps(summary), cfg.output + ".summary.json")
    else:
        sys.stderr.write(_dumps(summary))
    return EXIT_CHECK if failures else EXIT_OK


def _analytic_mode(text):
    mode = CorrelationMode.parse(text)
    if mode.kind not in (INDEPENDENT, FULLY_CORRELATED):
        raise ParameterError("analytic commands accept --mode independent|correlated")
    return mode.kind


COMMANDS = {
    "coverage": cmd_coverage,
    "rate": cmd_rate,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
}


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _float_or_sci_int(text):
    v = float(text)
    if not v.is_integer():
        raise argparse.ArgumentTypeError(f"expected an integer, got {text}")
    return int(v)


def _alpha_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}") from None


def build_parser():
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON file with RunConfig keys")
    common.add_argument("--save-config", help="write the effective config as JSON and continue")
    common.add_argument("--alpha", type=float, help="path-loss exponent (default 3)")
    common.add_argument("--target-db", dest="target_db", type=float, help="target SINR T in dB")
    common.add_argument("--threshold-db", dest="threshold_db", type=float,
                        help="classification threshold S_th in dB (default: T)")
    common.add_argument("--noise-over-power", dest="noise_over_power", type=float,
                        help="sigma^2/P referred to the cell edge (0 = interference limited)")
    common.add_argument("--R", dest="R", type=float, help="cell inradius in meters (default 577)")
    common.add_argument("--min-radius", dest="min_radius", type=float, help="exclusion radius in meters")
    common.add_argument("--mode", help="independent | correlated (simulate also: pedA, vehA)")
    common.add_argument("--output", "-o", help="output file ('-' for stdout)")
    common.add_argument("--n-r", dest="n_r", type=int, help="radial quadrature nodes")
    common.add_argument("--n-theta", dest="n_theta", type=int, help="angular quadrature nodes")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker threads (env FFR_THREADS)")

    parser = argparse.ArgumentParser(prog="ffrplan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coverage", parents=[common], help="coverage probability versus distance")
    p.add_argument("--r-steps", dest="r_steps", type=int, default=S)
    p.add_argument("--r-range", dest="r_range", default=S, help="start:stop:step in meters")

    p = sub.add_parser("rate", parents=[common], help="normalised rate versus S_th")
    p.add_argument("--sth-range", dest="sth_range", default=S, help="start:stop:step in dB")

    p = sub.add_parser("optimize", parents=[common], help="T', T'', centre share and gains")
    p.add_argument("--alphas", type=_alpha_list, default=S, help="comma separated, e.g. 2,3,4")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimates and checks")
    p.add_argument("--samples", type=_float_or_sci_int, default=S, help="e.g. 1e6")
    p.add_argument("--streams", type=int, default=S)
    p.add_argument("--check", choices=["coverage", "rate", "all"], default=S)
    p.add_argument("--channel", default=S, help="pedA | vehA | profile.json")
    p.add_argument("--r-steps", dest="r_steps", type=int, default=S)
    p.add_argument("--r-range", dest="r_range", default=S)
    p.add_argument("--summary", default=S, help="JSON summary path")
    return parser


def resolve_config(ns):
    values = vars(ns).copy()
    base = {}
    path = values.pop("config", None)
    save = values.pop("save_config", None)
    if path:
        with open(path, encoding="utf-8") as fh:
            base = json.load(fh)
    base.update(values)
    cfg = RunConfig.from_dict(base)
    if save:
        _write_text(cfg.to_json() + "\n", save)
    return cfg


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        return COMMANDS[cfg.command](cfg)
    except (ParameterError, ConfigurationError, OSError, json.JSONDecodeError, TypeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"ffrplan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"ffrplan: numerical failure: {exc}", file=sys.stderr)
        if exc.diagnostics:
            sys.stderr.write(_dumps({"diagnostics": exc.diagnostics}))
        return EXIT_NUMERICAL
    except FFRError as exc:
        print(f"ffrplan: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
