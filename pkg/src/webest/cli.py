"""Command-line interface: ``webest design``, ``webest metrics`` and ``webest sweep``."""

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__
from .driver import SolverConfig, default_schedule, make_weights, run_p_schedule
from .io import (
    FormatError,
    metrics_to_text,
    phases_to_text,
    read_phases,
    summary_header_text,
    summary_row_text,
    trace_to_text,
)
from .metrics import islr_lower_bound_db, metrics_report, welch_psl_bound
from .waveform import PhaseConstraint

log = logging.getLogger("webest")


class CliError(Exception):
    pass


def parse_schedule(text):
    s = text.strip().lower()
    if s in ("psl", "psl-vector", "sparsity"):
        return None if s != "sparsity" else default_schedule("sparsity")
    try:
        return tuple(float(v) for v in s.replace(" ", "").split(",") if v)
    except ValueError:
        raise CliError(f"invalid --p-schedule {text!r}; expected comma-separated numbers, 'psl' or 'sparsity'") from None


def read_weight_file(path):
    vals = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read weights file {path}: {exc.strerror}") from None
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for j, tok in enumerate(line.replace(",", " ").split(), start=1):
            try:
                vals.append(float(tok))
            except ValueError:
                raise CliError(f"{path}: row {i}, column {j}: cannot parse {tok!r} as a weight") from None
    return np.array(vals)


def resolve_weights(spec, N):
    if spec is None:
        return make_weights(None, N)
    if spec.startswith("file:"):
        return make_weights(read_weight_file(spec[5:]), N)
    return make_weights(spec, N)


def _config_echo(config):
    return {
        "M": config.M,
        "N": config.N,
        "alphabet": str(config.constraint),
        "method": config.method,
        "p_schedule": list(config.p_schedule),
        "smooth_h": config.smooth_h,
        "epsilon": config.epsilon,
        "zeta": config.zeta,
        "max_iters": config.max_iters,
        "weights": [float(v) for v in config.weights.w],
        "seed": config.seed,
        "record_every": config.record_every,
    }


def _build_config(a):
    method = a.method
    sched = parse_schedule(a.p_schedule)
    if sched is None:
        sched = default_schedule("psl", method)
    try:
        weights = resolve_weights(a.weights, a.length)
        return SolverConfig(
            M=a.transmitters,
            N=a.length,
            constraint=PhaseConstraint.parse(a.alphabet),
            method=method,
            p_schedule=sched,
            smooth_h=a.smooth_h,
            epsilon=a.epsilon,
            zeta=a.zeta,
            max_iters=a.max_iters,
            weights=weights,
            seed=a.seed,
            record_every=a.record_every,
            init_alphabet=a.init_alphabet,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def cmd_design(a):
    config = _build_config(a)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    X, traces = run_p_schedule(config)
    report = metrics_report(X, config.weights)
    report["stages"] = [
        {"p": tr.p, "iterations": int(tr.rows[-1]["iteration"]), "stop_reason": tr.stop_reason} for tr in traces
    ]
    (out / "phases.csv").write_text(phases_to_text(X))
    (out / "metrics.json").write_text(metrics_to_text(report, _config_echo(config)))
    (out / "trace.csv").write_text(trace_to_text(traces))
    print(f"ISLR {report['islr_db']:.4f} dB, PSL {report['psl']:.4f} ({report['psl_db']:.3f} dB) -> {out}")
    return 0


def cmd_metrics(a):
    try:
        X = read_phases(a.input)
    except OSError as exc:
        raise CliError(f"cannot read {a.input}: {exc.strerror}") from None
    try:
        w = resolve_weights(a.weights, X.N)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    text = metrics_to_text(metrics_report(X, w, a.threshold), {"input": str(a.input), "alphabet": str(X.constraint)})
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# sweep ----------------------------------------------------------------------

_CELL_KEYS = ("M", "N", "alphabet", "method", "p_schedule")
_SHARED_KEYS = ("smooth_h", "epsilon", "zeta", "max_iters", "weights", "seed", "record_every", "init_alphabet")


def load_sweep_spec(path):
    """Read a sweep spec: grid lists for the cell keys, scalars for the shared ones."""
    try:
        spec = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read sweep spec {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(spec, dict):
        raise CliError(f"{path}: top level must be an object")
    unknown = set(spec) - set(_CELL_KEYS) - set(_SHARED_KEYS) - {"trials", "format"}
    if unknown:
        raise CliError(f"{path}: unknown keys {sorted(unknown)}")
    if "M" not in spec or "N" not in spec:
        raise CliError(f"{path}: spec needs 'M' and 'N'")

    def as_list(key, default):
        v = spec.get(key, default)
        return v if isinstance(v, list) else [v]

    sched = spec.get("p_schedule", [2.0])
    if not isinstance(sched, list) or not sched or not isinstance(sched[0], list):
        sched = [sched]
    cells = []
    for M, N, alpha, method, ps in product(
        as_list("M", None), as_list("N", None), as_list("alphabet", "inf"), as_list("method", "entry"), sched
    ):
        cell = {"M": M, "N": N, "alphabet": str(alpha), "method": method, "p_schedule": ps}
        cell.update({k: spec[k] for k in _SHARED_KEYS if k in spec})
        cells.append(cell)
    return cells, int(spec.get("trials", 1))


def _cell_config(cell, seed):
    kw = dict(cell)
    ps = kw.pop("p_schedule")
    if isinstance(ps, str):
        ps = default_schedule(ps, kw["method"])
    weights = kw.pop("weights", None)
    if isinstance(weights, str) and weights.startswith("file:"):
        weights = read_weight_file(weights[5:])
    kw["seed"] = seed
    return SolverConfig(
        constraint=PhaseConstraint.parse(kw.pop("alphabet")), p_schedule=tuple(ps), weights=weights, **kw
    )


def _run_trial(args):
    cell, seed = args
    config = _cell_config(cell, seed)
    t0 = time.perf_counter()
    X, _ = run_p_schedule(config)
    wall = time.perf_counter() - t0
    rep = metrics_report(X, config.weights)
    return rep["psl"], rep["islr_db"], rep["sparsity"], wall


def _workers(trials):
    env = os.environ.get("WEBEST_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise CliError(f"WEBEST_THREADS must be a positive integer, got {env!r}") from None
        if cap < 1:
            raise CliError(f"WEBEST_THREADS must be a positive integer, got {env!r}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, trials))


def cmd_sweep(a):
    cells, spec_trials = load_sweep_spec(a.spec)
    trials = a.trials if a.trials is not None else spec_trials
    if trials < 1:
        raise CliError(f"--trials must be >= 1, got {trials}")
    base_seed = {c.get("seed", 0) for c in cells}.pop() if cells else 0
    for c in cells:
        try:
            _cell_config(c, base_seed)
        except ValueError as exc:
            raise CliError(f"cell {c}: {exc}") from None
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = out / "summary.csv"
    workers = _workers(trials)
    with open(summary, "w") as fh:
        fh.write(summary_header_text())
        fh.flush()
        pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            for i, cell in enumerate(cells):
                jobs = [(cell, base_seed + s) for s in range(trials)]
                res = np.array(list(pool.map(_run_trial, jobs) if pool else map(_run_trial, jobs)))
                psl_, islr_, sp_, wall_ = res.T
                M, N = int(cell["M"]), int(cell["N"])
                row = {
                    "cell": i,
                    "M": M,
                    "N": N,
                    "alphabet": cell["alphabet"],
                    "method": cell["method"],
                    "p_schedule": " ".join(format(float(p), "g") for p in _cell_config(cell, 0).p_schedule),
                    "trials": trials,
                    "welch_psl_bound": N * welch_psl_bound(M, N),
                    "islr_lower_bound_db": islr_lower_bound_db(M) if M >= 2 else float("nan"),
                }
                for name, col in (("psl", psl_), ("islr_db", islr_), ("sparsity", sp_), ("wall_s", wall_)):
                    row[f"{name}_mean"] = float(np.mean(col))
                    row[f"{name}_min"] = float(np.min(col))
                    row[f"{name}_max"] = float(np.max(col))
                fh.write(summary_row_text(row))
                fh.flush()
                print(f"cell {i}: M={M} N={N} ISLR mean {row['islr_db_mean']:.4f} dB", flush=True)
        finally:
            if pool:
                pool.shutdown()
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="webest", description="Design MIMO radar waveform sets with low correlation sidelobes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="design one waveform set")
    d.add_argument("--transmitters", "-M", type=int, required=True)
    d.add_argument("--length", "-N", type=int, required=True)
    d.add_argument("--alphabet", default="inf", help="MPSK alphabet size L, or 'inf' for continuous phases")
    d.add_argument("--method", choices=("entry", "vector"), default="entry")
    d.add_argument("--p-schedule", default="2", help="comma-separated exponents, or 'psl' / 'sparsity' defaults")
    d.add_argument("--smooth-h", type=int, choices=(1, 2, 3), default=1)
    d.add_argument("--epsilon", type=float, default=0.05)
    d.add_argument("--zeta", type=float, default=1e-9)
    d.add_argument("--max-iters", type=int, default=100_000)
    d.add_argument("--weights", default="ones", help="ones, band:K or file:PATH")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--record-every", type=int, default=1)
    d.add_argument("--init-alphabet", type=int, default=None, help="draw the random start from this MPSK alphabet")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_design)

    m = sub.add_parser("metrics", help="evaluate a phases.csv file")
    m.add_argument("--input", required=True)
    m.add_argument("--weights", default="ones")
    m.add_argument("--threshold", type=float, default=1.0, help="sparsity threshold")
    m.add_argument("--out", default=None, help="write metrics.json here instead of stdout")
    m.set_defaults(func=cmd_metrics)

    s = sub.add_parser("sweep", help="run seeded trials over a grid of cells")
    s.add_argument("spec", help="JSON sweep spec")
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if a.command == "design" and a.method == "vector" and str(a.alphabet).strip().lower() not in ("inf", "infinity"):
        print("webest: error: the vector method supports continuous phases only (--alphabet inf)", file=sys.stderr)
        return 2
    try:
        return a.func(a)
    except (CliError, FormatError, ValueError) as exc:
        print(f"webest: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
