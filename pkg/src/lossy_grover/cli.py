"""Command-line front end.

    lossy-grover oracle-check --n-max 8 --cases 700
    lossy-grover fig2 --out runs/fig2
    lossy-grover fig3 --experiments 10000 --out runs/fig3
    lossy-grover trials --n 24 --k-trials 10 --seed 3 --out runs/table
    lossy-grover decode runs/table/table.csv --out runs/decoded

Every command writes its outputs plus ``manifest.json`` into ``--out``.
Exit status: 0 success, 1 bad input, 2 failed check.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import ExperimentTable, RegisterConfig, TableParseError
from .master_eq import OdeParams, integrate, half_life
from .reconstruct import experiment_statistics, majority_vote, trial_scores, weighted_estimate
from .trials import TrialParams, generate_table
from .verification import oracle_check


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _manifest(out: Path, scenario: str, config: dict, seed, outputs, started: float):
    write_atomic(out / "manifest.json", _json({
        "scenario": scenario, "config": config, "seed": seed,
        "version": __version__, "outputs": [str(p) for p in outputs],
        "duration_s": round(time.perf_counter() - started, 3)}))


def _readout(value: str, gamma: float) -> float | None:
    if value == "half-life":
        return half_life(gamma) if gamma > 0 else None
    return float(value)


def _config(args) -> RegisterConfig:
    if getattr(args, "target", None):
        return RegisterConfig(n=args.n, target=args.target, gamma=args.gamma,
                              n_steps=args.steps, seed=args.seed)
    return RegisterConfig.with_random_target(args.n, args.gamma, args.steps, args.seed)


# -- commands ----------------------------------------------------------------

def cmd_oracle_check(args) -> int:
    started = time.perf_counter()
    report = oracle_check(args.n_max, args.cases, args.seed)
    for line in report.lines():
        print(line)
    if args.out:
        out = Path(args.out)
        path = out / "oracle_check.json"
        write_atomic(path, _json(report.to_dict()))
        _manifest(out, "oracle-check", {"n_max": args.n_max, "cases": args.cases},
                  args.seed, [path], started)
    return 0 if report.ok else 2


def cmd_fig2(args) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    params = OdeParams(args.n, args.gamma, args.steps, args.dt)
    run = integrate(params, sample_every=args.every)
    ref = integrate(OdeParams(args.n, 0.0, args.steps, args.dt), sample_every=args.every)
    series = out / "fig2_series.csv"
    write_atomic(series, run.to_csv())

    F = run.target_fractions()
    Fw = run.weighted_target_probability()
    Fref = ref.weighted_target_probability()
    mbar = run.mean_survivors() / args.n
    cols = ["t"] + [f"F_{m}" for m in args.track] + ["F_weighted", "mbar_over_n", "F_lossless"]
    lines = [",".join(cols)]
    for i, t in enumerate(run.t):
        vals = [t, *(F[i, m] for m in args.track), Fw[i], mbar[i], Fref[i]]
        lines.append(",".join("" if np.isnan(v) else f"{v:.12g}" for v in vals))
    curves = out / "fig2_curves.csv"
    write_atomic(curves, "\n".join(lines) + "\n")
    print(f"t_end={run.t[-1]:g}  F_lossless={Fref[-1]:.6f}  F_weighted={Fw[-1]:.6f}  "
          f"mbar/n={mbar[-1]:.4f}")
    _manifest(out, "fig2", {**vars(params).copy(), "track": args.track, "every": args.every},
              None, [series, curves], started)
    return 0


def cmd_fig3(args) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    config = _config(args)
    params = TrialParams(config, _readout(args.readout, args.gamma), args.mode,
                         survivors=args.survivors)
    stats = experiment_statistics(config, args.k_trials, args.experiments,
                                  np.random.default_rng(args.seed), params, args.threads)
    hist = out / "fig3_histogram.csv"
    summary = out / "fig3_summary.json"
    write_atomic(hist, stats.histogram_csv())
    write_atomic(summary, _json({**stats.summary(), "config": config.to_dict(),
                                 "k_trials": args.k_trials, "mode": params.mode.value,
                                 "survivors": params.survivors.value,
                                 "readout_time": params.readout_time}))
    for name, m in (("majority", stats.majority), ("weighted", stats.weighted)):
        print(f"{name:9s} mean fraction {m.mean_fraction:.4f} (ties wrong {m.strict_mean_fraction:.4f})"
              f"  P(all) {m.p_all_correct:.4f} (ties wrong {m.strict_p_all_correct:.4f})")
    print(f"bit marginal {stats.bit_marginal:.4f}")
    _manifest(out, "fig3", {**config.to_dict(), "k_trials": args.k_trials,
                            "experiments": args.experiments, "mode": params.mode.value,
                            "survivors": params.survivors.value,
                            "readout_time": params.readout_time},
              args.seed, [hist, summary], started)
    return 0


def cmd_trials(args) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    config = _config(args)
    params = TrialParams(config, _readout(args.readout, args.gamma), args.mode,
                         survivors=args.survivors)
    table = generate_table(params, args.k_trials, np.random.default_rng(args.seed))
    path = out / "table.csv"
    meta = out / "table.json"
    write_atomic(path, table.to_csv())
    info = {"config": config.to_dict(), "seed": args.seed, "mode": params.mode.value,
            "survivors": params.survivors.value, "readout_time": params.readout_time,
            "k_trials": args.k_trials}
    write_atomic(meta, _json(info))
    _manifest(out, "trials", info, args.seed, [path, meta], started)
    return 0


def cmd_decode(args) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    table = ExperimentTable.from_csv(Path(args.table).read_text())
    rng = np.random.default_rng(args.seed)
    maj = majority_vote(table, rng)
    result = {"K": table.K, "n": table.n,
              "majority": {"estimate": str(maj), "unresolved": maj.unresolved.astype(int)}}
    if table.K >= 2:
        wtd = weighted_estimate(table, rng)
        result["scores"] = trial_scores(table)
        result["weighted"] = {"estimate": str(wtd), "unresolved": wtd.unresolved.astype(int)}
    if args.target:
        target = [int(c) for c in args.target]
        result["majority"]["n_correct"] = int(np.sum(maj.estimate == target))
        if "weighted" in result:
            result["weighted"]["n_correct"] = int(np.sum(wtd.estimate == target))
    path = out / "decode.json"
    write_atomic(path, _json(result))
    print(f"majority {result['majority']['estimate']}")
    if "weighted" in result:
        print(f"weighted {result['weighted']['estimate']}")
    _manifest(out, "decode", {"table": str(args.table), "target": args.target},
              args.seed, [path], started)
    return 0


# -- parser --------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lossy-grover", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle-check", help="block dynamics vs dense simulator")
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--cases", type=int, default=700)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("fig2", help="target-fraction curves from the master equation")
    p.add_argument("--n", type=int, default=24)
    p.add_argument("--gamma", type=float, default=4e-4)
    p.add_argument("--steps", type=float, default=3217)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--every", type=float, default=1.0, help="output spacing in Grover steps")
    p.add_argument("--track", type=_int_list, default=[12, 14, 19])
    p.add_argument("--out", default="fig2")
    p.set_defaults(func=cmd_fig2)

    def trial_flags(p, experiments: bool):
        p.add_argument("--n", type=int, default=24)
        p.add_argument("--gamma", type=float, default=4e-4)
        p.add_argument("--steps", type=int, default=3217)
        p.add_argument("--k-trials", type=int, default=10)
        if experiments:
            p.add_argument("--experiments", type=int, default=10_000)
            p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--mode", choices=["ensemble", "trajectory"], default="ensemble")
        p.add_argument("--survivors", choices=["binomial", "half"], default="binomial")
        p.add_argument("--readout", default="half-life",
                       help="'half-life' (ln2/gamma) or a time in Grover steps")
        p.add_argument("--target", help="target bitstring (default: drawn from --seed)")

    p = sub.add_parser("fig3", help="decoder statistics over repeated experiments")
    trial_flags(p, True)
    p.add_argument("--out", default="fig3")
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("trials", help="write one experiment table")
    trial_flags(p, False)
    p.add_argument("--out", default="trials")
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("decode", help="decode a table file")
    p.add_argument("table")
    p.add_argument("--seed", type=int, default=0, help="tie-break seed")
    p.add_argument("--target", help="reference bitstring for n_correct")
    p.add_argument("--out", default="decoded")
    p.set_defaults(func=cmd_decode)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TableParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
