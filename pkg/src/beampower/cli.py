"""Command-line front end: seeded experiment runs, the exhaustive baseline,
trace post-processing and a self-check against shipped golden traces.

Exit codes: 0 success, 1 configuration error, 2 run failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import sim
from .channel import build_codebook, steering_vector
from .config import ConfigError, NetworkConfig
from .geometry import build_layout
from .radio import (JointCommand, apply_power_cmd, decode_action, encode_action,
                    pcode)

OUT_ENV_VAR = "BEAMPOWER_OUT"


def _default_out() -> str:
    return os.environ.get(OUT_ENV_VAR, "results")


def _load_config(args) -> NetworkConfig:
    cfg = NetworkConfig.load(args.config) if args.config else NetworkConfig()
    over = {}
    if getattr(args, "engines", None):
        over["engines"] = tuple(args.engines.split(","))
    if getattr(args, "m", None):
        over["m_list"] = tuple(int(x) for x in args.m.split(","))
    if getattr(args, "seeds", None):
        over["seeds"] = tuple(int(x) for x in args.seeds.split(","))
    if getattr(args, "episodes", None):
        over["episode_cap"] = args.episodes
    return cfg.replace(**over) if over else cfg


def _run_job(cfg_text: str, m: int, seed: int, engine: str):
    """Executed in a worker process; returns everything the parent writes."""
    config = NetworkConfig.from_text(cfg_text)
    run = sim.run_experiment(config, m, seed, engine)
    best = sim.best_complete_episode(run.episodes)
    samples = best.eff_sinr_samples() if best is not None else []
    return {
        "key": (engine, m, seed),
        "summary": sim.summarize_run(config, run),
        "trace_rows": sim.trace_rows(run, config),
        "samples": samples,
    }


def _write_run_outputs(out: Path, config: NetworkConfig, results: list) -> None:
    rows = []
    for res in sorted(results, key=lambda r: r["key"]):
        engine, m, seed = res["key"]
        layout = build_layout(config, m)
        stem = f"{engine}_M{m}_s{seed}"
        trace_path = out / f"trace_{stem}.csv"
        lines = sim.trace_header(config, layout)
        lines.append(",".join(sim.TRACE_COLUMNS))
        lines.extend(res["trace_rows"])
        trace_path.write_text("\n".join(lines) + "\n")
        summary = res["summary"]
        if res["samples"]:
            ccdf_path = out / f"ccdf_{stem}.csv"
            body = [f"# config_hash = {config.config_hash()}", "eff_sinr_db"]
            body += [format(x, ".10g") for x in res["samples"]]
            ccdf_path.write_text("\n".join(body) + "\n")
            summary["ccdf_file"] = ccdf_path.name
        rows.append(summary)
    _append_summary(out / "summary.csv", rows)
    _emit_runtime_ratios(out)


def _append_summary(path: Path, rows: list) -> None:
    existing = sim.read_summary(path) if path.exists() else []
    merged = {(r["engine"], str(r["m"]), str(r["seed"])): r for r in existing}
    for row in rows:
        formatted = dict(zip(sim.SUMMARY_COLUMNS,
                             sim.summary_lines([row])[1].split(",")))
        merged[(row["engine"], str(row["m"]), str(row["seed"]))] = formatted
    ordered = sorted(merged.values(), key=lambda r: (r["engine"], int(r["m"]),
                                                     int(r["seed"])))
    lines = [",".join(sim.SUMMARY_COLUMNS)]
    lines += [",".join(r[c] for c in sim.SUMMARY_COLUMNS) for r in ordered]
    path.write_text("\n".join(lines) + "\n")


def _emit_runtime_ratios(out: Path) -> None:
    """Per-step decision-time ratio dqn / brute_force for matched (M, seed)."""
    path = out / "summary.csv"
    if not path.exists():
        return
    rows = sim.read_summary(path)
    per_step = {}
    for r in rows:
        steps = int(r["steps"]) if r["steps"] else 0
        if steps and r["decision_time_s"]:
            per_step[(r["engine"], r["m"], r["seed"])] = \
                float(r["decision_time_s"]) / steps
    lines = ["m,seed,dqn_step_s,brute_force_step_s,ratio"]
    found = False
    for (engine, m, seed), dqn_t in sorted(per_step.items()):
        if engine != "dqn":
            continue
        bf_t = per_step.get(("brute_force", m, seed))
        if bf_t:
            lines.append(f"{m},{seed},{dqn_t:.6g},{bf_t:.6g},{dqn_t / bf_t:.6g}")
            found = True
    if found:
        (out / "runtime_ratio.csv").write_text("\n".join(lines) + "\n")


def cmd_run(args, force_engines: tuple | None = None) -> int:
    config = _load_config(args)
    if force_engines:
        config = config.replace(engines=force_engines)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(engine, m, seed) for engine in config.engines
            for m in config.m_list for seed in config.seeds]
    cfg_text = config.to_text()
    results = []
    failed = None
    if args.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
            futs = {pool.submit(_run_job, cfg_text, m, seed, engine): (engine, m, seed)
                    for engine, m, seed in jobs}
            for fut in concurrent.futures.as_completed(futs):
                try:
                    results.append(fut.result())
                except Exception as exc:          # pragma: no cover - worker crash
                    failed = (futs[fut], exc)
    else:
        for engine, m, seed in jobs:
            try:
                results.append(_run_job(cfg_text, m, seed, engine))
            except Exception as exc:
                failed = ((engine, m, seed), exc)
                break
    # flush whatever completed, even on failure
    if results:
        _write_run_outputs(out, config, results)
    if failed:
        (job, exc) = failed
        print(f"run failed for engine={job[0]} M={job[1]} seed={job[2]}: {exc}",
              file=sys.stderr)
        return 2
    print(f"wrote {len(results)} run(s) to {out}")
    return 0


def cmd_oracle(args) -> int:
    return cmd_run(args, force_engines=("brute_force",))


def cmd_ccdf(args) -> int:
    config, rows = sim.read_trace(args.trace)
    if not rows:
        print("trace contains no steps", file=sys.stderr)
        return 2
    m = rows[0]["m"]
    episodes = sim.episodes_from_rows(rows, config, m)
    if args.all_steps:
        samples = [g for e in episodes for g in e.eff_sinr_samples()]
    else:
        best = sim.best_complete_episode(episodes)
        if best is None:
            print("every episode aborted; rerun with --all-steps", file=sys.stderr)
            return 2
        samples = best.eff_sinr_samples()
    curve = sim.ccdf(samples)
    out = Path(args.out) if args.out else Path(args.trace).with_suffix(".ccdf.csv")
    lines = [f"# config_hash = {config.config_hash()}", "threshold_db,prob"]
    lines += [f"{t:.10g},{p:.10g}" for t, p in curve]
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")
    return 0


def _recompute_summary_rows(trace_dir: Path) -> list[dict]:
    rows = []
    for path in sorted(trace_dir.glob("trace_*.csv")):
        config, trace = sim.read_trace(path)
        if not trace:
            continue
        engine = trace[0]["engine"]
        m, seed = trace[0]["m"], trace[0]["seed"]
        episodes = sim.episodes_from_rows(trace, config, m)
        row = sim.summarize_episodes(config, m, seed, engine, episodes)
        best = sim.best_complete_episode(episodes)
        if best is not None:
            row["ccdf_file"] = f"ccdf_{engine}_M{m}_s{seed}.csv"
        rows.append(row)
    return rows


def cmd_report(args) -> int:
    trace_dir = Path(args.dir)
    rows = _recompute_summary_rows(trace_dir)
    if not rows:
        print(f"no traces found in {trace_dir}", file=sys.stderr)
        return 2
    out = trace_dir / "summary_recomputed.csv"
    out.write_text("\n".join(sim.summary_lines(rows)) + "\n")
    print(f"wrote {out}")
    summary_path = trace_dir / "summary.csv"
    if not summary_path.exists():
        return 0
    original = {(r["engine"], r["m"], r["seed"]): r
                for r in sim.read_summary(summary_path)}
    compare = [c for c in sim.SUMMARY_COLUMNS if c not in sim.TIMING_COLUMNS]
    mismatches = []
    for row in rows:
        formatted = dict(zip(sim.SUMMARY_COLUMNS,
                             sim.summary_lines([row])[1].split(",")))
        key = (formatted["engine"], formatted["m"], formatted["seed"])
        if key not in original:
            continue
        for col in compare:
            if original[key][col] != formatted[col]:
                mismatches.append((key, col, original[key][col], formatted[col]))
    if mismatches:
        for key, col, a, b in mismatches:
            print(f"mismatch {key} {col}: summary={a!r} recomputed={b!r}",
                  file=sys.stderr)
        return 3
    print("recomputed summary matches summary.csv (timing columns excluded)")
    return 0


# ---------------------------------------------------------------------------
# verify


def _golden_dir() -> Path:
    return Path(__file__).resolve().parent / "golden"


def _check(name: str, ok: bool, failures: list) -> None:
    print(f"{'PASS' if ok else 'FAIL'}  {name}")
    if not ok:
        failures.append(name)


def cmd_verify(args) -> int:
    failures: list[str] = []

    # fast numeric properties
    ok = True
    for m in (1, 4, 8):
        for theta in np.linspace(0, np.pi, 7):
            ok &= abs(np.linalg.norm(steering_vector(theta, m)) - 1.0) < 1e-12
    _check("steering vectors unit norm", ok, failures)

    ok = True
    for q in (0, 1):
        for a in range(16):
            ok &= encode_action(decode_action(a, q), q) == a
    _check("action register decode/encode round trip", ok, failures)

    _check("power codes", [pcode(i) for i in range(4)] == [-3.0, -1.0, 1.0, 3.0],
           failures)

    rng = np.random.default_rng(0)
    p = 40.0
    ok = True
    for _ in range(1000):
        p = apply_power_cmd(p, float(rng.choice([-3, -1, 1, 3])))
        ok &= p <= 46.0
    _check("power ceiling honoured", ok, failures)

    curve = sim.ccdf(rng.normal(size=500))
    _check("ccdf monotone non-increasing", bool(np.all(np.diff(curve[:, 1]) <= 0)),
           failures)

    # golden trace: recompute the summary from the shipped trace
    golden = _golden_dir()
    trace_files = sorted(golden.glob("trace_*.csv"))
    summary_file = golden / "summary.csv"
    if trace_files and summary_file.exists():
        rows = _recompute_summary_rows(golden)
        original = {(r["engine"], r["m"], r["seed"]): r
                    for r in sim.read_summary(summary_file)}
        compare = [c for c in sim.SUMMARY_COLUMNS if c not in sim.TIMING_COLUMNS]
        ok = bool(rows)
        for row in rows:
            formatted = dict(zip(sim.SUMMARY_COLUMNS,
                                 sim.summary_lines([row])[1].split(",")))
            key = (formatted["engine"], formatted["m"], formatted["seed"])
            got = original.get(key)
            ok &= got is not None and all(got[c] == formatted[c] for c in compare)
        _check("golden trace summary reproduced", ok, failures)
    else:
        _check("golden trace present", False, failures)

    # determinism: the same tiny run twice, byte-identical traces
    config = NetworkConfig(q=0, engines=("fpa",), seeds=(3,), episode_cap=2)
    def tiny_rows():
        run = sim.run_experiment(config, 1, 3, "fpa")
        return sim.trace_rows(run, config)
    _check("same-seed determinism", tiny_rows() == tiny_rows(), failures)

    if failures:
        print(f"{len(failures)} check(s) failed")
        return 3
    print("all checks passed")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beampower",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add_run_args(sp):
        sp.add_argument("--config", help="path to a key=value config file")
        sp.add_argument("--out", default=_default_out(),
                        help=f"output directory (default ${OUT_ENV_VAR} or ./results)")
        sp.add_argument("--engines", help="comma-separated engine filter")
        sp.add_argument("--m", help="comma-separated codebook sizes")
        sp.add_argument("--seeds", help="comma-separated seeds")
        sp.add_argument("--episodes", type=int, help="episode cap override")
        sp.add_argument("--workers", type=int, default=1,
                        help="parallel worker processes")

    sp = sub.add_parser("run", help="run the configured experiment matrix")
    add_run_args(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("oracle", help="run the exhaustive-search baseline only")
    add_run_args(sp)
    sp.set_defaults(fn=cmd_oracle)

    sp = sub.add_parser("verify", help="self-check against shipped golden traces")
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("ccdf", help="effective-SINR CCDF from a trace file")
    sp.add_argument("--trace", required=True)
    sp.add_argument("--out")
    sp.add_argument("--all-steps", action="store_true",
                    help="pool every step instead of the best episode")
    sp.set_defaults(fn=cmd_ccdf)

    sp = sub.add_parser("report", help="recompute summary metrics from traces")
    sp.add_argument("--dir", required=True)
    sp.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
