"""Config-driven command line: ``hadgap <command> --config run.json --out dir``.

Exit status 0 means the run completed with a positive verdict, 1 a negative
verdict, 2 that the input could not be used.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import compose, io, polyseries, witness
from .weights import NormalWeight, verify_normality

COMMANDS = ("weights-verify", "series-check", "witness-build", "witness-verify", "compose-verdict")


class ConfigError(ValueError):
    pass


def _need(cfg, key, where="config"):
    if key not in cfg:
        raise ConfigError(f"{where}: missing field {key!r}")
    return cfg[key]


def _weight(cfg, key="weight"):
    block = _need(cfg, key)
    try:
        return NormalWeight.from_config(block)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{key}: missing or malformed field {exc}") from exc


# -- pipelines ------------------------------------------------------------------------------


def run_weights_verify(cfg, seed, threads):
    w = _weight(cfg)
    rep = verify_normality(w, int(cfg.get("grid_size", 10**4)))
    return {"verdict": rep.verdict, "normality": rep.to_dict()}, rep.passed


def _series(cfg, w):
    block = _need(cfg, "series")
    if "family" in block:
        return polyseries.lacunary_family(int(block.get("terms", 20)), w, profile=block["family"],
                                          dim=int(block.get("dim", 2)))
    return io.series_from_config(block)


def run_series_check(cfg, seed, threads):
    w = _weight(cfg)
    f = _series(cfg, w)
    is_gap, c = polyseries.check_hadamard(f)
    out = {"hadamard": {"is_gap": is_gap, "min_ratio": c}}
    if not is_gap:
        out["verdict"] = "not-lacunary"
        return out, False
    prof = polyseries.membership_profile(
        f, w, samples=int(cfg.get("samples", 2000)), polish_iters=int(cfg.get("polish_iters", 50)),
        little_threshold=float(cfg.get("little_threshold", 0.1)), seed=seed)
    out["profile"] = prof.to_dict()
    out["verdict"] = {"in_Hmu": prof.in_Hmu, "in_little": prof.in_little}
    return out, True


def _witness_params(cfg, seed, mode):
    w = _weight(cfg)
    mode = mode or cfg.get("mode", "micro")
    if mode not in witness.MODES:
        raise ConfigError(f"mode: expected one of {witness.MODES}, got {mode!r}")
    params = witness.resolve_params(
        int(_need(cfg, "n")), w, mode, int(cfg.get("depth", 1)), A=cfg.get("A"), p=cfg.get("p"),
        M=cfg.get("M"), probe_seps=tuple(cfg.get("probe_seps", (0.2, 0.4))), seed=seed,
        tail=cfg.get("tail"))
    try:
        return params.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _family(cfg, seed, mode, threads):
    if "family_dir" in cfg:
        return io.load_family(cfg["family_dir"])
    params = _witness_params(cfg, seed, mode)
    return witness.build_witness_family(params, int(cfg.get("budget", 5000)), seed, threads=threads)


def run_witness_build(cfg, seed, threads, mode=None, out_dir=None):
    fam = _family(cfg, seed, mode, threads)
    if out_dir is not None:
        io.save_family(fam, Path(out_dir) / "family")
    return {"params": fam.params.to_config(), "checks": fam.params.check(),
            "levels": fam.summary(), "verdict": "built"}, True


def run_witness_verify(cfg, seed, threads, mode=None, out_dir=None):
    fam = _family(cfg, seed, mode, threads)
    shells = [tuple(s) for s in cfg.get("shells") or
              [(j, v) for v in range(fam.params.depth + 1) for j in range(1, fam.params.M + 1)]]
    rep = witness.verify_growth(fam, shells, int(cfg.get("samples_per_shell", 250)), seed,
                                threads=threads)
    body = rep.to_dict()
    for row, r in zip(body["rows"], rep.rows):
        row["curve"] = [[x, y] for x, y in r.curve]
    ok = rep.C_emp is not None and rep.C_emp > 0
    if fam.params.mode == "strict":
        ok = ok and all(r.meets_target for r in rep.rows
                        if r.coverage == "verified" and not r.under_separated)
    body["params"] = fam.params.to_config()
    body["verdict"] = "pass" if ok else "fail"
    return body, ok


def run_compose_verdict(cfg, seed, threads):
    dim = int(cfg.get("dim", 2))
    try:
        sym = compose.symbols_from_config(_need(cfg, "symbols"), dim)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"symbols: missing or malformed field {exc}") from exc
    mu = _weight(cfg, "mu")
    mixed = _need(cfg, "mixed")
    mp = compose.MixedNormParams(float(_need(mixed, "p", "mixed")), float(_need(mixed, "q", "mixed")),
                                 _weight(mixed, "phi"))
    tol = {"mc_samples": int(cfg.get("mc_samples", 2000)),
           "radial_grid": int(cfg.get("radial_grid", 16)), "seed": seed, "threads": threads}
    if "t_ladder" in cfg:
        tol["t_ladder"] = list(cfg["t_ladder"])
    for k in compose.DEFAULT_TOLERANCES:
        if k in cfg:
            tol[k] = float(cfg[k])
    v = compose.operator_verdict(sym, mu, mp, tol)
    return v.to_dict(), v.verdict == "bounded AND compact"


# -- tables ------------------------------------------------------------------------------------


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)
    return path


def emit_plots_data(report, out_dir):
    """Flat CSV tables from a report; sections that are absent give header-only files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = report.get("result", {})
    cmd = report.get("command")
    files = []
    if cmd == "series-check":
        rows = [(r["k"], r["n_k"], r["a_lower"], r["a_upper"])
                for r in res.get("profile", {}).get("rows", [])]
        files.append(_write_csv(out / "profile.csv", ["k", "n_k", "a_lower", "a_upper"], rows))
    elif cmd == "witness-verify":
        minima = []
        for row in res.get("rows", []):
            minima.append((row["shell"], row["samples"], row["coverage"], row["min_mu_cert"],
                           row["min_mu_direct"], row["argmin_gap"]))
            name = "growth_" + row["shell"].replace(":", "_") + ".csv"
            files.append(_write_csv(out / name, ["r", "mu_times_bound"], row.get("curve", [])))
        files.append(_write_csv(out / "growth_minima.csv",
                                ["shell", "samples", "coverage", "min_mu_cert", "min_mu_direct",
                                 "argmin_gap"], minima))
    elif cmd == "compose-verdict":
        ladder = res.get("integral", {}).get("ladder", [])
        files.append(_write_csv(out / "ladder.csv", ["eps_edge", "integral"],
                                [(x["eps_edge"], x["integral"]) for x in ladder]))
        files.append(_write_csv(out / "tail_ladder.csv", ["t", "verdict", "value"],
                                [(x["t"], x["verdict"], x["value"]) for x in res.get("tail_ladder", [])]))
    elif cmd == "witness-build":
        keys = ["kind", "j", "v", "exponent", "degree", "delta", "status", "points",
                "under_separated"]
        files.append(_write_csv(out / "levels.csv", keys,
                                [[r[k] for k in keys] for r in res.get("levels", [])]))
    return files


# -- entry point ---------------------------------------------------------------------------------


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


def run(cfg, *, command=None, seed=None, out_dir=None, threads=1, mode=None):
    """Execute one pipeline; returns ``(exit_status, report)`` and writes files when
    ``out_dir`` is given."""
    command = command or cfg.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command: expected one of {COMMANDS}, got {command!r}")
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    out_dir = out_dir or cfg.get("output_dir")
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    if mode is not None and not command.startswith("witness"):
        mode = None
    try:
        if command == "weights-verify":
            result, ok = run_weights_verify(cfg, seed, threads)
        elif command == "series-check":
            result, ok = run_series_check(cfg, seed, threads)
        elif command == "witness-build":
            result, ok = run_witness_build(cfg, seed, threads, mode, out_dir)
        elif command == "witness-verify":
            result, ok = run_witness_verify(cfg, seed, threads, mode, out_dir)
        else:
            result, ok = run_compose_verdict(cfg, seed, threads)
    except ConfigError:
        raise
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{command}: missing or malformed field {exc}") from exc
    resolved = {k: v for k, v in cfg.items() if k not in ("output_dir",)}
    resolved.update(command=command, seed=seed)
    if mode is not None:
        resolved["mode"] = mode
    report = {"command": command, "seed": seed, "config": resolved, "result": result,
              "exit_status": 0 if ok else 1}
    if out_dir is not None:
        Path(out_dir, "report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
        emit_plots_data(report, out_dir)
    return report["exit_status"], report


def main(argv=None):
    ap = argparse.ArgumentParser(prog="hadgap", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS,
                    help="pipeline to run (default: the config's 'command' field)")
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    ap.add_argument("--mode", choices=witness.MODES, default=None,
                    help="override the witness mode")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        status, report = run(cfg, command=args.command, seed=args.seed, out_dir=args.out,
                             threads=max(1, args.threads), mode=args.mode)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    res = report["result"]
    print(json.dumps({"command": report["command"], "verdict": res.get("verdict"),
                      "exit_status": status}, sort_keys=True))
    return status


if __name__ == "__main__":
    sys.exit(main())
