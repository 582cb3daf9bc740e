"""Command-line front end.

Verbs:

* ``validate`` -- load a config, run all consistency checks, print a summary.
* ``sweep``    -- run the Monte Carlo grid and write the results CSV.
* ``gamma``    -- emit the received-SNR-per-subcarrier table for a tau list.
* ``oracle``   -- run the noiseless pipeline-vs-model equivalence check.

Exit status is nonzero on validation failure or a failed oracle run.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import ConfigError, NetworkConfig
from .harness import equivalence_check, gamma_table, sweep, sweep_grid, write_csv


def _load_config(args: argparse.Namespace) -> NetworkConfig:
    cfg = NetworkConfig.from_json(args.config) if args.config else NetworkConfig()
    if args.seed is not None:
        cfg = cfg.with_overrides(master_seed=args.seed)
    return cfg


def _workers(args: argparse.Namespace) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    env = os.environ.get("RELAYOFDM_WORKERS")
    return max(1, int(env)) if env else 1


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        cfg = _load_config(args)
        cfg.validate()
    except (ConfigError, OSError, ValueError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    points = sweep_grid(cfg)
    print(
        f"ok: {cfg.code} over {cfg.channel_label} channel, N={cfg.n_subcarriers}, "
        f"cp=({cfg.n_cp1},{cfg.n_cp2}), {len(points)} sweep point(s), "
        f"seed={cfg.master_seed}"
    )
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        cfg = _load_config(args)
        cfg.validate()
    except (ConfigError, OSError, ValueError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    results = sweep(cfg, workers=_workers(args))
    write_csv(results, args.out)
    for r in results:
        print(
            f"{r.scheme} tau={r.tau:g} snr={r.snr_db:g}dB  "
            f"ber={r.ber:.3e} ({r.bit_errors}/{r.bits} bits, {r.trials} trials, "
            f"{r.wall_time:.1f}s)"
        )
    print(f"wrote {args.out}")
    return 0


def _cmd_gamma(args: argparse.Namespace) -> int:
    try:
        cfg = _load_config(args)
        cfg.validate()
    except (ConfigError, OSError, ValueError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    taus = args.taus if args.taus is not None else list(cfg.taus)
    snr = args.snr if args.snr is not None else max(cfg.snr_db)
    table = gamma_table(
        taus,
        snr_db=snr,
        n_subcarriers=cfg.n_subcarriers,
        n_relays=cfg.n_relays,
        beta=cfg.beta,
        mode=cfg.sampler_modes[0],
        n0=cfg.n0,
        p0_fraction=cfg.p0_fraction,
        pr_fraction=cfg.pr_fraction,
    )
    lines = ["tau,subcarrier,gamma_db"]
    for t, tau in enumerate(taus):
        for n in range(cfg.n_subcarriers):
            lines.append(f"{tau:g},{n},{table[t, n]:.10f}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    worst, cases = equivalence_check(n_cases=args.cases, seed=args.seed or 0)
    print(f"{len(cases)} random configurations, worst relative error {worst:.3e}")
    if worst >= args.tol:
        bad = max(cases, key=lambda c: c.rel_err)
        print(
            f"FAIL (tolerance {args.tol:g}): worst case {bad.code} taps={bad.n_taps} "
            f"mode={bad.mode} d={bad.d} tau={bad.tau}",
            file=sys.stderr,
        )
        return 2
    print(f"PASS (tolerance {args.tol:g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relayofdm",
        description="Link-level simulator for differential space-time relaying over OFDM",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a JSON config file")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--workers", type=int, help="worker processes (default 1 or $RELAYOFDM_WORKERS)")

    p = sub.add_parser("validate", parents=[common], help="check a config file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("sweep", parents=[common], help="run the BER/BLER sweep")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("gamma", parents=[common], help="received-SNR table over subcarriers")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--taus", type=float, nargs="+", help="fractional offsets to tabulate")
    p.add_argument("--snr", type=float, help="P/N0 point in dB (default: max of config sweep)")
    p.set_defaults(func=_cmd_gamma)

    p = sub.add_parser("oracle", parents=[common], help="pipeline vs per-subcarrier model check")
    p.add_argument("--cases", type=int, default=200, help="number of random configurations")
    p.add_argument("--tol", type=float, default=1e-9, help="max relative error allowed")
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
