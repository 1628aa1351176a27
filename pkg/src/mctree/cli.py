"""Command-line front-end.

Every artifact starts with the resolved configuration, so a run can be
repeated from its own output: CSV files carry ``# key=value`` header lines and
JSON files a ``config`` object. Pass such a file back with ``--config``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from mctree import __version__
from mctree.baselines import black_scholes, crr_price, jr_price, lsm_american, mc_gbm_european
from mctree.cva import EXPOSURE_MODES, DefaultModel, exposure_profile, mc_tree_cva
from mctree.density import density_metrics, q_direct
from mctree.pricing import CSV_FIELDS, RunConfig, mc_tree_american, mc_tree_european
from mctree.rational import rational_numerator
from mctree.reference import TABLES, Runner, check_rows, reference_rows
from mctree.tree import DomainError, MarketParams

OUTPUT_DIR_ENV = "MCTREE_OUTPUT_DIR"
EXIT_USAGE = 2
EXIT_DOMAIN = 3
ARTIFACT_MARK = "# mctree"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _market_flags(p: argparse.ArgumentParser, s0: float = 100.0, k: float = 95.0) -> None:
    p.add_argument("--s0", type=float, default=s0, help="spot price")
    p.add_argument("--k", type=float, default=k, help="strike")
    p.add_argument("--t", type=float, default=1.0, help="maturity in years")
    p.add_argument("--r", type=float, default=0.03, help="continuously compounded rate")
    p.add_argument("--sigma", type=float, default=0.2, help="volatility")


def _run_flags(p: argparse.ArgumentParser, n: int = 50, draws: int = 100_000) -> None:
    p.add_argument("--n", type=int, default=n, help="tree depth")
    p.add_argument("--m-draws", type=int, default=draws, help="number of MC-Tree draws")
    p.add_argument("--mix", type=int, default=9, help="odd mixing index m")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)


def _io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help=f"output file; relative paths resolve against ${OUTPUT_DIR_ENV}")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", help="key=value file (or a previous artifact); flags override it")


def build_parser() -> _Parser:
    parser = _Parser(prog="mctree", description="MC-Tree option pricing")
    parser.add_argument("--version", action="version", version=f"mctree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("price", help="European option by MC-Tree")
    _market_flags(p)
    _run_flags(p)
    p.add_argument("--method", type=str.lower, choices=("bias", "corr"), default="corr")
    p.add_argument("--kind", choices=("call", "put"), default="call")
    _io_flags(p)

    p = sub.add_parser("american", help="American put by MC-Tree")
    _market_flags(p)
    _run_flags(p, draws=2000)
    p.add_argument("--method", type=str.lower, choices=("bias", "corr"), default="bias")
    p.add_argument("--kind", choices=("call", "put"), default="put")
    _io_flags(p)

    p = sub.add_parser("baseline", help="Black-Scholes, CRR, JR, plain MC or LSM")
    _market_flags(p)
    p.add_argument("--model", choices=("bs", "crr", "jr", "mc", "lsm"), required=True)
    p.add_argument("--kind", choices=("call", "put"), default="call")
    p.add_argument("--style", choices=("european", "american"), default="european")
    p.add_argument("--variant", choices=("moment", "textbook"), default="moment")
    p.add_argument("--n", type=int, default=50, help="lattice depth or LSM exercise dates")
    p.add_argument("--m-draws", type=int, default=100_000, help="simulated paths")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    _io_flags(p)

    p = sub.add_parser("cva", help="unilateral CVA of an American put")
    _market_flags(p, s0=80.0, k=100.0)
    _run_flags(p, n=250, draws=10_000)
    p.add_argument("--recovery", type=float, default=0.4)
    p.add_argument("--intensity", type=float, default=0.03)
    p.add_argument("--exposure", choices=EXPOSURE_MODES, default="unconditional")
    p.add_argument("--profile", action="store_true", help="emit the t,EE exposure profile instead")
    _io_flags(p)

    p = sub.add_parser("density", help="compound density values or closeness metrics")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--mix", type=int, default=9)
    p.add_argument("--metrics", action="store_true", help="entropy, KL and L1 against N(0,1)")
    p.add_argument("--mode", choices=("direct", "rational"), default="direct")
    p.add_argument("--x-max", type=float, default=None, help="grid half-width (default 4 sqrt(N))")
    p.add_argument("--points", type=int, default=201)
    _io_flags(p)

    p = sub.add_parser("reproduce", help="recompute the reference tables and check tolerances")
    p.add_argument("--table", choices=TABLES + ("all",), default=None)
    p.add_argument("--figure", choices=("price-vs-n", "parity"), default=None,
                   help="emit plot-ready x,y data instead of a table")
    p.add_argument("--m-draws", type=int, default=None, help="override every MC-Tree draw count")
    p.add_argument("--mix", type=int, default=9)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--full", action="store_true", help="include the long-running rows")
    _io_flags(p)
    return parser


def read_config(path: str) -> dict[str, str]:
    """Flat ``key=value`` text. In a previous artifact the ``# key=value`` header lines are read."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if lines and lines[0].startswith(ARTIFACT_MARK):
        lines = [ln[1:].strip() for ln in lines[1:] if ln.startswith("#")]
    elif text.lstrip().startswith("{"):
        return {k: str(v) for k, v in json.loads(text).get("config", {}).items()}
    out = {}
    for ln in lines:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        if "=" not in ln:
            raise UsageError(f"config line is not key=value: {ln!r}")
        k, v = ln.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        file_values = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, raw in file_values.items():
            if key in ("command", "config", "version"):
                continue
            if key not in actions:
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            action = actions[key]
            if action.const is True:
                defaults[key] = raw.lower() in ("1", "true", "yes")
            elif raw == "None":
                defaults[key] = None
            else:
                defaults[key] = action.type(raw) if action.type else raw
                if action.choices is not None and defaults[key] not in action.choices:
                    raise UsageError(f"invalid value {raw!r} for config key {key!r}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def resolved_config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("config", "out", "format", "workers")}


def _market(args) -> MarketParams:
    return MarketParams(s0=args.s0, strike=args.k, maturity=args.t, rate=args.r, sigma=args.sigma)


def _quote_row(method, market, n, m, mix, seed, mean, sd=None, lo=None, hi=None) -> dict:
    return {"method": method, "S0": market.s0, "K": market.strike, "T": market.maturity,
            "r": market.rate, "sigma": market.sigma, "N": n, "M": m, "m": mix, "seed": seed,
            "mean": mean, "sd": sd, "ci_low": lo, "ci_high": hi}


def cmd_price(args) -> tuple[list[dict], Sequence[str]]:
    market = _market(args)
    cfg = RunConfig(depth=args.n, draws=args.m_draws, mix=args.mix, seed=args.seed,
                    method=args.method.capitalize())
    res = mc_tree_european(market, args.kind, cfg, args.workers)
    row = res.row(market, cfg)
    row["method"] = f"{res.method}-{args.kind}"
    return [row], CSV_FIELDS


def cmd_american(args):
    if args.method != "bias":
        raise UsageError("american pricing supports --method bias only")
    if args.kind != "put":
        raise UsageError("american pricing supports --kind put only")
    market = _market(args)
    cfg = RunConfig(depth=args.n, draws=args.m_draws, mix=args.mix, seed=args.seed)
    res = mc_tree_american(market, "put", cfg, args.workers)
    return [res.row(market, cfg)], CSV_FIELDS


def cmd_baseline(args):
    market = _market(args)
    label = f"{args.model.upper()}-{args.style}-{args.kind}"
    if args.model == "bs":
        if args.style != "european":
            raise UsageError("Black-Scholes is European only")
        row = _quote_row(label, market, None, None, None, None, black_scholes(market, args.kind))
    elif args.model in ("crr", "jr"):
        fn = crr_price if args.model == "crr" else jr_price
        v = fn(market, args.kind, args.n, args.style, args.variant)
        row = _quote_row(label, market, args.n, None, None, None, v)
    elif args.model == "mc":
        if args.style != "european":
            raise UsageError("plain MC is European only; use --model lsm for American")
        q = mc_gbm_european(market, args.kind, args.m_draws, args.seed, args.workers)
        row = _quote_row(label, market, None, q.size, None, args.seed, q.price, q.sd, q.ci_low, q.ci_high)
    else:
        if args.style != "american":
            raise UsageError("LSM requires --style american")
        q = lsm_american(market, args.kind, args.m_draws, args.n, args.seed)
        row = _quote_row(label, market, args.n, q.size, None, args.seed, q.price, q.sd, q.ci_low, q.ci_high)
    return [row], CSV_FIELDS


def cmd_cva(args):
    market = _market(args)
    cfg = RunConfig(depth=args.n, draws=args.m_draws, mix=args.mix, seed=args.seed)
    dm = DefaultModel(intensity=args.intensity, recovery=args.recovery)
    if args.profile:
        prof = exposure_profile(market, cfg, args.workers, args.exposure)
        return [{"t": t, "EE": e} for t, e in zip(prof.times.tolist(), prof.ee.tolist())], ("t", "EE")
    res = mc_tree_cva(market, cfg, dm, args.workers, exposure=args.exposure)
    row = res.row(market, cfg)
    row["method"] = f"CVA-{args.exposure}"
    return [row], CSV_FIELDS


def cmd_density(args):
    if args.mix < 1:
        raise DomainError("mixing index must be >= 1")
    if args.metrics:
        ent, kl, l1 = density_metrics(args.n, args.mix)
        return [{"N": args.n, "m": args.mix, "entropy": ent, "kl": kl, "l1": l1}], ("N", "m", "entropy", "kl", "l1")
    half = args.x_max if args.x_max is not None else 4.0 * np.sqrt(args.n)
    xs = np.linspace(-half, half, args.points)
    if args.mode == "rational":
        qs = rational_numerator(args.n, args.mix).horner(xs)
    else:
        qs = q_direct(xs, args.n, args.mix)
    return [{"x": x, "q": q} for x, q in zip(xs.tolist(), np.atleast_1d(qs).tolist())], ("x", "q")


def cmd_reproduce(args):
    if (args.table is None) == (args.figure is None):
        raise UsageError("reproduce needs exactly one of --table or --figure")
    runner = Runner(seed=args.seed, workers=args.workers, mix=args.mix, draws=args.m_draws)
    if args.figure == "price-vs-n":
        depths = list(range(1, 101))
        curves = {m: runner.price_curve(m, depths) for m in ("MC-Tree", "CRR", "JR")}
        bs = black_scholes(MarketParams(100.0, 95.0, 1.0, 0.03, 0.2), "call")
        rows = [{"N": n, "MC-Tree": curves["MC-Tree"][i], "CRR": curves["CRR"][i],
                 "JR": curves["JR"][i], "AS": bs} for i, n in enumerate(depths)]
        return rows, ("N", "MC-Tree", "CRR", "JR", "AS")
    if args.figure == "parity":
        rows = [{"N": p.depth, "call_minus_put": p.call_minus_put, "forward": p.forward_value,
                 "gap": p.gap, "gap_se": p.gap_se} for p in runner.parity_curve(depths=range(5, 101, 5))]
        return rows, ("N", "call_minus_put", "forward", "gap", "gap_se")
    outcomes = check_rows(reference_rows(args.table), runner, include_heavy=args.full)
    return [o.as_dict() for o in outcomes], ("table", "label", "expected", "computed", "lo", "hi", "status")


COMMANDS = {"price": cmd_price, "american": cmd_american, "baseline": cmd_baseline,
            "cva": cmd_cva, "density": cmd_density, "reproduce": cmd_reproduce}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(rows: list[dict], fields: Sequence[str], config: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"config": config, "rows": rows}, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"{ARTIFACT_MARK} {config['command']}\n")
    for k, v in config.items():
        if k != "command":
            buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r.get(f)) for f in fields])
    return buf.getvalue()


def output_path(out: str) -> Path:
    p = Path(out)
    if not p.is_absolute():
        p = Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / p
    return p


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse(argv)
        rows, fields = COMMANDS[args.command](args)
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except DomainError as exc:
        return _error("domain", str(exc), EXIT_DOMAIN)
    except FileNotFoundError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    text = render(rows, fields, resolved_config(args), args.format)
    if args.out:
        path = output_path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)
    failed = args.command == "reproduce" and any(r.get("status") == "FAIL" for r in rows)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
