"""Batch experiment runner.

Every subcommand writes CSV (to ``--out`` or stdout). Parameters come from an
optional ``key=value`` config file (``--config``) overridden by flags. Grid
parameters accept comma lists (``0,0.25,0.5``) and inclusive integer ranges
(``8:14``). Column meanings are documented in docs/csv_columns.md.

Exit codes: 0 success, 1 a genuine check failure (a certificate with valid
hypotheses that does not hold, or a violated reduction guarantee), 2 usage
error.

The reduction CSV has a fixed 14-column schema::

    n,k,w,N,gamma,delta,eps_exact,bias,alpha_hat,guarantee,success_rate,
    meaningful_syndrome,meaningful_bias,timestamp
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from smoothlab.gf2 import CapExceeded, LinearCode, load_code, random_linear_code
from smoothlab.lpn import estimate_alpha
from smoothlab.reduction import REPORT_COLUMNS, run_experiment
from smoothlab.smoothing import (
    CERTIFICATE_COLUMNS,
    BoundCertificate,
    IdentityViolation,
    achievability_dist,
    mean_magnitude,
    sphere_biases,
    smooths_check,
)
from smoothlab.spectral import (
    DEFAULT_MAX_N,
    HARD_MAX_N,
    KrawtchoukBoundParams,
    fwht_forward,
    kbound_check,
    kbound_fit,
    load_pmf,
    pushforward,
    tv_to_uniform,
)
from smoothlab.suites import DEFAULT_C_GRID, certify, draw_instance

log = logging.getLogger("smoothlab")

CHECK_ORDER = ("flatness", "dual_bound", "theorem", "average_bias", "chain")


class UsageError(Exception):
    pass


def parse_grid(text: str | int | float, kind: type = float) -> list:
    """'0,0.5,1' -> [0.0, 0.5, 1.0]; '8:11' -> [8, 9, 10, 11] (integers only)."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo, hi = (int(p) for p in part.split(":"))
            out.extend(range(lo, hi + 1))
        else:
            out.append(kind(part))
    if not out:
        raise UsageError(f"empty grid {text!r}")
    return out


def read_config(path: str | Path) -> dict[str, str]:
    """Plain ``key=value`` lines; ``#`` starts a comment."""
    config = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        config[key.replace("-", "_")] = value
    return config


def worker_count() -> int:
    cap = os.environ.get("SMOOTHLAB_THREADS")
    default = min(os.cpu_count() or 1, 8)
    return max(1, int(cap)) if cap else default


def ordered_map(fn: Callable, items: Sequence) -> list:
    """Map over a thread pool; results come back in input order."""
    workers = worker_count()
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(out: str, columns: Sequence[str], rows: Iterable[dict]) -> None:
    fh = sys.stdout if out == "-" else open(out, "w", newline="")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _check_max_n(args, ns: Iterable[int]) -> bool:
    """Return allow_large for the run, or raise if some n exceeds the permitted cap."""
    limit = args.max_n if args.max_n is not None else DEFAULT_MAX_N
    if limit > HARD_MAX_N:
        raise UsageError(f"--max-n cannot exceed {HARD_MAX_N}")
    worst = max(ns)
    if worst > limit:
        raise UsageError(f"n={worst} exceeds the cap {limit}; pass --max-n to opt in (up to {HARD_MAX_N})")
    return limit > DEFAULT_MAX_N


def _code_for(args, n: int, k: int, seed: int) -> LinearCode:
    if getattr(args, "code", None):
        return load_code(args.code)
    return random_linear_code(n, k, seed)


# subcommands

SMOOTH_COLUMNS = ("n", "k", "seed", "gamma", "tv_codeword", "tv_syndrome", "tv_message", "residual", "status", "timestamp")


def cmd_smooth_sweep(args) -> int:
    ns, ks, gammas = parse_grid(args.n, int), parse_grid(args.k, int), parse_grid(args.gamma)
    allow_large = _check_max_n(args, ns)
    stamp = _timestamp()
    jobs = [(n, k, args.seed + s) for n in ns for k in ks for s in range(args.count)]

    def run(job):
        n, k, seed = job
        rows = []
        try:
            code = random_linear_code(n, k, seed)
        except (ValueError, CapExceeded) as exc:
            return [dict(n=n, k=k, seed=seed, status=f"error:{exc}", timestamp=stamp)]
        for gamma in gammas:
            row = dict(n=n, k=k, seed=seed, gamma=gamma, timestamp=stamp)
            try:
                rep = smooths_check(code, achievability_dist(n, gamma, allow_large=allow_large))
            except (ValueError, CapExceeded, IdentityViolation) as exc:
                row["status"] = f"error:{exc}"
            else:
                row.update(tv_codeword=rep.tv_codeword, tv_syndrome=rep.tv_syndrome,
                           tv_message=rep.tv_message, residual=rep.residual, status="ok")
            rows.append(row)
        return rows

    results = ordered_map(run, jobs)
    write_csv(args.out, SMOOTH_COLUMNS, (row for rows in results for row in rows))
    return 0


BOUND_COLUMNS = ("check", "instance") + CERTIFICATE_COLUMNS + ("timestamp",)


def kbound_certificate(n: int, params: KrawtchoukBoundParams) -> BoundCertificate:
    res = kbound_check(n, params)
    violations = () if 0 < params.c < 0.5 else ("c_out_of_range",)
    w, i = res.argmax
    return BoundCertificate(
        lhs=res.worst_ratio, rhs=params.C, rhs_terms={"C": params.C, "unused": 0.0, "eps": 0.0},
        params={"n": n, "k": None, "w": w, "d_dual": None, "t_dual": i, "eps": 0.0, "C": params.C},
        violations=violations,
    )


def cmd_verify_bounds(args) -> int:
    ns = parse_grid(args.n, int)
    n_range = (min(ns), max(ns))
    _check_max_n(args, ns)
    c_grid = tuple(parse_grid(args.c)) if args.c is not None else DEFAULT_C_GRID
    stamp = _timestamp()

    def run(index):
        inst = draw_instance(args.seed, index, n_range, c_grid, w=args.w)
        certs = certify(inst)
        return [dict(check=name, instance=index, timestamp=stamp, **certs[name].to_row()) for name in CHECK_ORDER]

    results = ordered_map(run, list(range(args.count)))
    rows = [row for rs in results for row in rs]
    if args.kbound_n:
        cert = kbound_certificate(args.kbound_n, KrawtchoukBoundParams(1.0, args.kbound_c))
        rows.append(dict(check="kbound", instance="", timestamp=stamp, **cert.to_row()))
    write_csv(args.out, BOUND_COLUMNS, rows)

    failures = sum(r["ok"] == "fail" for r in rows)
    skipped = sum(r["ok"] == "hyp_fail" for r in rows)
    print(f"verify-bounds: {len(rows)} rows, {failures} failures, {skipped} hypothesis-excluded", file=sys.stderr)
    return 1 if failures else 0


def cmd_reduction(args) -> int:
    ns = parse_grid(args.n, int)
    _check_max_n(args, ns)
    jobs = [(n, k, gamma, N)
            for n in ns for k in parse_grid(args.k, int)
            for gamma in parse_grid(args.gamma) for N in parse_grid(args.N, int)]
    stamp = _timestamp()

    def run(job):
        n, k, gamma, N = job
        code = _code_for(args, n, k, args.seed)
        return run_experiment(code, args.w, gamma, N, args.trials, args.seed,
                              alpha_trials=args.alpha_trials, bias_threshold=(args.l, args.const))

    reports = ordered_map(run, jobs)
    status = 0
    for rep in reports:
        if rep.no_guarantee:
            verdict = "no guarantee"
        elif rep.guarantee_ok:
            verdict = "guarantee holds"
        else:
            verdict = "GUARANTEE VIOLATED"
            status = 1
        print(f"n={rep.n} k={rep.k} w={rep.w} gamma={rep.gamma} N={rep.N}: success={rep.success_rate:.4f} "
              f"alpha={rep.alpha_hat:.4f} eps={rep.eps_exact:.4g} guarantee={rep.guarantee:.4g} -> {verdict}",
              file=sys.stderr)
    write_csv(args.out, REPORT_COLUMNS, (rep.to_row(stamp) for rep in reports))
    return status


TRADEOFF_COLUMNS = ("n", "k", "w", "gamma", "bias_worst", "bias_avg", "eps", "timestamp")


def cmd_tradeoff(args) -> int:
    stamp = _timestamp()
    if args.pmf:
        loaded = load_pmf(args.pmf)
        pmfs = [(None, loaded)]
        ns = [loaded.n]
    else:
        ns = parse_grid(args.n, int)
    allow_large = _check_max_n(args, ns)
    rows = []
    for n in ns:
        if not args.pmf:
            pmfs = [(g, achievability_dist(n, g, allow_large=allow_large)) for g in parse_grid(args.gamma)]
        ws = parse_grid(args.w, int) if args.w is not None else list(range(1, (n - 1) // 2 + 1))
        for k in parse_grid(args.k, int):
            code = _code_for(args, n, k, args.seed)
            for gamma, P in pmfs:
                eps = tv_to_uniform(pushforward(code.gen, P))
                spectrum = fwht_forward(P)
                for w in ws:
                    _, biases = sphere_biases(P, w, spectrum)
                    rows.append(dict(n=n, k=code.k, w=w, gamma=gamma, bias_worst=float(np.abs(biases).min()),
                                     bias_avg=mean_magnitude(biases), eps=eps, timestamp=stamp))
    write_csv(args.out, TRADEOFF_COLUMNS, rows)
    return 0


KBOUND_COLUMNS = ("n", "c", "C_fit", "worst_ratio", "argmax_w", "argmax_i", "timestamp")


def cmd_kbound_scan(args) -> int:
    stamp = _timestamp()
    rows = []
    for n in parse_grid(args.n, int):
        for c in parse_grid(args.c if args.c is not None else "0.16"):
            res = kbound_check(n, KrawtchoukBoundParams(1.0, c))
            fit = kbound_fit(n, c)
            rows.append(dict(n=n, c=c, C_fit=fit.C, worst_ratio=res.worst_ratio,
                             argmax_w=res.argmax[0], argmax_i=res.argmax[1], timestamp=stamp))
    write_csv(args.out, KBOUND_COLUMNS, rows)
    return 0


LPN_COLUMNS = ("k", "delta", "N", "trials", "successes", "alpha_hat", "ci_halfwidth", "timestamp")


def cmd_lpn_bench(args) -> int:
    stamp = _timestamp()
    rows = []
    for k in parse_grid(args.k, int):
        for delta in parse_grid(args.delta):
            for N in parse_grid(args.N, int):
                start = time.perf_counter()
                stats = estimate_alpha(k, delta, N, args.trials, args.seed)
                elapsed = time.perf_counter() - start
                print(f"k={k} delta={delta} N={N}: alpha_hat={stats.alpha_hat:.4f} wall={elapsed:.3f}s",
                      file=sys.stderr)
                rows.append(dict(k=k, delta=delta, N=N, trials=stats.trials, successes=stats.successes,
                                 alpha_hat=stats.alpha_hat, ci_halfwidth=stats.ci_halfwidth, timestamp=stamp))
    write_csv(args.out, LPN_COLUMNS, rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoothlab", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, **defaults):
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--out", default="-", help="CSV output path (default stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-n", type=int, default=None, help=f"opt in to n above {DEFAULT_MAX_N}")
        p.set_defaults(**defaults)
        return p

    p = common(sub.add_parser("smooth-sweep", help="smoothing distances over (n, k, gamma, seed)"),
               func=cmd_smooth_sweep)
    p.add_argument("--n", default="10")
    p.add_argument("--k", default="5")
    p.add_argument("--gamma", default="0,0.25,0.5,1")
    p.add_argument("--count", type=int, default=1, help="codes (seeds) per (n, k)")

    p = common(sub.add_parser("verify-bounds", help="certificate suite for the smoothing bounds"),
               func=cmd_verify_bounds)
    p.add_argument("--n", default="8:14")
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--c", default=None, help="Krawtchouk c grid (default 0.16,0.25,0.35)")
    p.add_argument("--w", type=int, default=None, help="force the error weight (may violate w <= cn)")
    p.add_argument("--eps", type=float, default=None, help="unused: eps is computed exactly per instance")
    p.add_argument("--kbound-n", type=int, default=300, help="block length of the C=1 row (0 disables)")
    p.add_argument("--kbound-c", type=float, default=0.16)

    p = common(sub.add_parser("reduction", help="decoding-to-LPN reduction experiments"), func=cmd_reduction)
    p.add_argument("--n", default="12")
    p.add_argument("--k", default="6")
    p.add_argument("--w", type=int, default=1)
    p.add_argument("--gamma", default="0.6")
    p.add_argument("--N", default="40")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--alpha-trials", type=int, default=None)
    p.add_argument("--l", type=float, default=1.0, help="meaningful-bias exponent: bias >= const * k^-l")
    p.add_argument("--const", type=float, default=1.0)
    p.add_argument("--code", default=None, help="code file ('n k' header + generator rows)")

    p = common(sub.add_parser("tradeoff", help="bias versus error weight at fixed smoothing"), func=cmd_tradeoff)
    p.add_argument("--n", default="12")
    p.add_argument("--k", default="6")
    p.add_argument("--w", default=None)
    p.add_argument("--gamma", default="0.1,0.5,0.9")
    p.add_argument("--pmf", default=None, help="pmf CSV (index,mass) replacing the mixture family")
    p.add_argument("--code", default=None)

    p = common(sub.add_parser("kbound-scan", help="fit Krawtchouk envelope constants"), func=cmd_kbound_scan)
    p.add_argument("--n", default="8:16")
    p.add_argument("--c", default=None)

    p = common(sub.add_parser("lpn-bench", help="Monte-Carlo success of the ML LPN solver"), func=cmd_lpn_bench)
    p.add_argument("--k", default="8")
    p.add_argument("--delta", default="0.125")
    p.add_argument("--N", default="100")
    p.add_argument("--trials", type=int, default=200)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.config:
            config = read_config(args.config)
            known = vars(args)
            unknown = sorted(set(config) - set(known))
            if unknown:
                raise UsageError(f"unknown config keys: {', '.join(unknown)}")
            sub_parser = parser._subparsers._group_actions[0].choices[args.command]
            defaults = {}
            for action in sub_parser._actions:
                if action.dest in config:
                    value = config[action.dest]
                    defaults[action.dest] = action.type(value) if action.type else value
            sub_parser.set_defaults(**defaults)
            args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"smoothlab {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
