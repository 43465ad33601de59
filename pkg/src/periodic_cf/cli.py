"""Command-line front end: single expansions, river traces and the sweeps.

Every subcommand writes one table (CSV or JSON rows) to stdout or
``--output`` and a short human summary to stderr.  Exit codes: 0 ok,
2 usage, 3 domain error, 4 invariant violation or exhausted budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import arith, river, stats
from .core import discriminant, expand, is_square, make_surd
from .errors import CFError, DomainError

CACHE_ENV = "PERIODIC_CF_CACHE"

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_INTERNAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


def fmt(x: Any) -> Any:
    """Reals with 12 significant digits; everything else unchanged."""
    if isinstance(x, (float, np.floating)):
        if math.isnan(x):
            return ""
        return format(float(x), ".12g")
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, np.integer):
        return int(x)
    return x


def parse_range(text: str) -> list[int]:
    """``"3..10"``, ``"1,4,7"`` or a mix such as ``"1..3,8"``."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty range {text!r}")
    return sorted(set(out))


@dataclass
class RunConfig:
    command: str
    fmt: str = "csv"
    output: Optional[str] = None
    cache: Optional[str] = None
    tol: float = 1e-6
    jobs: int = 1
    seed: Optional[int] = None

    def __post_init__(self):
        if self.fmt not in ("csv", "json"):
            raise UsageError(f"unknown format {self.fmt}")
        if not self.tol > 0:
            raise UsageError("tolerance must be positive")
        if self.jobs < 1:
            raise UsageError("jobs must be at least 1")


def render(rows: list[dict], columns: Sequence[str], kind: str) -> str:
    if kind == "json":
        data = [{c: fmt(row.get(c)) for c in columns} for row in rows]
        return json.dumps(data, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def emit(cfg: RunConfig, rows: list[dict], columns: Sequence[str]):
    text = render(rows, columns, cfg.fmt)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def note(msg: str):
    print(msg, file=sys.stderr)


def _seq(xs: Sequence[int]) -> str:
    return " ".join(str(x) for x in xs)


# --- T0 cache ------------------------------------------------------------------


def load_cache(path: Optional[str]) -> dict[int, int]:
    if not path or not os.path.exists(path):
        return {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["q", "t0"]:
            raise UsageError(f"cache {path} lacks the q,t0 header")
        return {int(row["q"]): int(row["t0"]) for row in reader}


def save_cache(path: str, values: np.ndarray):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "t0"])
        for q in range(1, len(values)):
            w.writerow([q, int(values[q])])
    os.replace(tmp, path)


def cached_t0(n: int, cfg: RunConfig) -> np.ndarray:
    """``T0`` for ``0..n``, reusing and extending the cache file when set."""
    known = load_cache(cfg.cache)
    if known and max(known) >= n and all(q in known for q in range(1, n + 1)):
        out = np.zeros(n + 1, dtype=np.int64)
        for q in range(1, n + 1):
            out[q] = known[q]
        return out
    table = arith.t0_table(n, cfg.jobs)
    if cfg.cache:
        size = max(n, max(known) if known else 0)
        merged = np.zeros(size + 1, dtype=np.int64)
        for q, t in known.items():
            merged[q] = t
        merged[: n + 1] = table
        save_cache(cfg.cache, merged)
    return table


# --- subcommands -------------------------------------------------------------


def cmd_expand(args, cfg: RunConfig) -> int:
    cf = expand(make_surd(args.r, args.p, args.q))
    row = {
        "r": args.r,
        "p": args.p,
        "q": args.q,
        "delta": discriminant(args.r, args.p, args.q),
        "preperiod": _seq(cf.preperiod),
        "period": _seq(cf.period),
        "m": cf.m,
        "T": cf.T,
    }
    emit(cfg, [row], list(row))
    return EXIT_OK


RIVER_COLUMNS = ["step", "segment", "a", "b", "h", "side"]


def cmd_river(args, cfg: RunConfig) -> int:
    steps = args.steps
    if steps is None:
        # enough steps to close one cycle of the river
        steps = river.detect_period(args.r, args.p, args.q).n1
    if steps < 0:
        raise UsageError("steps must be nonnegative")
    trace = river.walk(args.r, args.p, args.q, steps)
    segs = trace.segments()
    rows = []
    for k, s in enumerate(trace.states):
        row = {"step": k, "a": s.a, "b": s.b, "h": s.h}
        if k:
            row["segment"] = segs[k - 1]
            row["side"] = "+" if trace.sides[k - 1] == river.ABOVE else "-"
        rows.append(row)
    emit(cfg, rows, RIVER_COLUMNS)
    note(f"river r={args.r} p={args.p} q={args.q}: {steps} steps, delta={trace.delta}, lead={trace.lead}")
    return EXIT_OK


GK_COLUMNS = ["s", "A", "count", "total", "empirical", "gk_limit", "abs_err"]


def cmd_gk(args, cfg: RunConfig) -> int:
    if args.R < 1:
        raise UsageError("R must be positive")
    if args.r < 1:
        raise UsageError("r must be positive")
    positions = parse_range(args.s)
    if positions[0] < 1 or args.amax < 1:
        raise UsageError("positions and amax must be positive")
    values = list(range(1, args.amax + 1))
    t = time.perf_counter()
    rep = stats.gk_report(args.r, args.p, args.R, positions, values, sample=args.sample, seed=cfg.seed)
    columns = list(GK_COLUMNS)
    rows = []
    for row in rep.rows:
        d = {
            "s": row.s,
            "A": row.A,
            "count": row.count,
            "total": row.total,
            "empirical": row.empirical,
            "gk_limit": row.gk,
            "abs_err": row.abs_err,
        }
        if not args.no_mu:
            try:
                mu = stats.cylinder_measure(stats.CylinderConstraint.of((row.s, row.A)), tol=cfg.tol)
                d["mu"], d["mu_width"] = mu.value, mu.width
            except CFError as exc:
                note(f"mu(s={row.s}, A={row.A}) unavailable: {exc}")
        if args.period_freq:
            d["period_freq"] = stats.period_frequency(args.r, args.p, args.R, row.A)
        rows.append(d)
    if not args.no_mu:
        columns += ["mu", "mu_width"]
    if args.period_freq:
        columns.append("period_freq")
    emit(cfg, rows, columns)
    mode = f"sampled {args.sample} q with seed {cfg.seed}" if args.sample else "full enumeration"
    note(
        f"gk r={args.r} p={args.p} R={args.R}: {mode}, excluded {rep.excluded_square_delta} q "
        f"(square or nonpositive discriminant), {time.perf_counter() - t:.2f}s; "
        "convergence thresholds are empirical policy"
    )
    return EXIT_OK


PERIOD_COLUMNS = ["Q", "t0_sum", "avg", "max_t0", "fit_const"]


def cmd_periods(args, cfg: RunConfig) -> int:
    if args.Q_max < 2:
        raise UsageError("Q_max must be at least 2")
    t0 = cached_t0(args.Q_max, cfg)
    rows = []
    for ps in stats.period_stats_table(args.Q_max, t0):
        rows.append({"Q": ps.Q, "t0_sum": ps.t0_sum, "avg": ps.avg, "max_t0": ps.max_t0, "fit_const": ps.fit_const})
    hick = arith.hickerson_sweep(args.Q_max, t0)
    emit(cfg, rows, PERIOD_COLUMNS)
    note(
        f"hickerson: {hick.checked} non-square Q <= {args.Q_max}, "
        f"{len(hick.violations)} violations, max T0/D = {hick.max_ratio:.6g}"
    )
    if not hick.ok:
        note(f"T0(Q) > D(Q) for Q in {hick.violations[:20]}")
        return EXIT_INTERNAL
    return EXIT_OK


RED_COLUMNS = [
    "n",
    "k_count",
    "m_count",
    "m_count_no_zero",
    "ratio",
    "ratio_no_zero",
    "product",
    "product_lower",
    "bound_holds",
    "obstructions",
]


def cmd_red(args, cfg: RunConfig) -> int:
    if args.n_max < 2:
        raise UsageError("n_max must be at least 2")
    t0 = cached_t0(args.n_max, cfg)
    census = arith.red_census(args.n_max, t0)
    prod = arith.theorem3_product(args.prime_limit)
    obstructions = arith.k_obstruction_violations(t0)
    holds = census.k_count < census.m_count * float(prod.lower)
    row = {
        "n": census.n,
        "k_count": census.k_count,
        "m_count": census.m_count,
        "m_count_no_zero": census.m_count_no_zero,
        "ratio": census.ratio,
        "ratio_no_zero": census.ratio_no_zero,
        "product": float(prod.partial),
        "product_lower": float(prod.lower),
        "bound_holds": holds,
        "obstructions": len(obstructions),
    }
    emit(cfg, [row], RED_COLUMNS)
    note(
        f"red census n={census.n}: K/M = {census.ratio:.6f} (zero allowed), "
        f"{census.ratio_no_zero:.6f} (both squares positive); product over p <= {args.prime_limit} "
        f"in [{float(prod.lower):.8f}, {float(prod.partial):.8f}]"
    )
    if obstructions:
        note(f"red numbers with a forbidden factor: {obstructions[:20]}")
        return EXIT_INTERNAL
    return EXIT_OK


BOUND_COLUMNS = ["r", "p", "q", "delta", "T", "period_sum", "f", "effective_bound", "ratio", "ok"]


def _bounds_chunk(triples: list[tuple[int, int, int]]) -> list[tuple]:
    out = []
    for r, p, q in triples:
        rec = river.check_theorem2(r, p, q)
        out.append((r, p, q, rec.delta, rec.T, rec.period_sum, rec.bound, rec.effective_bound))
    return out


def _is_prime(n: int) -> bool:
    return n >= 2 and arith.factorize(n) == {n: 1}


def cmd_bounds(args, cfg: RunConfig) -> int:
    if args.r_max < 1 or args.p_max < 0 or args.q_max < args.q_min:
        raise UsageError("empty parameter range")
    triples = []
    for r in range(1, args.r_max + 1):
        for p in range(-args.p_max, args.p_max + 1):
            for q in range(args.q_min, args.q_max + 1):
                d = p * p + 4 * r * q
                if d > 0 and not is_square(d):
                    triples.append((r, p, q))
    if not triples:
        raise UsageError("no triple in range has a positive non-square discriminant")
    t = time.perf_counter()
    from .sweep import parallel_map

    size = max(1, -(-len(triples) // (cfg.jobs * 8)))
    chunks = [triples[i : i + size] for i in range(0, len(triples), size)]
    records = [rec for part in parallel_map(_bounds_chunk, chunks, cfg.jobs) for rec in part]
    rows = []
    bad = []
    hist = [0] * 10
    subset = []
    for r, p, q, delta, T, psum, f, eff in records:
        ratio = psum / eff
        ok = psum <= eff
        if not ok:
            bad.append((r, p, q))
        hist[min(int(ratio * 10), 9)] += 1
        # sqrt of primes 4k+3 and of their doubles
        if r == 1 and p == 0 and q % 4 in (2, 3):
            base = q // 2 if q % 2 == 0 else q
            if base % 4 == 3 and _is_prime(base):
                subset.append(ratio)
        rows.append(
            {"r": r, "p": p, "q": q, "delta": delta, "T": T, "period_sum": psum, "f": f,
             "effective_bound": eff, "ratio": ratio, "ok": ok}
        )
    emit(cfg, rows, BOUND_COLUMNS)
    note(f"bounds: {len(rows)} triples, {len(bad)} violations, {time.perf_counter() - t:.2f}s")
    note("ratio histogram (tenths): " + " ".join(str(h) for h in hist))
    if subset:
        half = sum(1 for x in subset if x == 0.5)
        note(f"sqrt of primes 4k+3 and doubles: {len(subset)} cases, mean ratio {sum(subset) / len(subset):.4f}, "
             f"exactly 1/2 in {half}")
    if bad:
        note(f"period sum above the bound for {bad[:20]}")
        return EXIT_INTERNAL
    return EXIT_OK


# --- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
    common.add_argument("--output", "-o", help="write the table here instead of stdout")
    common.add_argument("--cache", default=os.environ.get(CACHE_ENV), help=f"T0 cache file (default ${CACHE_ENV})")
    common.add_argument("--tol", type=float, default=1e-6, help="tolerance for cylinder measures")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--seed", type=int, help="seed for sampled sweeps")

    ap = argparse.ArgumentParser(prog="periodic-cf", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", parents=[common], help="continued fraction of x_+(r,p,q)")
    for name in ("r", "p", "q"):
        p.add_argument(name, type=int)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("river", parents=[common], help="river walk trace")
    for name in ("r", "p", "q"):
        p.add_argument(name, type=int)
    p.add_argument("--steps", type=int, help="default: through the end of the first cycle")
    p.set_defaults(func=cmd_river)

    p = sub.add_parser("gk", parents=[common], help="partial quotient frequencies against their limits")
    p.add_argument("r", type=int)
    p.add_argument("p", type=int)
    p.add_argument("R", type=int)
    p.add_argument("--s", default="1..5", help="positions, e.g. 1..5 or 3,5")
    p.add_argument("--amax", type=int, default=8)
    p.add_argument("--sample", type=int, help="draw this many q at random instead of enumerating")
    p.add_argument("--no-mu", action="store_true", help="skip the cylinder measure columns")
    p.add_argument("--period-freq", action="store_true", help="add the within-period frequency column")
    p.set_defaults(func=cmd_gk)

    p = sub.add_parser("periods", parents=[common], help="average sqrt period lengths and the D(Q) bound")
    p.add_argument("Q_max", type=int)
    p.set_defaults(func=cmd_periods)

    p = sub.add_parser("red", parents=[common], help="census of odd-period Q against sums of two squares")
    p.add_argument("n_max", type=int)
    p.add_argument("--prime-limit", type=int, default=10**6)
    p.set_defaults(func=cmd_red)

    p = sub.add_parser("bounds", parents=[common], help="period sum against f over a triple sweep")
    p.add_argument("r_max", type=int)
    p.add_argument("p_max", type=int)
    p.add_argument("q_max", type=int)
    p.add_argument("--q-min", type=int, default=1)
    p.set_defaults(func=cmd_bounds)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = RunConfig(args.command, args.fmt, args.output, args.cache, args.tol, args.jobs, args.seed)
        return args.func(args, cfg)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        note(json.dumps({"error": "usage", "message": str(exc)}))
        return EXIT_USAGE
    except DomainError as exc:
        note(json.dumps({"error": exc.kind, "message": str(exc)}))
        return EXIT_DOMAIN
    except CFError as exc:
        note(json.dumps({"error": exc.kind, "message": str(exc)}))
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
