"""Command line runner: ``finv f|verify-count|rate|mc|auto|replay``.

Every command prints a table to stdout. With ``--out`` it also writes a
deterministic CSV or JSON file plus ``<out>.record.json`` describing the run.

Exit codes: 0 ok, 1 verification failure, 2 input error, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__, freegrp
from .counting import (DEFAULT_BUDGET, all_lattice_weights, brute_force_expected_count,
                       expected_count_exact, rate_curve)
from .errors import BudgetError, SchemaError
from .montecarlo import STAR, RunConfig, estimate_h_rate
from .systems import DEFAULT_MAX_LABELINGS, F_level, f_estimate, system_from_json, transform_system
from .weights import weight_to_json

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


# ------------------------------------------------------------------ parsing

def parse_fraction(text: str) -> Fraction:
    """Exact "p/q" (or an integer). Decimal strings are refused on purpose."""
    text = text.strip()
    num, _, den = text.partition("/")
    try:
        p = int(num)
        q = int(den) if den else 1
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an exact fraction p/q, got {text!r}")
    if q <= 0:
        raise argparse.ArgumentTypeError("denominator must be positive")
    eps = Fraction(p, q)
    if eps < 0:
        raise argparse.ArgumentTypeError("epsilon must be >= 0")
    return eps


def parse_range(text: str) -> list[int]:
    """'a..b..step', 'a..b' or a comma list."""
    try:
        if ".." in text:
            parts = [int(x) for x in text.split("..")]
            if len(parts) == 2:
                parts.append(1)
            a, b, step = parts
            if step < 1 or a < 1 or b < a:
                raise ValueError
            return list(range(a, b + 1, step))
        vals = [int(x) for x in text.split(",")]
        if any(v < 1 for v in vals):
            raise ValueError
        return vals
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad n range {text!r}; use a..b..step")


def parse_K(text: str, spec):
    if text == STAR:
        return STAR
    if text.startswith("ball:"):
        return tuple(freegrp.ball(spec, int(text[5:])))
    try:
        return tuple(freegrp.reduce(freegrp.parse_word(w, spec), spec) for w in text.split(","))
    except ValueError as exc:
        raise InputError(f"bad K {text!r}: {exc}")


def _read_json(path: str):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}")
    try:
        return json.loads(raw), raw
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}")


def load_system(path: str):
    doc, raw = _read_json(path)
    return system_from_json(doc), raw


# ------------------------------------------------------------------ output

def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def render_json(columns, rows, extra=None) -> str:
    doc = {"columns": list(columns), "rows": [[row[c] for c in columns] for row in rows]}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def print_table(columns, rows, out=None):
    out = out or sys.stdout
    cells = [[_short(row[c]) for c in columns] for row in rows]
    widths = [max([len(c)] + [len(r[j]) for r in cells]) for j, c in enumerate(columns)]
    print("  ".join(c.rjust(w) for c, w in zip(columns, widths)), file=out)
    for r in cells:
        print("  ".join(v.rjust(w) for v, w in zip(r, widths)), file=out)


def _short(x) -> str:
    if isinstance(x, float):
        return f"{x:.6f}" if math.isfinite(x) else str(x)
    return str(x)


def write_outputs(args, argv, columns, rows, inputs: dict, config: dict, started: float, extra=None):
    if not args.out:
        return
    text = render_csv(columns, rows) if args.format == "csv" else render_json(columns, rows, extra)
    out = Path(args.out)
    out.write_text(text)
    digest = hashlib.sha256()
    for name in sorted(inputs):
        digest.update(name.encode() + b"\0" + inputs[name] + b"\0")
    record = {
        "command": argv,
        "config": config,
        "inputs_sha256": digest.hexdigest(),
        "outputs": {"file": str(args.out), "sha256": hashlib.sha256(text.encode()).hexdigest(),
                    "columns": list(columns), "rows": len(rows)},
        "wall_time_s": round(time.perf_counter() - started, 6),
        "version": __version__,
    }
    Path(str(out) + ".record.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------------ commands

def cmd_f(args, argv, started):
    sys_, raw = load_system(args.system)
    est = f_estimate(sys_, args.levels, args.budget or DEFAULT_MAX_LABELINGS)
    rows = [{"m": m, "F": v} for m, v in enumerate(est.levels)]
    print_table(["m", "F"], rows)
    print(f"min over m <= {args.levels}: {est.minimum:.6f} (m={est.argmin}; {est.kind})")
    write_outputs(args, argv, ["m", "F"], rows, {args.system: raw},
                  {"levels": args.levels, "budget": args.budget}, started,
                  {"minimum": est.minimum, "argmin": est.argmin})
    return EXIT_OK


def cmd_verify_count(args, argv, started):
    alphabet = tuple(range(args.alphabet))
    rows = []
    bad = None
    for n in range(1, args.n_max + 1):
        checked, ok = 0, True
        for W in all_lattice_weights(alphabet, args.r, n, args.budget):
            lhs = expected_count_exact(W, n)
            rhs = brute_force_expected_count(W, n, args.budget)
            checked += 1
            if lhs != rhs:
                ok = False
                bad = bad or (n, W, lhs, rhs)
        rows.append({"n": n, "r": args.r, "alphabet": args.alphabet, "weights": checked,
                     "status": "pass" if ok else "FAIL"})
    cols = ["n", "r", "alphabet", "weights", "status"]
    print_table(cols, rows)
    write_outputs(args, argv, cols, rows, {},
                  {"n_max": args.n_max, "r": args.r, "alphabet": args.alphabet,
                   "budget": args.budget}, started)
    if bad is not None:
        n, W, lhs, rhs = bad
        print(f"mismatch at n={n}: formula {lhs} != brute force {rhs}", file=sys.stderr)
        print(json.dumps(weight_to_json(W)), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_rate(args, argv, started):
    sys_, raw = load_system(args.system)
    try:
        pts = rate_curve(sys_, args.epsilon, args.n_range, args.budget)
    except ValueError as exc:
        raise InputError(str(exc))
    eps = args.epsilon
    rows = [{"n": p.n, "log_count": p.log_count, "rate": p.rate, "F_target": p.F_target,
             "epsilon_num": eps.numerator, "epsilon_den": eps.denominator} for p in pts]
    cols = ["n", "log_count", "rate", "F_target", "epsilon_num", "epsilon_den"]
    print_table(cols, rows)
    write_outputs(args, argv, cols, rows, {args.system: raw},
                  {"epsilon": f"{eps.numerator}/{eps.denominator}",
                   "n_range": args.n_range, "budget": args.budget}, started)
    return EXIT_OK


def cmd_mc(args, argv, started):
    sys_, raw = load_system(args.system)
    K = parse_K(args.K, sys_.spec)
    cfg = RunConfig(args.seed, args.samples, 0, args.epsilon, K)
    try:
        pts = estimate_h_rate(sys_, cfg.K, cfg.eps, args.n_range, cfg, args.budget)
    except ValueError as exc:
        raise InputError(str(exc))
    rows = [{"n": p.n, "samples": p.samples, "mean": p.mean, "stderr": p.stderr,
             "rate": p.rate, "seed": p.seed} for p in pts]
    cols = ["n", "samples", "mean", "stderr", "rate", "seed"]
    print_table(cols, rows)
    ref = pts[0] if pts else None
    if ref is not None:
        line = f"reference F(T, phi) from the edge weight: {ref.F_target:.6f}"
        if ref.F_level is not None:
            line += f"; F_level at this ball: {ref.F_level:.6f}"
        print(line)
    print("rates are fixed-K, fixed-epsilon slices (upper bounds), not the entropy itself")
    config = cfg.echo()
    config.update({"n_range": args.n_range, "budget": args.budget})
    write_outputs(args, argv, cols, rows, {args.system: raw}, config, started)
    return EXIT_OK


def cmd_auto(args, argv, started):
    sys_, raw = load_system(args.system)
    doc, raw_w = _read_json(args.omega)
    spec = sys_.spec
    try:
        images = [freegrp.parse_word(w, spec) for w in doc["images"]]
        inverse_images = [freegrp.parse_word(w, spec) for w in doc["inverse_images"]]
        tsys = transform_system(sys_, images, inverse_images)
    except (KeyError, TypeError) as exc:
        raise InputError(f"omega file needs 'images' and 'inverse_images': {exc}")
    except ValueError as exc:
        raise InputError(str(exc))
    cap = args.budget or DEFAULT_MAX_LABELINGS
    rows = []
    for m in range(args.levels + 1):
        a, b = F_level(sys_, m, cap), F_level(tsys, m, cap)
        rows.append({"m": m, "F": a, "F_omega": b, "diff": abs(a - b)})
    cols = ["m", "F", "F_omega", "diff"]
    print_table(cols, rows)
    worst = max(r["diff"] for r in rows)
    print(f"largest per-level difference: {worst:.3e}")
    write_outputs(args, argv, cols, rows, {args.system: raw, args.omega: raw_w},
                  {"levels": args.levels, "budget": args.budget,
                   "omega": [freegrp.format_word(w) for w in images]}, started)
    return EXIT_OK if worst <= args.tol else EXIT_VERIFY


def cmd_replay(args, argv, started):
    doc, _ = _read_json(args.record)
    try:
        command = list(doc["command"])
        expected = doc["outputs"]["sha256"]
        out_name = doc["outputs"]["file"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"not an experiment record: {exc}")
    if command and command[0] == "replay":
        raise InputError("refusing to replay a replay")
    code = main(command)
    out = Path(out_name)
    if code != EXIT_OK:
        return code
    got = hashlib.sha256(out.read_bytes()).hexdigest() if out.exists() else None
    same = got == expected
    print(f"replayed {' '.join(command)}: output {'identical' if same else 'DIFFERS'}")
    return EXIT_OK if same else EXIT_VERIFY


# ------------------------------------------------------------------ wiring

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finv", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, budget_default):
        sp.add_argument("--out", help="write results to this file")
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        sp.add_argument("--budget", type=int, default=budget_default,
                        help="enumeration cap (default %(default)s)")

    sp = sub.add_parser("f", help="per-level F values and their minimum")
    sp.add_argument("system")
    sp.add_argument("--levels", type=int, default=2)
    common(sp, None)
    sp.set_defaults(func=cmd_f)

    sp = sub.add_parser("verify-count", help="formula vs brute force on every lattice weight")
    sp.add_argument("--n-max", type=int, default=4)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--alphabet", type=int, default=2, help="alphabet size")
    common(sp, DEFAULT_BUDGET)
    sp.set_defaults(func=cmd_verify_count)

    sp = sub.add_parser("rate", help="exact expected eps-count rate curve")
    sp.add_argument("system")
    sp.add_argument("--epsilon", type=parse_fraction, required=True)
    sp.add_argument("--n-range", type=parse_range, required=True)
    common(sp, DEFAULT_BUDGET)
    sp.set_defaults(func=cmd_rate)

    sp = sub.add_parser("mc", help="Monte Carlo eps-count over random homomorphisms")
    sp.add_argument("system")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--epsilon", type=parse_fraction, required=True)
    sp.add_argument("--n-range", type=parse_range, required=True)
    sp.add_argument("--K", default=STAR,
                    help="'star' for d*, 'ball:m', or comma separated words like 'e,s1,s2'")
    common(sp, 2 ** 20 * 20)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("auto", help="compare F levels of T and T^omega")
    sp.add_argument("system")
    sp.add_argument("omega")
    sp.add_argument("--levels", type=int, default=1)
    sp.add_argument("--tol", type=float, default=1e-9)
    common(sp, None)
    sp.set_defaults(func=cmd_auto)

    sp = sub.add_parser("replay", help="re-run an experiment record and compare outputs")
    sp.add_argument("record")
    sp.set_defaults(func=cmd_replay, out=None)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    started = time.perf_counter()
    try:
        return args.func(args, argv, started)
    except (SchemaError, InputError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
