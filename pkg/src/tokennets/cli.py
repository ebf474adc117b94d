"""Command-line runner: evaluate a program under one or all engines.

Parses and typechecks the program, translates it to a net, and reports the
convergence probability and terminal distribution for the selected engine(s):
`pcf` reduces the term directly, `net` rewrites the translated program net,
and `msiam` runs the multi-token machine on it.  Under `all`, the pairwise
probability deltas are reported and the run fails if any exceeds the
tolerance.  Exit codes: 2 parse error, 3 type error, 4 engine disagreement,
1 diamond-check failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .memory import int_backend, prob_backend, quantum_backend
from .msiam import MsSystem
from .nets import check_correct, validate
from .pars import (
    Distribution,
    FusedSystem,
    check_diamond,
    leftmost_policy,
    lift_step,
    seeded_policy,
    terminal_split,
)
from .pcfll import Closure, ParseError, PcfSystem, TypecheckError, parse, term_str, typecheck
from .prognets import PnSystem
from .translate import translate

ENGINES = ("pcf", "net", "msiam")


def build_backend(name: str, gates: str | None):
    if name == "int":
        return int_backend()
    if name == "prob":
        return prob_backend()
    return quantum_backend(gates)


def make_engine(name: str, term, backend, pn):
    """(fused system, prepared initial element, element describer)."""
    if name == "pcf":
        sys_, start = PcfSystem(), Closure(term, {}, backend.initial())
        describe = lambda cl: f"{term_str(cl.term)}  |  {cl.memory!r}"
    elif name == "net":
        sys_, start = PnSystem(), pn
        describe = lambda q: f"{len(q.net.nodes)} nodes  |  {q.memory!r}"
    else:
        sys_ = MsSystem(pn)
        start = sys_.initial_state()
        describe = lambda st: f"{len(st.tokens)} tokens  |  {st.memory!r}"
    fused = FusedSystem(sys_)
    return fused, fused.prepare(start), describe


def run_to_horizon(fused, start, horizon, tol, policy, trace=False, tag=""):
    """Drive the lifted step, returning (probability, truncated, terminals)."""
    mu = Distribution.dirac(start)
    step = 0

    def picker(a, redexes):
        r = policy(a, redexes)
        if trace:
            print(f"trace[{tag}] step {step}: {r!r}")
        return r

    for step in range(1, horizon + 1):
        term, red = terminal_split(mu, fused)
        if red.mass() < tol:
            break
        mu = lift_step(mu, fused, picker)
    term, red = terminal_split(mu, fused)
    return term.mass(), red.mass() >= tol, term


def report_engine(name, fused, start, describe, args) -> float:
    p, truncated, term = run_to_horizon(
        fused, start, args.horizon, args.tol, leftmost_policy, args.trace, name
    )
    print(f"engine: {name}")
    print(f"probability: {p:.12f}")
    print(f"truncated: {str(truncated).lower()}")
    print("terminal distribution:")
    entries = sorted(term, key=lambda ap: (-ap[1], describe(ap[0])))
    for a, q in entries:
        print(f"  {q:.12f}  {describe(a)}")
    return p


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="tokennets",
        description="Evaluate a linear functional program by term reduction, "
        "net rewriting, or a multi-token machine.",
    )
    ap.add_argument("file", help="program file")
    ap.add_argument("--engine", choices=ENGINES + ("all",), default="all")
    ap.add_argument("--backend", choices=("int", "prob", "quantum"), default="int")
    ap.add_argument("--horizon", type=int, default=200)
    ap.add_argument("--tol", type=float, default=1e-9)
    ap.add_argument("--gates", metavar="FILE", help="extra quantum gate definitions")
    ap.add_argument("--trace", action="store_true", help="print each fired transition")
    ap.add_argument("--dump-net", action="store_true", help="print the translated net")
    ap.add_argument(
        "--check-diamond",
        type=int,
        metavar="DEPTH",
        help="compare leftmost vs seeded-random policies to this depth",
    )
    args = ap.parse_args(argv)
    if args.horizon < 1 or args.tol <= 0:
        ap.error("horizon must be >= 1 and tol > 0")

    backend = build_backend(args.backend, args.gates)
    try:
        with open(args.file) as fh:
            src = fh.read()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        term = parse(src, backend.labels)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 2
    try:
        tp = typecheck(term)
    except TypecheckError as e:
        print(f"type error: {e}", file=sys.stderr)
        return 3

    pn = translate(tp, backend)
    validate(pn.net)
    err = check_correct(pn.net)
    assert err is None, err

    print(f"file: {args.file}")
    print(f"backend: {args.backend}")
    print(f"type: {tp.type}")
    print(f"horizon: {args.horizon}")
    if args.dump_net:
        print("net:")
        print(pn.net.dump("  "))

    engines = ENGINES if args.engine == "all" else (args.engine,)
    if args.check_diamond is not None:
        seed = int(os.environ.get("MSIAM_SEED", "0"))
        ok = True
        for name in engines:
            fused, start, _ = make_engine(name, term, backend, pn)
            rep = check_diamond(
                fused,
                [start],
                args.check_diamond,
                policies=(leftmost_policy, seeded_policy(seed)),
                tol=args.tol,
            )
            print(f"diamond[{name}]: {'ok' if rep.passed else 'FAILED'}")
            for f in rep.failures:
                print(f"  {f}")
            ok = ok and rep.passed
        if not ok:
            return 1

    probs = {}
    for name in engines:
        fused, start, describe = make_engine(name, term, backend, pn)
        probs[name] = report_engine(name, fused, start, describe, args)

    if args.engine == "all":
        pairs = [("pcf", "net"), ("net", "msiam"), ("pcf", "msiam")]
        bad = False
        for a, b in pairs:
            delta = abs(probs[a] - probs[b])
            print(f"delta[{a},{b}]: {delta:.3e}")
            bad = bad or delta > args.tol
        if bad:
            print("error: engines disagree beyond tolerance", file=sys.stderr)
            return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
