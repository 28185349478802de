"""``qd`` command-line entry point.

Exit status: 0 on success, 1 on bad input, 2 when an internal invariant
is violated.
"""
from __future__ import annotations

import argparse
import os
import random
import sys
import tempfile

from . import oracle
from .bench import random_operations
from .circuit import QDag, parse, serialize, validate
from .compiler import compile_network
from .errors import QDagError
from .evaluator import MODES, ValueState
from .network import parse_network
from .reducer import reduce


class InvariantViolation(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write_atomic(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qd-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _names(value: str) -> list[str]:
    names = [v.strip() for v in value.split(",") if v.strip()]
    if not names:
        raise argparse.ArgumentTypeError("expected a comma-separated list of variable names")
    return names


def _assignment(value: str) -> tuple[str, str]:
    var, sep, state = value.partition("=")
    if not sep or not var or not state:
        raise argparse.ArgumentTypeError(f"expected V=v, got {value!r}")
    return var, state


def _fmt(x: float) -> str:
    return repr(float(x))


def _reduce_checked(dag: QDag):
    reduced, report = reduce(dag, validate=False)
    problems = validate(reduced)
    if problems:
        raise InvariantViolation("reduced dag is malformed: " + "; ".join(map(str, problems)))
    return reduced, report


# -- commands -----------------------------------------------------------------

def cmd_compile(args) -> int:
    net = parse_network(_read(args.network))
    query = [v for group in args.query for v in group]
    evidence = [v for group in args.evidence for v in group]
    for v in query + evidence:
        if v not in net.variables:
            raise QDagError(f"unknown variable {v!r} in {args.network}")
    dag = compile_network(net, query, evidence)
    if not args.no_reduce:
        dag, _ = _reduce_checked(dag)
    _write_atomic(args.output, serialize(dag))
    return 0


def cmd_reduce(args) -> int:
    dag = parse(_read(args.qdag))
    reduced, report = _reduce_checked(dag)
    _write_atomic(args.output, serialize(reduced))
    text = report.to_kv() if args.report == "kv" else report.to_text()
    stream = sys.stdout if args.output not in (None, "-") else sys.stderr
    print(text, file=stream)
    return 0


def _final_evidence(events) -> dict[str, str]:
    evidence: dict[str, str] = {}
    for kind, payload in events:
        if kind == "observe":
            var, state = payload
            evidence[var] = state
        else:
            evidence.pop(payload, None)
    return evidence


def _check_evidence_vars(dag: QDag, names) -> None:
    domains = dag.esn_domains()
    for var in names:
        if var not in domains:
            raise QDagError(f"variable {var!r} has no evidence-specific nodes; "
                            f"recompile with --evidence {var}")


def _print_query(state: ValueState, var: str, out) -> None:
    for s, x in state.query_all(var).items():
        print(f"{var} {s} {_fmt(x)}", file=out)


def cmd_eval(args) -> int:
    dag = parse(_read(args.qdag))
    events = args.events or []
    _check_evidence_vars(dag, [p[0] if k == "observe" else p for k, p in events])
    wanted = args.print or list(dag.query_domains())
    for var in wanted:
        if var not in dag.query_domains():
            raise QDagError(f"no query nodes for {var!r}")
    state = ValueState(dag, mode=args.mode, evidence=_final_evidence(events))
    if not args.repl:
        for var in wanted:
            _print_query(state, var, sys.stdout)
        return 0
    return repl(state, sys.stdin, sys.stdout)


def repl(state: ValueState, stdin, stdout) -> int:
    """Line protocol: observe V=v, retract V, query V, posterior V, reset, quit."""
    for raw in stdin:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cmd, _, arg = line.partition(" ")
        arg = arg.strip()
        try:
            if cmd == "quit":
                break
            elif cmd == "reset":
                state.reset()
                reply = "ok reset"
            elif cmd == "observe":
                var, val = _assignment(arg)
                visited = state.observe(var, val)
                reply = f"ok observe {var}={val} visited={visited}"
            elif cmd == "retract":
                visited = state.retract(arg)
                reply = f"ok retract {arg} visited={visited}"
            elif cmd in ("query", "posterior"):
                values = state.query_all(arg) if cmd == "query" else state.posterior(arg)
                reply = arg + " " + " ".join(f"{s}={_fmt(x)}" for s, x in values.items())
            else:
                reply = f"error: unknown command {cmd!r}"
        except (QDagError, argparse.ArgumentTypeError) as exc:
            reply = f"error: {exc}"
        print(reply, file=stdout, flush=True)
    return 0


def cmd_check(args) -> int:
    net = parse_network(_read(args.network))
    dag = parse(_read(args.qdag))
    domains = {}
    for var, states in dag.esn_domains().items():
        if var not in net.variables:
            raise QDagError(f"evidence variable {var!r} is not in the network")
        for s in states:
            if s not in net.variables[var]:
                raise QDagError(f"{s!r} is not a state of {var!r}")
        domains[var] = list(net.variables[var])
    for var, state in dag.query_nodes:
        if var not in net.variables or state not in net.variables[var]:
            raise QDagError(f"query ({var}, {state}) does not match the network")

    patterns = list(oracle.evidence_assignments(domains))
    if args.samples is not None:
        rng = random.Random(args.seed)
        patterns = [rng.choice(patterns) for _ in range(args.samples)]
    esns = dag.esns
    settings = {
        i: [1.0 if ev[var] is None or ev[var] == s else 0.0 for ev in patterns]
        for (var, s), i in esns.items()
    }
    values = oracle.evaluate_batch(dag, settings, len(patterns))
    for row, ev in enumerate(patterns):
        for (var, s), q in dag.query_nodes.items():
            got = float(values[q][row])
            want = oracle.query_probability(net, var, s, ev)
            if not oracle.values_close(got, want):
                shown = " ".join(f"{v}={x}" for v, x in ev.items() if x is not None) or "(none)"
                print(f"counterexample: evidence {shown}: Pr({var}={s}, e) = {_fmt(got)} "
                      f"in dag, {_fmt(want)} by enumeration", file=sys.stderr)
                return 1
    print(f"ok: {len(patterns)} evidence assignments x {len(dag.query_nodes)} queries agree")
    return 0


def cmd_bench(args) -> int:
    dag = parse(_read(args.qdag))
    stats = random_operations(dag, args.ops, args.seed, args.updates_only, args.mode)
    for key, val in stats.items():
        if key != "visits":
            print(f"{key}={val!r}" if isinstance(val, float) else f"{key}={val}")
    if args.updates_only and stats["mul_recomputes"] != 0:
        raise InvariantViolation(f"update-only workload recomputed {stats['mul_recomputes']} "
                                 "multiplication nodes")
    return 0


# -- argument parsing ---------------------------------------------------------

class _Event(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        events = getattr(namespace, self.dest) or []
        kind = "observe" if option_string == "--observe" else "retract"
        events.append((kind, values))
        setattr(namespace, self.dest, events)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a .bn network to a .qdag circuit")
    c.add_argument("network")
    c.add_argument("--query", type=_names, action="append", required=True)
    c.add_argument("--evidence", type=_names, action="append", default=[])
    c.add_argument("-o", "--output")
    c.add_argument("--no-reduce", action="store_true")
    c.set_defaults(func=cmd_compile)

    r = sub.add_parser("reduce", help="reduce a .qdag circuit")
    r.add_argument("qdag")
    r.add_argument("-o", "--output")
    r.add_argument("--report", choices=("text", "kv"), default="text")
    r.set_defaults(func=cmd_reduce)

    e = sub.add_parser("eval", help="evaluate queries under evidence")
    e.add_argument("qdag")
    e.add_argument("--observe", dest="events", type=_assignment, action=_Event, metavar="V=v")
    e.add_argument("--retract", dest="events", action=_Event, metavar="V")
    e.add_argument("--print", action="append", metavar="V")
    e.add_argument("--repl", action="store_true")
    e.add_argument("--mode", choices=MODES, default="paper")
    e.set_defaults(func=cmd_eval)

    k = sub.add_parser("check", help="verify a circuit against brute-force enumeration")
    k.add_argument("network")
    k.add_argument("qdag")
    how = k.add_mutually_exclusive_group()
    how.add_argument("--exhaustive", action="store_true")
    how.add_argument("--samples", type=int)
    k.add_argument("--seed", type=int, default=0)
    k.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="random evidence workload with instrumentation")
    b.add_argument("qdag")
    b.add_argument("--ops", type=int, required=True)
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--updates-only", action="store_true")
    b.add_argument("--mode", choices=MODES, default="paper")
    b.set_defaults(func=cmd_bench)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"qd: internal invariant violated: {exc}", file=sys.stderr)
        return 2
    except (QDagError, ValueError, OSError) as exc:
        print(f"qd: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
