"""Command line front end.

Every command reads a document, evaluates expressions against it and prints
line-oriented s-expressions.  Exit status is 0 on success, 1 when the
library reports a domain error, 2 on bad usage.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence

from . import dsl
from .bimodel import ReifyBudget, reify
from .comodel import derived_coop, in_subbasis, op_equiv, path_along
from .errors import CotransError, NotFinitelyPresentable, NotStraightWithinBudget, ValidationError


def _load(path: str) -> dsl.Document:
    if path == "-":
        return dsl.parse(sys.stdin.read())
    with open(path, encoding="utf-8") as fh:
        return dsl.parse(fh.read())


def _budget(args) -> ReifyBudget:
    return ReifyBudget(tree_depth=args.tree_depth, max_states=args.max_states, seed=args.seed)


def cmd_behave(doc, args, out):
    s = dsl.parse_state(doc, args.state)
    out.extend(dsl.behaviour_lines(s, args.depth))


def cmd_eval(doc, args, out):
    t = dsl.parse_term_expr(doc, args.term)
    s = dsl.parse_state(doc, args.state)
    v, rest = derived_coop(t, s)
    out.append(f"(leaf {v})")
    out.extend(dsl.behaviour_lines(rest, args.depth))


def cmd_member(doc, args, out):
    t = dsl.parse_term_expr(doc, args.term)
    s = dsl.parse_state(doc, args.state)
    v = dsl._var_name(args.var)
    out.append("true" if in_subbasis(s, t, v) else "false")


def cmd_path(doc, args, out):
    t = dsl.parse_term_expr(doc, args.term)
    s = dsl.parse_state(doc, args.state)
    steps = "".join(f" ({sym} {i})" for sym, i in path_along(t, s))
    out.append(f"(path{steps})")


def cmd_run(doc, args, out):
    f = dsl.parse_function(doc, args.function)
    s = dsl.parse_state(doc, args.state)
    out.extend(dsl.behaviour_lines(f(s), args.depth, dsl.output_alphabet(doc, args.function)))


def cmd_equiv(doc, args, out):
    a = dsl.parse_state(doc, args.left)
    b = dsl.parse_state(doc, args.right)
    out.append("true" if op_equiv(a, b, args.depth) else "false")


def _report_reified(f, args, out):
    budget = _budget(args)
    try:
        root = reify(f, budget)
    except NotStraightWithinBudget as e:
        ctx = e.context
        out.append(
            f"(not-straight (state {ctx.get('state')}) (symbol {ctx.get('symbol')}) "
            f"(tree-depth {ctx.get('tree_depth')}))"
        )
        return 1
    try:
        tr = root.to_transducer()
    except NotFinitelyPresentable:
        out.append(f"(lazy {len(root.reifier.states)} (seed {budget.seed}))")
        return 0
    out.extend(dsl.transducer_text(args.name, tr).splitlines())
    return 0


def cmd_reify(doc, args, out):
    return _report_reified(dsl.parse_function(doc, args.function), args, out)


def cmd_canon(doc, args, out):
    if args.transducer.lstrip().startswith("("):
        if args.state is not None:
            raise ValidationError("a state only goes with a transducer or processor name")
        return _report_reified(dsl.parse_function(doc, args.transducer), args, out)
    form = doc.lookup(args.transducer, "transducer", "ghp")
    if args.state is None:
        expr = form.name
    elif form.kind == "transducer":
        expr = f"(reflect {form.name} {args.state})"
    else:
        expr = f"(ghp {form.name} {args.state})"
    return _report_reified(dsl.parse_function(doc, expr), args, out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cotrans", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, fn, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("document", help="document file, or - for stdin")
        sp.set_defaults(fn=fn)
        return sp

    def depth(sp, default=8):
        sp.add_argument("--depth", type=int, default=default, help="observation depth (default %(default)s)")

    def fuel(sp):
        sp.add_argument("--tree-depth", type=int, default=4, help="largest decision tree searched (default 4)")
        sp.add_argument("--max-states", type=int, default=64, help="states explored before giving up (default 64)")
        sp.add_argument("--seed", type=int, default=0, help="seed for the probe environments (default 0)")
        sp.add_argument("--name", default="canon", help="name of the printed transducer")

    sp = command("behave", cmd_behave, "print a state's outputs level by level")
    sp.add_argument("state")
    depth(sp)

    sp = command("eval", cmd_eval, "run a term against a state")
    sp.add_argument("term")
    sp.add_argument("state")
    depth(sp, 2)

    sp = command("member", cmd_member, "does the term return VAR on the state?")
    sp.add_argument("term")
    sp.add_argument("var")
    sp.add_argument("state")

    sp = command("path", cmd_path, "the branch a term takes on a state")
    sp.add_argument("term")
    sp.add_argument("state")

    sp = command("run", cmd_run, "apply a transducer (or any function) to a state")
    sp.add_argument("function")
    sp.add_argument("state")
    depth(sp)

    sp = command("equiv", cmd_equiv, "bounded equivalence of two states")
    sp.add_argument("left")
    sp.add_argument("right")
    depth(sp)

    sp = command("reify", cmd_reify, "canonical transducer of a function")
    sp.add_argument("function")
    fuel(sp)

    sp = command("canon", cmd_canon, "canonical form of a transducer state")
    sp.add_argument("transducer", help="transducer or processor name, or a function expression")
    sp.add_argument("state", nargs="?")
    fuel(sp)
    return p


def main(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "depth", 0) < 0 or getattr(args, "tree_depth", 0) < 0 or getattr(args, "max_states", 1) < 1:
        parser.error("depths must be non-negative and --max-states positive")
    out: list[str] = []
    try:
        doc = _load(args.document)
        status = args.fn(doc, args, out) or 0
    except OSError as e:
        print(f"cotrans: {e}", file=sys.stderr)
        return 2
    except CotransError as e:
        stdout.write("".join(line + "\n" for line in out))
        stdout.write(f"(error {type(e).__name__} {_quote(str(e))})\n")
        return 1
    stdout.write("".join(line + "\n" for line in out))
    return status


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


if __name__ == "__main__":
    sys.exit(main())
