"""A small s-expression language for signatures, machines, transducers,
stream processors, streams and terms.

A document is a sequence of named forms::

    ; comments run to the end of the line
    (sig bits (read 2))
    (stream alt (prefix 1) (cycle 0 1))
    (comodel flip (sig bits) (state a (read 0 b)) (state b (read 1 a)))
    (transducer neg (in bits) (out bits)
      (state p (read (read (leaf 1 p) (leaf 0 p)))))
    (ghp t (input 2) (alphabet a b)
      (state t0 (read (leaf b t0) (leaf b t0))))
    (term two (sig bits) (read x (read y x)))

Inside a transducer or processor body ``(leaf i q)`` is a leaf; everything
else with parentheses must apply a symbol of the input signature.  In a
``term`` form a bare atom is a variable.

:func:`parse_state` and :func:`parse_function` read the expressions the
command line uses to name states and functions relative to a document.
"""

from __future__ import annotations

import re
from collections.abc import Iterator
from dataclasses import dataclass
from typing import Any, Union

from .bimodel import parallel_xor
from .comodel import FinalState, FiniteComodel, Lasso, anamorphism, graft, graft_inf
from .errors import CotransError, DSLSyntaxError, UnknownReference, ValidationError
from .residual import ResidualTransducer, StraightFn, reflect
from .streams import GhpTree, ghp_to_transducer, stream_of, stream_signature
from .theory import App, Signature, Term, Var

KINDS = ("sig", "comodel", "transducer", "ghp", "stream", "term")

# -- reader -----------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class SList:
    items: tuple
    line: int
    col: int


SExpr = Union[Atom, SList]

_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_'\-]*\Z")
_NAT = re.compile(r"[0-9]+\Z")


def _tokens(text: str) -> Iterator[tuple[str, int, int]]:
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        tok = m.group()
        if not tok[0].isspace() and tok[0] != ";":
            if tok not in "()" and not (_IDENT.match(tok) or _NAT.match(tok)):
                raise DSLSyntaxError(f"bad atom {tok!r}", line, col)
            yield tok, line, col
        for ch in tok:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        pos = m.end()


def read(text: str) -> list[SExpr]:
    """All top-level s-expressions of ``text``."""
    stack: list[tuple[list, int, int]] = []
    top: list[SExpr] = []
    for tok, line, col in _tokens(text):
        if tok == "(":
            stack.append(([], line, col))
        elif tok == ")":
            if not stack:
                raise DSLSyntaxError("unexpected ')'", line, col)
            items, l0, c0 = stack.pop()
            node = SList(tuple(items), l0, c0)
            (stack[-1][0] if stack else top).append(node)
        else:
            (stack[-1][0] if stack else top).append(Atom(tok, line, col))
    if stack:
        _, l0, c0 = stack[-1]
        raise DSLSyntaxError("unclosed '('", l0, c0)
    return top


def read_one(text: str) -> SExpr:
    exprs = read(text)
    if len(exprs) != 1:
        raise DSLSyntaxError(f"expected one expression, found {len(exprs)}", 1, 1)
    return exprs[0]


# -- documents --------------------------------------------------------------


@dataclass(frozen=True)
class Form:
    """One named top-level form.  ``refs`` holds the names of referenced forms."""

    kind: str
    name: str
    value: Any
    refs: tuple = ()


@dataclass(frozen=True)
class Document:
    forms: tuple[Form, ...] = ()

    def names(self) -> list[str]:
        return [f.name for f in self.forms]

    def lookup(self, name: str, *kinds: str) -> Form:
        for f in self.forms:
            if f.name == name:
                if kinds and f.kind not in kinds:
                    raise UnknownReference(f"{name!r} is a {f.kind}, expected {' or '.join(kinds)}")
                return f
        raise UnknownReference(f"no form named {name!r}")

    def __contains__(self, name):
        return any(f.name == name for f in self.forms)


def _fail(node: SExpr, message: str):
    raise DSLSyntaxError(message, node.line, node.col)


def _atom(node: SExpr, what: str) -> str:
    if not isinstance(node, Atom):
        _fail(node, f"expected {what}")
    return node.text


def _ident(node: SExpr, what: str) -> str:
    text = _atom(node, what)
    if not _IDENT.match(text):
        _fail(node, f"expected {what}, got {text!r}")
    return text


def _nat(node: SExpr, what: str) -> int:
    text = _atom(node, what)
    if not _NAT.match(text):
        _fail(node, f"expected {what}, got {text!r}")
    return int(text)


def _head(node: SExpr) -> str | None:
    if isinstance(node, SList) and node.items and isinstance(node.items[0], Atom):
        return node.items[0].text
    return None


def _clauses(items, allowed: tuple[str, ...]) -> dict[str, list[SList]]:
    out: dict[str, list[SList]] = {k: [] for k in allowed}
    for item in items:
        h = _head(item)
        if h not in out:
            _fail(item, f"expected one of {', '.join(allowed)}")
        out[h].append(item)
    return out


def _single(node: SExpr, clauses: list[SList], what: str, required: bool = True) -> SList | None:
    if len(clauses) > 1:
        _fail(clauses[1], f"duplicate ({what} ...) clause")
    if not clauses:
        if required:
            _fail(node, f"missing ({what} ...) clause")
        return None
    return clauses[0]


def _var_name(text: str):
    return int(text) if _NAT.match(text) else text


def parse(text: str) -> Document:
    """Parse and validate a document."""
    forms: list[Form] = []
    doc = Document()
    for node in read(text):
        form = _parse_form(node, doc)
        if form.name in doc:
            _fail(node, f"name {form.name!r} defined twice")
        forms.append(form)
        doc = Document(tuple(forms))
    return doc


def _parse_form(node: SExpr, doc: Document) -> Form:
    if not isinstance(node, SList) or len(node.items) < 2:
        _fail(node, "expected (kind name ...)")
    kind = _atom(node.items[0], "a form kind")
    if kind not in KINDS:
        _fail(node.items[0], f"unknown form kind {kind!r}")
    name = _ident(node.items[1], "a form name")
    body = node.items[2:]
    try:
        return _PARSERS[kind](node, name, body, doc)
    except (DSLSyntaxError, UnknownReference):
        raise
    except CotransError as e:
        raise ValidationError(f"{kind} {name}: {e}", e) from e


def _sig_ref(node: SExpr, doc: Document) -> Signature:
    name = _ident(node, "a signature name")
    return doc.lookup(name, "sig").value


def _parse_sig(node, name, body, doc):
    syms = []
    for item in body:
        if not isinstance(item, SList) or len(item.items) != 2:
            _fail(item, "expected (symbol arity)")
        syms.append((_ident(item.items[0], "a symbol"), _nat(item.items[1], "an arity")))
    return Form("sig", name, Signature(tuple(syms), name))


def _state_names(states: list[SList]) -> list[str]:
    names = []
    for st in states:
        if len(st.items) < 2:
            _fail(st, "expected (state name ...)")
        n = _ident(st.items[1], "a state name")
        if n in names:
            _fail(st.items[1], f"state {n!r} defined twice")
        names.append(n)
    if not names:
        raise ValidationError("at least one state is required")
    return names


def _state_ref(node, names: list[str]) -> int:
    n = _ident(node, "a state name")
    if n not in names:
        raise UnknownReference(f"no state named {n!r}")
    return names.index(n)


def _parse_comodel(node, name, body, doc):
    cl = _clauses(body, ("sig", "state"))
    sig_clause = _single(node, cl["sig"], "sig", required=False)
    states = cl["state"]
    names = _state_names(states)
    entries: list[dict[str, tuple[int, int]]] = []
    order: list[str] = []
    for st in states:
        row: dict[str, tuple[int, int]] = {}
        for obs in st.items[2:]:
            if not isinstance(obs, SList) or len(obs.items) != 3:
                _fail(obs, "expected (symbol output next-state)")
            sym = _ident(obs.items[0], "a symbol")
            if sym in row:
                _fail(obs, f"symbol {sym!r} answered twice")
            row[sym] = (_nat(obs.items[1], "an output index"), _state_ref(obs.items[2], names))
            if sym not in order:
                order.append(sym)
        entries.append(row)
    if sig_clause is not None:
        if len(sig_clause.items) != 2:
            _fail(sig_clause, "expected (sig name)")
        sig = _sig_ref(sig_clause.items[1], doc)
        refs = (sig.name,)
    else:
        # arity = one more than the largest answer seen
        sig = Signature(tuple((s, 1 + max(r[s][0] for r in entries if s in r)) for s in order))
        refs = ()
    table = []
    for q, row in enumerate(entries):
        if set(row) != set(sig.names):
            missing = sorted(set(sig.names) - set(row)) or sorted(set(row) - set(sig.names))
            raise ValidationError(f"state {names[q]!r} does not answer exactly the symbols of the signature ({missing})")
        table.append(tuple(row[s] for s in sig.names))
    return Form("comodel", name, FiniteComodel(sig, tuple(table), tuple(names)), refs)


def _parse_step_term(node, sig: Signature, leaf) -> Term:
    if isinstance(node, SList) and _head(node) == "leaf":
        if len(node.items) != 3:
            _fail(node, "expected (leaf output state)")
        return Var(leaf(node.items[1], node.items[2]))
    if not isinstance(node, SList) or _head(node) is None:
        _fail(node, "expected (leaf ...) or (symbol ...)")
    sym = node.items[0].text
    if sym not in sig:
        raise UnknownReference(f"{sym!r} is not a symbol of signature {sig.name}")
    kids = tuple(_parse_step_term(c, sig, leaf) for c in node.items[1:])
    if len(kids) != sig.arity(sym):
        _fail(node, f"{sym!r} takes {sig.arity(sym)} branches, got {len(kids)}")
    return App(sym, kids)


def _parse_transducer(node, name, body, doc):
    cl = _clauses(body, ("in", "out", "state"))
    ins = _single(node, cl["in"], "in")
    outs = _single(node, cl["out"], "out")
    for c in (ins, outs):
        if len(c.items) != 2:
            _fail(c, "expected a signature name")
    in_sig = _sig_ref(ins.items[1], doc)
    out_sig = _sig_ref(outs.items[1], doc)
    states = cl["state"]
    names = _state_names(states)

    def leaf(i, q):
        return (_nat(i, "an output index"), _state_ref(q, names))

    table = []
    for st in states:
        row: dict[str, Term] = {}
        for clause in st.items[2:]:
            if not isinstance(clause, SList) or len(clause.items) != 2:
                _fail(clause, "expected (output-symbol term)")
            sym = _ident(clause.items[0], "an output symbol")
            if sym not in out_sig:
                raise UnknownReference(f"{sym!r} is not a symbol of signature {out_sig.name}")
            if sym in row:
                _fail(clause, f"output {sym!r} defined twice")
            row[sym] = _parse_step_term(clause.items[1], in_sig, leaf)
        if set(row) != set(out_sig.names):
            raise ValidationError(f"state {_ident(st.items[1], 'a state name')!r} must define every output symbol")
        table.append(tuple(row[s] for s in out_sig.names))
    tr = ResidualTransducer(in_sig, out_sig, table, tuple(names))
    return Form("transducer", name, tr, (in_sig.name, out_sig.name))


def _parse_ghp(node, name, body, doc):
    cl = _clauses(body, ("input", "alphabet", "state"))
    inp = _single(node, cl["input"], "input", required=False)
    n = 2
    if inp is not None:
        if len(inp.items) != 2:
            _fail(inp, "expected (input arity)")
        n = _nat(inp.items[1], "an input arity")
    alph_clause = _single(node, cl["alphabet"], "alphabet")
    alphabet = [_atom(a, "a letter") for a in alph_clause.items[1:]]
    if len(set(alphabet)) != len(alphabet):
        _fail(alph_clause, "letters must be distinct")
    states = cl["state"]
    names = _state_names(states)
    sig = stream_signature(n)

    def leaf(b, q):
        letter = _atom(b, "a letter")
        if letter not in alphabet:
            raise UnknownReference(f"{letter!r} is not in the alphabet")
        return (alphabet.index(letter), _state_ref(q, names))

    terms = []
    for st in states:
        if len(st.items) != 3:
            _fail(st, "expected (state name term)")
        terms.append(_parse_step_term(st.items[2], sig, leaf))
    return Form("ghp", name, GhpTree(n, tuple(alphabet), tuple(terms), tuple(names)))


def _parse_stream(node, name, body, doc):
    cl = _clauses(body, ("sig", "prefix", "cycle"))
    sig_clause = _single(node, cl["sig"], "sig", required=False)
    prefix = _single(node, cl["prefix"], "prefix", required=False)
    cycle = _single(node, cl["cycle"], "cycle")
    pre = tuple(_nat(a, "a letter") for a in prefix.items[1:]) if prefix else ()
    cyc = tuple(_nat(a, "a letter") for a in cycle.items[1:])
    seq = Lasso(pre, cyc)
    refs = ()
    if sig_clause is not None:
        sig = _sig_ref(sig_clause.items[1], doc)
        if len(sig) != 1:
            raise ValidationError("a stream signature has exactly one symbol")
        for a in pre + cyc:
            sig.check_index(sig.names[0], a)
        refs = (sig.name,)
    return Form("stream", name, seq, refs)


def parse_term(node: SExpr, sig: Signature) -> Term:
    """A term over ``sig``: bare atoms are variables, lists apply symbols."""
    if isinstance(node, Atom):
        return Var(_var_name(node.text))
    h = _head(node)
    if h is None:
        _fail(node, "expected (symbol ...)")
    if h not in sig:
        raise UnknownReference(f"{h!r} is not a symbol of signature {sig.name}")
    kids = tuple(parse_term(c, sig) for c in node.items[1:])
    if len(kids) != sig.arity(h):
        _fail(node, f"{h!r} takes {sig.arity(h)} branches, got {len(kids)}")
    return App(h, kids)


def _parse_term_form(node, name, body, doc):
    if len(body) != 2 or _head(body[0]) != "sig" or len(body[0].items) != 2:
        _fail(node, "expected (term name (sig S) body)")
    sig = _sig_ref(body[0].items[1], doc)
    return Form("term", name, parse_term(body[1], sig), (sig.name,))


_PARSERS = {
    "sig": _parse_sig,
    "comodel": _parse_comodel,
    "transducer": _parse_transducer,
    "ghp": _parse_ghp,
    "stream": _parse_stream,
    "term": _parse_term_form,
}

# -- expressions naming states and functions --------------------------------


def stream_state(doc: Document, form: Form) -> FinalState:
    sig = doc.lookup(form.refs[0], "sig").value if form.refs else None
    return stream_of(form.value, sig)


def parse_state(doc: Document, text: str) -> FinalState:
    """Evaluate a state expression.

    ``NAME`` (a stream, or a comodel at its first state), ``(ana M q)``,
    ``(const S i ...)``, ``(graft STATE sym i)``,
    ``(spine STATE (prefix (sym i) ...) (cycle (sym i) ...))`` and
    ``(apply FUNCTION STATE)``.
    """
    try:
        return _state(doc, read_one(text))
    except (DSLSyntaxError, UnknownReference):
        raise
    except CotransError as e:
        raise ValidationError(f"state {text!r}: {e}", e) from e


def _state(doc: Document, node: SExpr) -> FinalState:
    if isinstance(node, Atom):
        form = doc.lookup(_ident(node, "a name"), "stream", "comodel")
        if form.kind == "stream":
            return stream_state(doc, form)
        return anamorphism(form.value, 0)
    h = _head(node)
    args = node.items[1:]
    if h == "ana" and len(args) == 2:
        m = doc.lookup(_ident(args[0], "a comodel name"), "comodel").value
        return anamorphism(m, _ident(args[1], "a state name"))
    if h == "const" and args:
        sig = _sig_ref(args[0], doc)
        return FinalState.constant(sig, [_nat(a, "an output index") for a in args[1:]])
    if h == "graft" and len(args) == 3:
        return graft(_state(doc, args[0]), _ident(args[1], "a symbol"), _nat(args[2], "an index"))
    if h == "spine" and len(args) in (2, 3):
        s = _state(doc, args[0])
        cl = _clauses(args[1:], ("prefix", "cycle"))
        pre = _single(node, cl["prefix"], "prefix", required=False)
        cyc = _single(node, cl["cycle"], "cycle")

        def pairs(c):
            out = []
            for p in c.items[1:]:
                if not isinstance(p, SList) or len(p.items) != 2:
                    _fail(p, "expected (symbol index)")
                out.append((_ident(p.items[0], "a symbol"), _nat(p.items[1], "an index")))
            return tuple(out)

        return graft_inf(s, Lasso(pairs(pre) if pre else (), pairs(cyc)))
    if h == "apply" and len(args) == 2:
        return _function(doc, args[0])(_state(doc, args[1]))
    _fail(node, "expected a state expression")


def parse_function(doc: Document, text: str) -> StraightFn:
    """Evaluate a function expression.

    ``NAME`` (a transducer or processor at its first state),
    ``(reflect T q)``, ``(ghp G t)`` and ``(parallel-xor S)``.
    """
    try:
        return _function(doc, read_one(text))
    except (DSLSyntaxError, UnknownReference):
        raise
    except CotransError as e:
        raise ValidationError(f"function {text!r}: {e}", e) from e


def _function(doc: Document, node: SExpr) -> StraightFn:
    if isinstance(node, Atom):
        form = doc.lookup(_ident(node, "a name"), "transducer", "ghp")
        tr = form.value if form.kind == "transducer" else ghp_to_transducer(form.value)
        return reflect(tr, 0)
    h = _head(node)
    args = node.items[1:]
    if h == "reflect" and len(args) == 2:
        tr = doc.lookup(_ident(args[0], "a transducer name"), "transducer").value
        return reflect(tr, _ident(args[1], "a state name"))
    if h == "ghp" and len(args) == 2:
        g = doc.lookup(_ident(args[0], "a processor name"), "ghp").value
        return reflect(ghp_to_transducer(g), _ident(args[1], "a state name"))
    if h == "parallel-xor" and len(args) == 1:
        return parallel_xor(_sig_ref(args[0], doc))
    _fail(node, "expected a function expression")


def output_alphabet(doc: Document, text: str) -> tuple[str, ...] | None:
    """Letters of the processor a function expression names, if it names one."""
    node = read_one(text)
    if isinstance(node, Atom):
        name = node.text
    elif _head(node) == "ghp" and len(node.items) == 3 and isinstance(node.items[1], Atom):
        name = node.items[1].text
    else:
        return None
    if name in doc and doc.lookup(name).kind == "ghp":
        return doc.lookup(name).value.alphabet
    return None


def parse_term_expr(doc: Document, text: str) -> Term:
    """``NAME`` of a term form, or ``(S body)`` with an explicit signature."""
    node = read_one(text)
    if isinstance(node, Atom):
        return doc.lookup(_ident(node, "a term name"), "term").value
    if isinstance(node, SList) and len(node.items) == 2:
        return parse_term(node.items[1], _sig_ref(node.items[0], doc))
    _fail(node, "expected a term name or (signature term)")


# -- printer ----------------------------------------------------------------


def _var_text(v) -> str:
    return str(v)


def term_text(t: Term, leaf=_var_text) -> str:
    if isinstance(t, Var):
        return leaf(t.name)
    return "(" + " ".join([t.sym] + [term_text(c, leaf) for c in t.children]) + ")"


def _sig_text(name: str, sig: Signature) -> str:
    return f"(sig {name} " + " ".join(f"({s} {n})" for s, n in sig.symbols) + ")"


def _comodel_text(name: str, m: FiniteComodel, refs: tuple) -> str:
    lines = [f"(comodel {name}" + (f" (sig {refs[0]})" if refs else "")]
    for q, row in enumerate(m.table):
        obs = " ".join(f"({s} {o} {m.name_of(n)})" for s, (o, n) in zip(m.signature.names, row))
        lines.append(f"  (state {m.name_of(q)} {obs})")
    return "\n".join(lines) + ")"


def transducer_text(name: str, tr: ResidualTransducer) -> str:
    """Transducer form; the signatures are referred to by their names."""
    if tr.in_sig.name is None or tr.out_sig.name is None:
        raise ValidationError("a transducer's signatures need names to be printed")

    def leaf(v):
        i, q = v
        return f"(leaf {i} {tr.name_of(q)})"

    lines = [f"(transducer {name} (in {tr.in_sig.name}) (out {tr.out_sig.name})"]
    for q, row in enumerate(tr.table):
        steps = " ".join(f"({s} {term_text(t, leaf)})" for s, t in zip(tr.out_sig.names, row))
        lines.append(f"  (state {tr.name_of(q)} {steps})")
    return "\n".join(lines) + ")"


def _ghp_text(name: str, g: GhpTree) -> str:
    def leaf(v):
        b, q = v
        return f"(leaf {g.alphabet[b]} {g.name_of(q)})"

    lines = [f"(ghp {name} (input {g.input_arity}) (alphabet {' '.join(g.alphabet)})"]
    for q, t in enumerate(g.terms):
        lines.append(f"  (state {g.name_of(q)} {term_text(t, leaf)})")
    return "\n".join(lines) + ")"


def _stream_text(name: str, seq: Lasso, refs: tuple) -> str:
    parts = [f"(stream {name}"]
    if refs:
        parts.append(f"(sig {refs[0]})")
    if seq.prefix:
        parts.append("(prefix " + " ".join(map(str, seq.prefix)) + ")")
    parts.append("(cycle " + " ".join(map(str, seq.cycle)) + ")")
    return " ".join(parts) + ")"


def form_text(form: Form) -> str:
    k, name, v = form.kind, form.name, form.value
    if k == "sig":
        return _sig_text(name, v)
    if k == "comodel":
        return _comodel_text(name, v, form.refs)
    if k == "transducer":
        return transducer_text(name, v)
    if k == "ghp":
        return _ghp_text(name, v)
    if k == "stream":
        return _stream_text(name, v, form.refs)
    return f"(term {name} (sig {form.refs[0]}) {term_text(v)})"


def serialize(doc: Document) -> str:
    """Canonical text of a document: one form per block, blank line between."""
    return "\n\n".join(form_text(f) for f in doc.forms) + ("\n" if doc.forms else "")


def behaviour_lines(s: FinalState, depth: int, alphabet=None) -> list[str]:
    """``depth`` levels of a state: letters for streams, else one line per word.

    ``alphabet`` names the letters of a stream; by default they are numbers.
    """
    sig = s.signature
    if len(sig) == 1:
        out, x = [], s
        for _ in range(depth):
            a, x = x.observe(sig.names[0])
            out.append(alphabet[a] if alphabet else str(a))
        return ["(stream" + "".join(" " + a for a in out) + ")"]
    lines = []
    level = [((), s)]
    for _ in range(depth):
        nxt = []
        for w, x in level:
            lines.append("(at (" + " ".join(w) + ") (" + " ".join(map(str, x.head())) + "))")
            nxt.extend((w + (sym,), x.deriv(sym)) for sym in sig.names)
        level = nxt
    return lines

