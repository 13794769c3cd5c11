"""Input files for the command-line front end.

A document is a line-based list of `key = value` declarations with `#`
comments.  Values are either small integers or expressions over the
variables of the document's chart: z1..zn and w for hypersurfaces and
maps, jet coordinates f<j>, f<j>_<axes> and positions x1..xq for systems
and jets.  Expressions use rational literals p/q, the operators + - * ^,
parentheses, and (in hypersurface documents only) conj, Re and Im.  Every
syntax error carries the source name with a line and column.

Parsed expressions are plain nested tuples, so documents compare
structurally and serialize canonically; parse -> serialize -> parse is
the identity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from ..hypersurface import Hypersurface, ambient_pairing, ambient_var, \
    from_defining
from ..jets import CompleteSystem, JetVector, multi_indices, unknown_layout
from ..mappings import AmbientMap
from ..series import CScalar, TruncatedSeries

KINDS = ("hypersurface", "jet", "map", "system")
FUNCTIONS = ("Im", "Re", "conj")
HALF = Fraction(1, 2)


class ParseError(ValueError):
    """Input rejected, with the offending source position when known."""

    def __init__(self, source, line, col, message):
        self.source = source
        self.line = line
        self.col = col
        if line is None:
            super().__init__(f"{source}: {message}")
        else:
            super().__init__(f"{source}:{line}:{col}: {message}")


_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+|[+\-*^()/=,]|\S")


def _tokenize(text, lineno, source):
    out = []
    for m in _TOKEN.finditer(text):
        tok = m.group()
        col = m.start() + 1
        if tok[0].isalpha() or tok[0] == "_":
            out.append(("name", tok, lineno, col))
        elif tok[0].isdigit():
            out.append(("int", tok, lineno, col))
        elif tok in "+-*^()/=,":
            out.append(("op", tok, lineno, col))
        else:
            raise ParseError(source, lineno, col,
                             f"unexpected character {tok!r}")
    return out


class _ExprParser:
    """Recursive descent over one declaration's token list."""

    def __init__(self, tokens, source, names, allow_conj):
        self.tokens = tokens
        self.i = 0
        self.source = source
        self.names = names
        self.allow_conj = allow_conj

    def error(self, message, tok=None):
        if tok is None:
            tok = self.tokens[self.i] if self.i < len(self.tokens) else None
        if tok is None:
            last = self.tokens[-1]
            raise ParseError(self.source, last[2], last[3] + len(last[1]),
                             message)
        raise ParseError(self.source, tok[2], tok[3], message)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of expression")
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.peek() is not None:
            self.error(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while True:
            tok = self.peek()
            if tok and tok[1] in "+-":
                self.take()
                rhs = self.term()
                node = ("add" if tok[1] == "+" else "sub", node, rhs)
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            tok = self.peek()
            if tok and tok[1] == "*":
                self.take()
                node = ("mul", node, self.unary())
            elif tok and tok[1] == "/":
                self.error("'/' only forms rational literals (p/q)")
            else:
                return node

    def unary(self):
        tok = self.peek()
        if tok and tok[1] == "-":
            self.take()
            return ("neg", self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        tok = self.peek()
        if tok and tok[1] == "^":
            self.take()
            etok = self.take()
            if etok[0] != "int":
                self.error("exponent must be a non-negative integer", etok)
            return ("pow", node, int(etok[1]))
        return node

    def atom(self):
        tok = self.take()
        if tok[0] == "int":
            value = Fraction(int(tok[1]))
            nxt = self.peek()
            if nxt and nxt[1] == "/":
                self.take()
                dtok = self.take()
                if dtok[0] != "int":
                    self.error("rational literal needs an integer "
                               "denominator", dtok)
                if int(dtok[1]) == 0:
                    self.error("zero denominator", dtok)
                value = Fraction(int(tok[1]), int(dtok[1]))
            return ("num", value)
        if tok[0] == "name":
            name = tok[1]
            if name in FUNCTIONS:
                if not self.allow_conj:
                    self.error(f"{name} is only allowed in hypersurface "
                               "expressions", tok)
                if self.take()[1] != "(":
                    self.error(f"{name} needs parentheses", tok)
                inner = self.expr()
                closing = self.take()
                if closing[1] != ")":
                    self.error("expected ')'", closing)
                return ("call", name, inner)
            if name not in self.names:
                self.error(f"unknown identifier {name!r}", tok)
            return ("var", name)
        if tok[1] == "(":
            inner = self.expr()
            closing = self.take()
            if closing[1] != ")":
                self.error("expected ')'", closing)
            return inner
        self.error(f"unexpected token {tok[1]!r}", tok)


_PREC = {"add": 1, "sub": 1, "mul": 2, "neg": 3, "pow": 4,
         "num": 5, "var": 5, "call": 5}


def render_expr(node, parent=0) -> str:
    kind = node[0]
    if kind == "num":
        body = str(node[1])
    elif kind == "var":
        body = node[1]
    elif kind == "call":
        body = f"{node[1]}({render_expr(node[2])})"
    elif kind == "neg":
        body = "-" + render_expr(node[1], _PREC["neg"])
    elif kind == "pow":
        body = render_expr(node[1], _PREC["pow"] + 1) + "^" + str(node[2])
    else:
        op = {"add": " + ", "sub": " - ", "mul": "*"}[kind]
        body = render_expr(node[1], _PREC[kind]) \
            + op + render_expr(node[2], _PREC[kind] + 1)
    if _PREC[kind] < parent:
        return "(" + body + ")"
    return body


def degree_bound(node) -> int:
    """Syntactic total-degree bound; sizes the chart for evaluation."""
    kind = node[0]
    if kind == "num":
        return 0
    if kind == "var":
        return 1
    if kind == "call":
        return degree_bound(node[2])
    if kind == "neg":
        return degree_bound(node[1])
    if kind == "pow":
        return degree_bound(node[1]) * node[2]
    if kind == "mul":
        return degree_bound(node[1]) + degree_bound(node[2])
    return max(degree_bound(node[1]), degree_bound(node[2]))


def eval_expr(node, env, order, pairing=None):
    """Evaluate on the chart given by env: variable name -> series."""
    kind = node[0]
    if kind == "num":
        some = next(iter(env.values()))
        return TruncatedSeries.constant(some.nvars, CScalar(node[1]), order)
    if kind == "var":
        return env[node[1]]
    if kind == "neg":
        return -eval_expr(node[1], env, order, pairing)
    if kind == "pow":
        if node[2] == 0:
            some = next(iter(env.values()))
            return TruncatedSeries.constant(some.nvars, 1, order)
        return eval_expr(node[1], env, order, pairing) ** node[2]
    if kind == "call":
        inner = eval_expr(node[2], env, order, pairing)
        flipped = inner.conjugate(pairing)
        if node[1] == "conj":
            return flipped
        if node[1] == "Re":
            return HALF * (inner + flipped)
        return CScalar(0, -HALF) * (inner - flipped)
    a = eval_expr(node[1], env, order, pairing)
    b = eval_expr(node[2], env, order, pairing)
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    return a * b


# ---------------------------------------------------------------------------
# documents


@dataclass(frozen=True)
class InputDocument:
    kind: str
    scalars: tuple       # sorted (key, int) pairs
    expressions: tuple   # sorted (key, expression tree) pairs
    source: str = field(default="<string>", compare=False)
    positions: tuple = field(default=(), compare=False, repr=False)

    def scalar(self, key, default=None):
        for k, v in self.scalars:
            if k == key:
                return v
        return default

    def expression(self, key):
        for k, v in self.expressions:
            if k == key:
                return v
        raise KeyError(key)

    def position(self, key):
        for k, pos in self.positions:
            if k == key:
                return pos
        return (None, 0)


_SYSTEM_KEY = re.compile(r"^d([1-9]+)_f([1-9][0-9]*)$")
_JET_KEY = re.compile(r"^f([1-9][0-9]*)(?:_([1-9]+))?$")

_SCALAR_KEYS = {
    "hypersurface": {"N": (2, None), "order": (1, None)},
    "map": {"N": (2, None), "order": (1, None)},
    "system": {"axes": (1, 9), "components": (1, None),
               "jet_order": (0, None)},
    "jet": {"axes": (1, 9), "components": (1, None), "jet_order": (0, None)},
}
_REQUIRED_SCALARS = {
    "hypersurface": ("N",),
    "map": ("N",),
    "system": ("axes", "components", "jet_order"),
    "jet": ("axes", "components", "jet_order"),
}


def _exponent_from_digits(digits, q, source, line, col):
    beta = [0] * q
    for ch in digits:
        axis = int(ch)
        if axis > q:
            raise ParseError(source, line, col,
                             f"axis {axis} exceeds the declared {q}")
        beta[axis - 1] += 1
    return tuple(beta)


def _digits_from_exponent(beta) -> str:
    return "".join(str(a + 1) * e for a, e in enumerate(beta))


def jet_coordinate_name(i, beta) -> str:
    suffix = _digits_from_exponent(beta)
    return f"f{i + 1}" + (f"_{suffix}" if suffix else "")


def _chart_names(q, m, k):
    """Identifier -> chart index, jet unknowns first, then positions."""
    names = {}
    for idx, (i, beta) in enumerate(unknown_layout(q, m, k)):
        names[jet_coordinate_name(i, beta)] = idx
    base = len(names)
    for a in range(q):
        names[f"x{a + 1}"] = base + a
    return names


def parse_document(text, source="<string>") -> InputDocument:
    entries = {}
    order_seen = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        tokens = _tokenize(line, lineno, source)
        if len(tokens) < 3 or tokens[0][0] != "name" or tokens[1][1] != "=":
            col = tokens[0][3] if tokens else 1
            raise ParseError(source, lineno, col,
                             "expected a 'key = value' declaration")
        key = tokens[0][1]
        if key in entries:
            raise ParseError(source, lineno, tokens[0][3],
                             f"duplicate declaration of {key!r}")
        entries[key] = (tokens[2:], lineno, tokens[0][3])
        order_seen.append(key)

    if "kind" not in entries:
        raise ParseError(source, None, 0, "missing 'kind' declaration")
    ktoks, kline, kcol = entries.pop("kind")
    if len(ktoks) != 1 or ktoks[0][0] != "name" or ktoks[0][1] not in KINDS:
        raise ParseError(source, kline, kcol,
                         f"kind must be one of {', '.join(KINDS)}")
    kind = ktoks[0][1]

    scalars = {}
    allowed = _SCALAR_KEYS[kind]
    for key in list(entries):
        if key in allowed:
            toks, lineno, col = entries.pop(key)
            if len(toks) != 1 or toks[0][0] != "int":
                raise ParseError(source, lineno, toks[0][3] if toks else col,
                                 f"{key} must be a plain integer")
            value = int(toks[0][1])
            lo, hi = allowed[key]
            if value < lo or (hi is not None and value > hi):
                top = hi if hi is not None else "inf"
                raise ParseError(source, lineno, toks[0][3],
                                 f"{key} must lie in [{lo}, {top}]")
            scalars[key] = (value, (lineno, col))
    for key in _REQUIRED_SCALARS[kind]:
        if key not in scalars:
            raise ParseError(source, None, 0,
                             f"missing '{key}' declaration")

    if kind in ("hypersurface", "map"):
        N = scalars["N"][0]
        names = frozenset([f"z{j + 1}" for j in range(N - 1)] + ["w"])
        allow_conj = kind == "hypersurface"
        if kind == "hypersurface":
            needed = {"rho"}
        else:
            needed = {f"f{j + 1}" for j in range(N)}
    else:
        q = scalars["axes"][0]
        m = scalars["components"][0]
        k = scalars["jet_order"][0]
        allow_conj = False
        if kind == "system":
            names = frozenset(_chart_names(q, m, k))
            needed = {f"d{_digits_from_exponent(alpha)}_f{j + 1}"
                      for j in range(m) for alpha in multi_indices(q, k + 1)}
        else:
            names = frozenset()
            needed = {jet_coordinate_name(i, beta)
                      for i, beta in unknown_layout(q, m, k)}

    expressions = {}
    positions = {}
    for key, (toks, lineno, col) in entries.items():
        canonical = _canonical_key(key, kind, scalars, source, lineno, col)
        if canonical not in needed:
            raise ParseError(source, lineno, col,
                             f"unknown declaration {key!r} for a "
                             f"{kind} document")
        if canonical in expressions:
            raise ParseError(source, lineno, col,
                             f"duplicate declaration of {key!r}")
        expressions[canonical] = _ExprParser(
            toks, source, names, allow_conj).parse()
        positions[canonical] = (lineno, col)
    missing = sorted(needed - set(expressions))
    if missing:
        raise ParseError(source, None, 0,
                         f"missing declarations: {', '.join(missing[:4])}")

    return InputDocument(
        kind=kind,
        scalars=tuple(sorted((k, v[0]) for k, v in scalars.items())),
        expressions=tuple(sorted(expressions.items())),
        source=source,
        positions=tuple(sorted(
            list(positions.items())
            + [(k, v[1]) for k, v in scalars.items()])))


def _canonical_key(key, kind, scalars, source, lineno, col):
    """Sort derivative digit strings so spellings like d21_f1 match d12_f1."""
    if kind == "system":
        m = _SYSTEM_KEY.match(key)
        if not m:
            return key
        q = scalars["axes"][0]
        k = scalars["jet_order"][0]
        beta = _exponent_from_digits(m.group(1), q, source, lineno, col)
        if sum(beta) != k + 1:
            raise ParseError(source, lineno, col,
                             f"rhs key {key!r} must carry exactly "
                             f"{k + 1} axis digits")
        return f"d{_digits_from_exponent(beta)}_f{m.group(2)}"
    if kind == "jet":
        m = _JET_KEY.match(key)
        if not m:
            return key
        q = scalars["axes"][0]
        beta = _exponent_from_digits(m.group(2) or "", q,
                                     source, lineno, col)
        return jet_coordinate_name(int(m.group(1)) - 1, beta)
    return key


def load_document(path) -> InputDocument:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    return parse_document(text, source=str(path))


def serialize_document(doc: InputDocument) -> str:
    lines = [f"kind = {doc.kind}"]
    for key, value in doc.scalars:
        lines.append(f"{key} = {value}")
    for key, node in doc.expressions:
        lines.append(f"{key} = {render_expr(node)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# evaluation into library objects


def _ambient_env(N, order):
    env = {f"z{j + 1}": ambient_var(N, j, order) for j in range(N - 1)}
    env["w"] = ambient_var(N, N - 1, order)
    return env


def build_hypersurface(doc: InputDocument, order: int) -> Hypersurface:
    if doc.kind != "hypersurface":
        raise ParseError(doc.source, None, 0,
                         f"expected a hypersurface document, got {doc.kind}")
    N = doc.scalar("N")
    pairing = ambient_pairing(N)
    rho = eval_expr(doc.expression("rho"), _ambient_env(N, order),
                    order, pairing)
    if rho.conjugate(pairing) != rho:
        line, col = doc.position("rho")
        raise ParseError(doc.source, line, col, "rho is not real-valued")
    return from_defining(rho, N)


def build_map(doc: InputDocument, source_M: Hypersurface,
              target_M: Hypersurface) -> AmbientMap:
    if doc.kind != "map":
        raise ParseError(doc.source, None, 0,
                         f"expected a map document, got {doc.kind}")
    N = doc.scalar("N")
    if N != source_M.N or N != target_M.N:
        raise ParseError(doc.source, None, 0,
                         f"map is in C^{N} but the germs live in "
                         f"C^{source_M.N} and C^{target_M.N}")
    env = _ambient_env(N, source_M.order)
    comps = [eval_expr(doc.expression(f"f{j + 1}"), env, source_M.order)
             for j in range(N)]
    return AmbientMap(comps, source_M, target_M)


def build_system(doc: InputDocument) -> CompleteSystem:
    if doc.kind != "system":
        raise ParseError(doc.source, None, 0,
                         f"expected a system document, got {doc.kind}")
    q = doc.scalar("axes")
    m = doc.scalar("components")
    k = doc.scalar("jet_order")
    names = _chart_names(q, m, k)
    nvars = len(names)
    order = max([1] + [degree_bound(node) for _, node in doc.expressions])
    env = {name: TruncatedSeries.variable(nvars, idx, order)
           for name, idx in names.items()}
    rhs = {}
    for key, node in doc.expressions:
        match = _SYSTEM_KEY.match(key)
        line, col = doc.position(key)
        beta = _exponent_from_digits(match.group(1), q,
                                     doc.source, line, col)
        rhs[(int(match.group(2)) - 1, beta)] = eval_expr(node, env, order)
    return CompleteSystem(q, m, k, rhs)


def eval_constant(node) -> CScalar:
    kind = node[0]
    if kind == "num":
        return CScalar(node[1])
    if kind == "neg":
        return -eval_constant(node[1])
    if kind == "pow":
        base = eval_constant(node[1])
        out = CScalar(1)
        for _ in range(node[2]):
            out = out * base
        return out
    if kind in ("add", "sub", "mul"):
        a, b = eval_constant(node[1]), eval_constant(node[2])
        if kind == "add":
            return a + b
        if kind == "sub":
            return a - b
        return a * b
    raise ValueError(f"not a constant expression ({kind})")


def build_jet(doc: InputDocument) -> JetVector:
    if doc.kind != "jet":
        raise ParseError(doc.source, None, 0,
                         f"expected a jet document, got {doc.kind}")
    q = doc.scalar("axes")
    m = doc.scalar("components")
    k = doc.scalar("jet_order")
    values = {}
    for key, node in doc.expressions:
        match = _JET_KEY.match(key)
        line, col = doc.position(key)
        beta = _exponent_from_digits(match.group(2) or "", q,
                                     doc.source, line, col)
        value = eval_constant(node)
        if not value.is_real():
            raise ParseError(doc.source, line, col,
                             f"jet entry {key} must be real")
        values[(int(match.group(1)) - 1, beta)] = value.re
    return JetVector(q, m, k, values)
