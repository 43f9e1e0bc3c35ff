"""Concrete syntax for process expressions: lexer, parser and renderer.

Operator precedence, descending:

    prefix -
    ;  and whitespace sequencing        (tight; whitespace form only in
                                         definition bodies / paren groups)
    <*  *>  |*|  o*o                    (merge auxiliaries)
    /  |/|  %/  %/%  %/%/
    &  &&  |  ||  |+|  +
    |;  ||;  |;|
    ~~(x:T)~~>  ~/~(e:T)~~>  ~~(x:T)~~>>   (right associative)
    newline sequencing                  (definition bodies / paren groups)

`do E then E else E` is a self-delimiting form that swallows to the right.
A line starting with an infix operator continues the previous line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .terms import (
    ActionLabel, Alt, AndPar, Atom, Binder, Break, CommMerge, DisambAlt,
    DisambDisrupt, DisambSeq1, DisambSeq2, DisambSeqX, Disrupt, DoThenElse,
    Etcetera, EtceteraOpt, ExcFlow, Flow, Gamma, Interrupt, LeftMerge,
    MandInterrupts, MultiInterrupt, Neg, One, OptBreak, OrPar1, OrPar2, Par,
    Pred, ProcessEnv, Raised, RightMerge, Seq, StreamFlow, Term, TermMerge,
    Test, Value, Var, While, Zero,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        loc = f"line {line}, col {col}"
        if expected:
            message = f"{message} (expected one of: {', '.join(sorted(expected))})"
        super().__init__(f"{loc}: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.expected = tuple(sorted(expected))


# --------------------------------------------------------------------------
# Lexer
# --------------------------------------------------------------------------

_OPERATORS = sorted(
    [
        ")~~>>", ")~~>", "~/~(", "~~(", "%/%/", "%/%", "%/",
        "|;|", "||;", "|;", "|+|", "|/|", "|*|", "o*o", "...", "..",
        "<*", "*>", "||", "&&",
        "+", "&", "|", "/", ";", "-", "(", ")", "=", "^", "!", ":", ".",
    ],
    key=len,
    reverse=True,
)

KEYWORDS = {"do", "then", "else", "break", "while", "test", "true", "false", "raised"}


@dataclass(frozen=True)
class Token:
    kind: str  # OP, IDENT, KEYWORD, INT, STRING, NEWLINE, EOF
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            if toks and toks[-1].kind != "NEWLINE":
                toks.append(Token("NEWLINE", "\n", line, col))
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t":
            i += 1
            col += 1
            continue
        if c == "#":  # comment to end of line
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == "δ":  # delta, alias for 0
            toks.append(Token("INT", "0", line, col))
            i += 1
            col += 1
            continue
        if c == "ε":  # epsilon, alias for 1
            toks.append(Token("INT", "1", line, col))
            i += 1
            col += 1
            continue
        matched = None
        for op in _OPERATORS:
            if text.startswith(op, i):
                matched = op
                break
        # an identifier beats a same-length operator prefix like "o*o" never,
        # but "o" followed by letters must lex as one identifier
        if matched and matched[0].isalpha():
            j = i + len(matched)
            if j < n and (text[j].isalnum() or text[j] == "_"):
                matched = None
        if matched:
            toks.append(Token("OP", matched, line, col))
            i += len(matched)
            col += len(matched)
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("INT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            toks.append(Token("KEYWORD" if word in KEYWORDS else "IDENT", word, line, col))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    esc = text[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                raise ParseError("unterminated string literal", line, col)
            toks.append(Token("STRING", "".join(buf), line, col))
            col += j + 1 - i
            i = j + 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("EOF", "", line, toks[-1].col if toks else 1))
    return toks


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

DSEQ_OPS = ("|;", "||;", "|;|")
ADD_OPS = ("+", "&", "&&", "|", "||", "|+|")
MERGE_OPS = ("<*", "*>", "|*|", "o*o")
DIS_OPS = ("/", "|/|", "%/", "%/%", "%/%/")
FLOW_OPS = ("~~(", "~/~(")
ALL_INFIX = DSEQ_OPS + ADD_OPS + MERGE_OPS + DIS_OPS + FLOW_OPS + (";",)

_BIN_NODE = {
    ";": Seq,
    "/": Disrupt, "|/|": DisambDisrupt, "%/": Interrupt,
    "%/%": MultiInterrupt, "%/%/": MandInterrupts,
    "+": Alt, "&": Par, "&&": AndPar, "|": OrPar1, "||": OrPar2, "|+|": DisambAlt,
    "<*": LeftMerge, "*>": RightMerge, "|*|": CommMerge, "o*o": TermMerge,
    "|;": DisambSeq1, "||;": DisambSeq2, "|;|": DisambSeqX,
}

_TYPE_ALIASES = {
    "Bool": "Bool", "Boolean": "Bool",
    "Int": "Int", "Integer": "Int",
    "Str": "Str", "String": "Str",
    "Exc": "Str", "Exception": "Str",
}


class _Parser:
    def __init__(self, tokens: list[Token], names: frozenset[str], allow_juxt: bool):
        self.toks = tokens
        self.pos = 0
        self.names = names
        self.allow_juxt = allow_juxt

    # -- token helpers ----------------------------------------------------

    def cur(self) -> Token:
        return self.toks[self.pos]

    def error(self, message: str, expected: tuple[str, ...] = ()):
        t = self.cur()
        raise ParseError(message, t.line, t.col, expected)

    def eat(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.cur()
        if t.kind != kind or (text is not None and t.text != text):
            self.error(f"unexpected {t.kind} {t.text!r}", (text or kind,))
        self.pos += 1
        return t

    def at_op(self, *syms: str) -> bool:
        t = self.cur()
        return t.kind == "OP" and t.text in syms

    def skip_newlines(self):
        while self.cur().kind == "NEWLINE":
            self.pos += 1

    def infix_ahead(self) -> Optional[str]:
        """Current infix operator symbol, looking through newlines when the
        next line starts with an infix operator (operator-led continuation)."""
        i = self.pos
        while self.toks[i].kind == "NEWLINE":
            i += 1
        t = self.toks[i]
        if t.kind == "OP" and t.text in ALL_INFIX:
            return t.text
        return None

    def take_infix(self, sym: str):
        self.skip_newlines()
        self.eat("OP", sym)
        self.skip_newlines()

    def starts_primary(self) -> bool:
        t = self.cur()
        if t.kind == "INT":
            return t.text in ("0", "1")
        if t.kind == "IDENT":
            return True
        if t.kind == "KEYWORD":
            return t.text in ("do", "break", "while", "test", "raised")
        if t.kind == "OP":
            return t.text in ("(", "...", "..", ".", "-")
        return False

    # -- grammar ----------------------------------------------------------

    def parse_group(self) -> Term:
        """Newline-sequenced expression list (definition body or paren group)."""
        self.skip_newlines()
        left = self.parse_flow()
        while True:
            if self.cur().kind != "NEWLINE":
                break
            save = self.pos
            self.skip_newlines()
            if self.starts_primary():
                right = self.parse_flow()
                left = Seq(left, right)
            else:
                self.pos = save
                break
        return left

    def parse_flow(self) -> Term:
        left = self.parse_dseq()
        op = self.infix_ahead()
        if op in FLOW_OPS:
            self.skip_newlines()
            exceptional = self.cur().text == "~/~("
            self.pos += 1
            name = self.eat("IDENT").text
            self.eat("OP", ":")
            ty = self.cur()
            if ty.kind not in ("IDENT", "KEYWORD") or ty.text not in _TYPE_ALIASES:
                self.error(f"unknown binder type {ty.text!r}", tuple(_TYPE_ALIASES))
            self.pos += 1
            close = self.cur()
            if not self.at_op(")~~>", ")~~>>"):
                self.error("expected flow arrow close", (")~~>", ")~~>>"))
            self.pos += 1
            self.skip_newlines()
            binder = Binder(name, _TYPE_ALIASES[ty.text])
            right = self.parse_flow()  # right associative
            if exceptional:
                if close.text == ")~~>>":
                    raise ParseError("exception flow has no stream form", close.line, close.col)
                return ExcFlow(left, binder, right)
            if close.text == ")~~>>":
                return StreamFlow(left, binder, right)
            return Flow(left, binder, right)
        return left

    def parse_dseq(self) -> Term:
        left = self.parse_add()
        while True:
            op = self.infix_ahead()
            if op in DSEQ_OPS:
                self.take_infix(op)
                left = _BIN_NODE[op](left, self.parse_add())
            else:
                return left

    def parse_add(self) -> Term:
        left = self.parse_disrupt()
        while True:
            op = self.infix_ahead()
            if op in ADD_OPS:
                self.take_infix(op)
                left = _BIN_NODE[op](left, self.parse_disrupt())
            else:
                return left

    def parse_disrupt(self) -> Term:
        left = self.parse_merge()
        while True:
            op = self.infix_ahead()
            if op in DIS_OPS:
                self.take_infix(op)
                left = _BIN_NODE[op](left, self.parse_merge())
            else:
                return left

    def parse_merge(self) -> Term:
        left = self.parse_seq()
        while True:
            op = self.infix_ahead()
            if op in MERGE_OPS:
                self.take_infix(op)
                left = _BIN_NODE[op](left, self.parse_seq())
            else:
                return left

    def parse_seq(self) -> Term:
        left = self.parse_prefix()
        while True:
            if self.at_op(";"):
                self.pos += 1
                self.skip_newlines()
                left = Seq(left, self.parse_prefix())
            elif self.allow_juxt and self.starts_primary():
                left = Seq(left, self.parse_prefix())
            else:
                return left

    def parse_prefix(self) -> Term:
        if self.at_op("-"):
            self.pos += 1
            return Neg(self.parse_prefix())
        return self.parse_primary()

    def parse_primary(self) -> Term:
        t = self.cur()
        if t.kind == "INT":
            if t.text == "0":
                self.pos += 1
                return Zero()
            if t.text == "1":
                self.pos += 1
                value = self.parse_yield()
                return One(value)
            self.error(f"unexpected integer {t.text}")
        if t.kind == "IDENT":
            self.pos += 1
            value = self.parse_yield()
            raises = None
            if self.at_op("!"):
                self.pos += 1
                raises = self.eat("IDENT").text
            if t.text in self.names:
                if value is not None or raises is not None:
                    raise ParseError(
                        f"definition reference {t.text!r} cannot carry annotations",
                        t.line, t.col)
                return Var(t.text)
            return Atom(ActionLabel(t.text, value, raises))
        if t.kind == "KEYWORD":
            if t.text == "do":
                self.pos += 1
                self.skip_newlines()
                cond = self.parse_flow()
                self.skip_newlines()
                self.eat("KEYWORD", "then")
                self.skip_newlines()
                then = self.parse_flow()
                self.skip_newlines()
                self.eat("KEYWORD", "else")
                self.skip_newlines()
                orelse = self.parse_flow()
                return DoThenElse(cond, then, orelse)
            if t.text == "break":
                self.pos += 1
                return Break()
            if t.text in ("while", "test"):
                self.pos += 1
                self.eat("OP", "(")
                pred = self.parse_pred()
                self.eat("OP", ")")
                return While(pred) if t.text == "while" else Test(pred)
            if t.text == "raised":
                self.pos += 1
                self.eat("OP", "!")
                return Raised(self.eat("IDENT").text)
            self.error(f"reserved word {t.text!r} cannot start an expression")
        if t.kind == "OP":
            if t.text == "...":
                self.pos += 1
                return Etcetera()
            if t.text == "..":
                self.pos += 1
                return EtceteraOpt()
            if t.text == ".":
                self.pos += 1
                return OptBreak()
            if t.text == "(":
                self.pos += 1
                inner = self.parse_group()
                self.skip_newlines()
                self.eat("OP", ")")
                return inner
        self.error(f"unexpected {t.kind} {t.text!r}",
                   ("0", "1", "identifier", "(", "...", "..", ".", "break", "while", "do"))

    def parse_yield(self) -> Optional[Value]:
        if not self.at_op("^"):
            return None
        self.pos += 1
        t = self.cur()
        neg = False
        if self.at_op("-"):
            neg = True
            self.pos += 1
            t = self.cur()
        if t.kind == "INT":
            self.pos += 1
            return Value("Int", -int(t.text) if neg else int(t.text))
        if neg:
            self.error("expected integer after '-'")
        if t.kind == "KEYWORD" and t.text in ("true", "false"):
            self.pos += 1
            return Value("Bool", t.text == "true")
        if t.kind == "STRING":
            self.pos += 1
            return Value("Str", t.text)
        self.error("expected value literal after '^'", ("int", "true", "false", "string"))

    def parse_pred(self) -> Pred:
        negated = False
        if self.at_op("!"):
            negated = True
            self.pos += 1
        t = self.cur()
        if t.kind == "KEYWORD" and t.text in ("true", "false"):
            self.pos += 1
            return Pred(const=(t.text == "true"), negated=negated)
        if t.kind == "IDENT":
            self.pos += 1
            return Pred(name=t.text, negated=negated)
        self.error("expected predicate", ("true", "false", "identifier"))


# --------------------------------------------------------------------------
# File-level parsing
# --------------------------------------------------------------------------


@dataclass
class SourceSpec:
    """A parsed source file: definitions, the distinguished main term and the
    original text."""

    text: str
    env: ProcessEnv
    main: Optional[Term]
    order: list[str] = field(default_factory=list)


def _split_definitions(toks: list[Token]) -> list[tuple[Token, list[Token]]]:
    """Split the token stream into (name token, body tokens) chunks.  A new
    definition starts at `ident =` on a fresh line outside parentheses."""
    defs: list[tuple[Token, list[Token]]] = []
    i = 0
    n = len(toks)

    def at_def(j: int) -> bool:
        return (
            toks[j].kind == "IDENT"
            and j + 1 < n
            and toks[j + 1].kind == "OP"
            and toks[j + 1].text == "="
        )

    while toks[i].kind == "NEWLINE":
        i += 1
    if toks[i].kind == "EOF":
        return defs
    if not at_def(i):
        raise ParseError("expected a definition (name = expression)",
                         toks[i].line, toks[i].col)
    while i < n and toks[i].kind != "EOF":
        name_tok = toks[i]
        i += 2  # name, '='
        body: list[Token] = []
        depth = 0
        line_start = False
        while i < n and toks[i].kind != "EOF":
            t = toks[i]
            if t.kind == "NEWLINE":
                line_start = True
                body.append(t)
                i += 1
                continue
            if t.kind == "OP" and t.text == "(":
                depth += 1
            elif t.kind == "OP" and t.text == ")":
                depth -= 1
            if line_start and depth == 0 and at_def(i):
                break
            line_start = False
            body.append(t)
            i += 1
        body.append(Token("EOF", "", name_tok.line, name_tok.col))
        defs.append((name_tok, body))
    return defs


def parse(text: str, gamma: Optional[Gamma] = None) -> SourceSpec:
    """Parse a source file into definitions plus the distinguished `main`."""
    toks = tokenize(text)
    chunks = _split_definitions(toks)
    names = []
    seen = set()
    for name_tok, _ in chunks:
        if name_tok.text in seen:
            raise ParseError(f"duplicate definition {name_tok.text!r}",
                             name_tok.line, name_tok.col)
        seen.add(name_tok.text)
        names.append(name_tok.text)
    known = frozenset(names)
    defs: dict[str, Term] = {}
    for name_tok, body in chunks:
        p = _Parser(body, known, allow_juxt=True)
        term = p.parse_group()
        p.skip_newlines()
        if p.cur().kind != "EOF":
            p.error(f"trailing input after definition {name_tok.text!r}")
        defs[name_tok.text] = term
    env = ProcessEnv(defs, gamma)
    return SourceSpec(text=text, env=env, main=defs.get("main"), order=names)


def parse_expr(text: str, names: frozenset[str] = frozenset(),
               allow_juxt: bool = False) -> Term:
    """Parse a single expression.  Whitespace sequencing is off by default;
    use `;` at top level."""
    toks = tokenize(text)
    p = _Parser(toks, names, allow_juxt=allow_juxt)
    term = p.parse_group()
    p.skip_newlines()
    if p.cur().kind != "EOF":
        p.error("trailing input after expression")
    return term


# --------------------------------------------------------------------------
# Rendering
# --------------------------------------------------------------------------

_P_SEQ, _P_MERGE, _P_DIS, _P_ADD, _P_DSEQ, _P_FLOW, _P_DTE = 60, 55, 50, 40, 30, 20, 10
_P_NEG, _P_ATOM = 70, 100

_BIN_RENDER: dict[type, tuple[str, int]] = {
    Seq: (";", _P_SEQ),
    LeftMerge: (" <* ", _P_MERGE), RightMerge: (" *> ", _P_MERGE),
    CommMerge: (" |*| ", _P_MERGE), TermMerge: (" o*o ", _P_MERGE),
    Disrupt: (" / ", _P_DIS), DisambDisrupt: (" |/| ", _P_DIS),
    Interrupt: (" %/ ", _P_DIS), MultiInterrupt: (" %/% ", _P_DIS),
    MandInterrupts: (" %/%/ ", _P_DIS),
    Alt: (" + ", _P_ADD), Par: (" & ", _P_ADD), AndPar: (" && ", _P_ADD),
    OrPar1: (" | ", _P_ADD), OrPar2: (" || ", _P_ADD), DisambAlt: (" |+| ", _P_ADD),
    DisambSeq1: (" |; ", _P_DSEQ), DisambSeq2: (" ||; ", _P_DSEQ),
    DisambSeqX: (" |;| ", _P_DSEQ),
}

_FLOW_ARROWS = {Flow: ("~~(", ")~~>"), ExcFlow: ("~/~(", ")~~>"), StreamFlow: ("~~(", ")~~>>")}


def _atom_text(label: ActionLabel) -> str:
    s = label.name
    if label.value is not None:
        s += "^" + label.value.render()
    if label.raises is not None:
        s += "!" + label.raises
    return s


@lru_cache(maxsize=None)
def _render(t: Term, ctx: int) -> str:
    typ = type(t)
    if typ is Zero:
        return "0"
    if typ is One:
        return "1" if t.value is None else "1^" + t.value.render()
    if typ is Atom:
        return _atom_text(t.label)
    if typ is Var:
        return t.name
    if typ is Raised:
        return f"raised!{t.exc}"
    if typ is Etcetera:
        return "..."
    if typ is EtceteraOpt:
        return ".."
    if typ is OptBreak:
        return "."
    if typ is Break:
        return "break"
    if typ is While:
        return f"while({t.pred.render()})"
    if typ is Test:
        return f"test({t.pred.render()})"
    if typ is Neg:
        s = "-" + _render(t.body, _P_NEG)
        return s if ctx <= _P_NEG else f"({s})"
    if typ is DoThenElse:
        s = (f"do {_render(t.cond, 0)} then {_render(t.then, 0)} "
             f"else {_render(t.orelse, 0)}")
        return s if ctx <= _P_DTE else f"({s})"
    if typ in _FLOW_ARROWS:
        opn, close = _FLOW_ARROWS[typ]
        s = (f"{_render(t.left, _P_FLOW + 1)} {opn}{t.binder.render()}{close} "
             f"{_render(t.right, _P_FLOW)}")
        return s if ctx <= _P_FLOW else f"({s})"
    if typ in _BIN_RENDER:
        sym, prec = _BIN_RENDER[typ]
        s = _render(t.left, prec) + sym + _render(t.right, prec + 1)
        return s if ctx <= prec else f"({s})"
    raise ValueError(f"render: not a surface term: {typ.__name__}")


def render(t: Term) -> str:
    """Minimal-parenthesisation text; `parse_expr(render(t))` reproduces t."""
    return _render(t, 0)


# --------------------------------------------------------------------------
# Table file formats
# --------------------------------------------------------------------------


def parse_gamma_table(text: str) -> Gamma:
    """Communication table, one entry per line: `a b -> c`."""
    entries: dict[tuple[str, str], str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, result = line.partition("->")
        parts = head.split()
        if not sep or len(parts) != 2 or len(result.split()) != 1:
            raise ParseError("expected `a b -> c`", lineno, 1)
        entries[(parts[0], parts[1])] = result.strip()
    return Gamma(entries)


def parse_bindings_table(text: str) -> dict[str, bool]:
    """Predicate bindings, one per line: `name = true` or `name = false`."""
    out: dict[str, bool] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        name, value = name.strip(), value.strip().lower()
        if not sep or value not in ("true", "false"):
            raise ParseError("expected `name = true|false`", lineno, 1)
        out[name] = value == "true"
    return out
