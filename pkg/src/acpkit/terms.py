"""Process-expression trees, values, outcomes and definition environments.

Everything here is immutable after construction and safe to share across
threads.  Terms compare structurally; action labels compare by name only.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, fields
from typing import Iterable, Iterator, Optional

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

VALUE_TAGS = ("Bool", "Int", "Str")


class TermError(Exception):
    """Malformed term, label, value or environment."""


class UnexpandedIterationOperand(TermError):
    """Iteration operand reached a phase that requires prior expansion."""


class UnresolvedVarError(TermError):
    def __init__(self, names):
        super().__init__(f"unresolved process names: {', '.join(sorted(names))}")
        self.names = frozenset(names)


@dataclass(frozen=True)
class Value:
    """Tagged scalar: Bool, Int (64-bit signed) or Str.

    The tag participates in equality, so Bool true and Int 1 are distinct
    (plain Python would conflate them).
    """

    tag: str
    val: bool | int | str

    def __post_init__(self):
        if self.tag not in VALUE_TAGS:
            raise TermError(f"unknown value tag {self.tag!r}")
        if self.tag == "Bool" and not isinstance(self.val, bool):
            raise TermError("Bool value must be a bool")
        if self.tag == "Int":
            if isinstance(self.val, bool) or not isinstance(self.val, int):
                raise TermError("Int value must be an int")
            if not (INT64_MIN <= self.val <= INT64_MAX):
                raise TermError("Int value out of 64-bit signed range")
        if self.tag == "Str" and not isinstance(self.val, str):
            raise TermError("Str value must be a str")

    @staticmethod
    def of(v: bool | int | str) -> "Value":
        if isinstance(v, bool):
            return Value("Bool", v)
        if isinstance(v, int):
            return Value("Int", v)
        return Value("Str", v)

    def render(self) -> str:
        if self.tag == "Bool":
            return "true" if self.val else "false"
        if self.tag == "Int":
            return str(self.val)
        return '"%s"' % str(self.val).replace("\\", "\\\\").replace('"', '\\"')


@dataclass(frozen=True)
class Outcome:
    """Terminal result of a process: Success with an optional value, or
    Failure with an optional exception name."""

    kind: str  # "Success" | "Failure"
    value: Optional[Value] = None
    exc: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("Success", "Failure"):
            raise TermError(f"bad outcome kind {self.kind!r}")
        if self.kind == "Success" and self.exc is not None:
            raise TermError("Success carries no exception")
        if self.kind == "Failure" and self.value is not None:
            raise TermError("Failure carries no value")

    def render(self) -> str:
        if self.kind == "Success":
            return "Success" if self.value is None else f"Success[{self.value.render()}]"
        return "Failure" if self.exc is None else f"Failure[{self.exc}]"


class ActionLabel:
    """An atomic action name with an optional yielded value and an optional
    exception it raises when executed.

    Two labels are equal iff their names are equal; yield and raise
    annotations never affect label identity.
    """

    __slots__ = ("name", "value", "raises")

    def __init__(self, name: str, value: Optional[Value] = None, raises: Optional[str] = None):
        if not IDENT_RE.match(name):
            raise TermError(f"invalid action name {name!r}")
        if raises is not None and not IDENT_RE.match(raises):
            raise TermError(f"invalid exception name {raises!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "raises", raises)

    def __setattr__(self, *a):  # immutable
        raise AttributeError("ActionLabel is immutable")

    def __eq__(self, other):
        return isinstance(other, ActionLabel) and self.name == other.name

    def __hash__(self):
        return hash(("ActionLabel", self.name))

    def __repr__(self):
        extra = ""
        if self.value is not None:
            extra += f", value={self.value!r}"
        if self.raises is not None:
            extra += f", raises={self.raises!r}"
        return f"ActionLabel({self.name!r}{extra})"

    def same_atom(self, other: "ActionLabel") -> bool:
        """Full structural comparison, annotations included."""
        return (
            self.name == other.name
            and self.value == other.value
            and self.raises == other.raises
        )


@dataclass(frozen=True)
class Pred:
    """Predicate for while/test operands: a constant or a (possibly negated)
    named boolean looked up in the runtime binding table."""

    name: Optional[str] = None
    const: Optional[bool] = None
    negated: bool = False

    def __post_init__(self):
        if (self.name is None) == (self.const is None):
            raise TermError("predicate needs exactly one of name/const")
        if self.name is not None and not IDENT_RE.match(self.name):
            raise TermError(f"invalid predicate name {self.name!r}")

    def render(self) -> str:
        if self.const is not None:
            base = "true" if self.const else "false"
        else:
            base = self.name
        return ("!" + base) if self.negated else base

    def eval(self, bindings: dict[str, bool]) -> bool:
        if self.const is not None:
            v = self.const
        else:
            if self.name not in bindings:
                raise UnresolvedPredicateError(self.name)
            v = bindings[self.name]
            if not isinstance(v, bool):
                raise UnresolvedPredicateError(self.name)
        return (not v) if self.negated else v


class UnresolvedPredicateError(TermError):
    def __init__(self, name):
        super().__init__(f"predicate {name!r} has no boolean binding")
        self.name = name


@dataclass(frozen=True)
class Binder:
    """Names and types the data item flowing through a dataflow arrow."""

    name: str
    tag: str

    def __post_init__(self):
        if not IDENT_RE.match(self.name):
            raise TermError(f"invalid binder name {self.name!r}")
        if self.tag not in VALUE_TAGS:
            raise TermError(f"unknown binder type {self.tag!r}")

    def render(self) -> str:
        return f"{self.name}:{self.tag}"


# --------------------------------------------------------------------------
# Term variants
# --------------------------------------------------------------------------


class Term:
    """Base class for all process expressions."""

    __slots__ = ()


@dataclass(frozen=True)
class Zero(Term):
    """Deadlock (the 0 / delta constant)."""


@dataclass(frozen=True)
class One(Term):
    """Empty process (1 / epsilon), optionally yielding a value on success."""

    value: Optional[Value] = None


@dataclass(frozen=True)
class Atom(Term):
    label: ActionLabel

    # Atoms compare by the full label content so that rewriting never
    # conflates actions with different yields (label identity stays
    # name-only for communication and bisimulation purposes).
    def __eq__(self, other):
        return isinstance(other, Atom) and self.label.same_atom(other.label)

    def __hash__(self):
        return hash(("Atom", self.label.name, self.label.value, self.label.raises))


@dataclass(frozen=True)
class Raised(Term):
    """Runtime residue of a raising action: a failed terminal carrying the
    exception name.  Never produced by users directly."""

    exc: str


@dataclass(frozen=True)
class Alt(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Seq(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Par(Term):  # &
    left: Term
    right: Term


@dataclass(frozen=True)
class AndPar(Term):  # &&
    left: Term
    right: Term


@dataclass(frozen=True)
class OrPar1(Term):  # |
    left: Term
    right: Term


@dataclass(frozen=True)
class OrPar2(Term):  # ||
    left: Term
    right: Term


@dataclass(frozen=True)
class LeftMerge(Term):  # <*
    left: Term
    right: Term


@dataclass(frozen=True)
class RightMerge(Term):  # *>
    left: Term
    right: Term


@dataclass(frozen=True)
class CommMerge(Term):  # |*|
    left: Term
    right: Term


@dataclass(frozen=True)
class TermMerge(Term):  # o*o
    left: Term
    right: Term


@dataclass(frozen=True)
class Disrupt(Term):  # /
    left: Term
    right: Term


@dataclass(frozen=True)
class Interrupt(Term):  # %/  (single mandatory interrupt)
    left: Term
    right: Term


@dataclass(frozen=True)
class MultiInterrupt(Term):  # %/%  (zero or more sequential interrupts)
    left: Term
    right: Term


@dataclass(frozen=True)
class MandInterrupts(Term):  # %/%/  (right side runs at each success point)
    left: Term
    right: Term


@dataclass(frozen=True)
class DoThenElse(Term):
    cond: Term
    then: Term
    orelse: Term


@dataclass(frozen=True)
class Neg(Term):
    body: Term


@dataclass(frozen=True)
class Flow(Term):  # x ~~(n:T)~~> y
    left: Term
    binder: Binder
    right: Term


@dataclass(frozen=True)
class ExcFlow(Term):  # x ~/~(n:T)~~> y
    left: Term
    binder: Binder
    right: Term


@dataclass(frozen=True)
class StreamFlow(Term):  # x ~~(n:T)~~>> y
    left: Term
    binder: Binder
    right: Term


@dataclass(frozen=True)
class DisambAlt(Term):  # |+|
    left: Term
    right: Term


@dataclass(frozen=True)
class DisambSeq1(Term):  # |;
    left: Term
    right: Term


@dataclass(frozen=True)
class DisambSeq2(Term):  # ||;
    left: Term
    right: Term


@dataclass(frozen=True)
class DisambSeqX(Term):  # |;|
    left: Term
    right: Term


@dataclass(frozen=True)
class DisambDisrupt(Term):  # |/|
    left: Term
    right: Term


@dataclass(frozen=True)
class Etcetera(Term):
    """The ... operand: marks a loop, no break point."""


@dataclass(frozen=True)
class EtceteraOpt(Term):
    """The .. operand: marks a loop with an optional break at its position."""


@dataclass(frozen=True)
class OptBreak(Term):
    """The . operand: an optional break point."""


@dataclass(frozen=True)
class Break(Term):
    """A mandatory break point."""


@dataclass(frozen=True)
class While(Term):
    pred: Pred


@dataclass(frozen=True)
class Test(Term):
    """Runtime predicate check: succeeds when the predicate holds, deadlocks
    otherwise.  Produced by iteration expansion of while(p)."""

    pred: Pred


@dataclass(frozen=True)
class Var(Term):
    """Reference to a named definition in the ambient ProcessEnv."""

    name: str


ITERATION_OPERANDS = (Etcetera, EtceteraOpt, OptBreak, Break, While)


def term_children(t: Term) -> tuple[Term, ...]:
    """Term-typed children of a node, in field order."""
    out = []
    for f in fields(t):
        v = getattr(t, f.name)
        if isinstance(v, Term):
            out.append(v)
    return tuple(out)


def rebuild(t: Term, children: Iterable[Term]) -> Term:
    """Rebuild a node with replacement term children (other fields kept)."""
    it = iter(children)
    kw = {}
    for f in fields(t):
        v = getattr(t, f.name)
        kw[f.name] = next(it) if isinstance(v, Term) else v
    return type(t)(**kw)


def walk(t: Term) -> Iterator[Term]:
    """Pre-order traversal."""
    yield t
    for c in term_children(t):
        yield from walk(c)


def free_vars(t: Term) -> frozenset[str]:
    """Names of Var nodes occurring in t."""
    return frozenset(n.name for n in walk(t) if isinstance(n, Var))


def subterm_at(t: Term, pos: tuple[int, ...]) -> Term:
    for i in pos:
        kids = term_children(t)
        if i >= len(kids):
            raise TermError(f"position {pos} out of range")
        t = kids[i]
    return t


def replace_at(t: Term, pos: tuple[int, ...], new: Term) -> Term:
    if not pos:
        return new
    kids = list(term_children(t))
    if pos[0] >= len(kids):
        raise TermError(f"position {pos} out of range")
    kids[pos[0]] = replace_at(kids[pos[0]], pos[1:], new)
    return rebuild(t, kids)


# --------------------------------------------------------------------------
# Communication function and environments
# --------------------------------------------------------------------------


class GammaError(TermError):
    pass


class Gamma:
    """Partial commutative communication function on action names.

    Entries are pairwise; synchronisation of more than two parties is
    resolved by closing the table over multisets: gamma-hat({a,b,c}) is the
    common result of every defined bracketing, which load-time validation
    guarantees to be unique.
    """

    def __init__(self, entries: dict[tuple[str, str], str] | None = None):
        table: dict[tuple[str, str], str] = {}
        for (a, b), c in (entries or {}).items():
            for n in (a, b, c):
                if not IDENT_RE.match(n):
                    raise GammaError(f"invalid action name {n!r} in gamma table")
            key = (a, b) if a <= b else (b, a)
            if key in table and table[key] != c:
                raise GammaError(f"conflicting entries for ({a},{b})")
            table[key] = c
        self._table = table
        self._combine_memo: dict[tuple[str, ...], Optional[str]] = {}

    def __bool__(self):
        return bool(self._table)

    def entries(self) -> dict[tuple[str, str], str]:
        return dict(self._table)

    def pair(self, a: str, b: str) -> Optional[str]:
        return self._table.get((a, b) if a <= b else (b, a))

    def names(self) -> frozenset[str]:
        out = set()
        for (a, b), c in self._table.items():
            out.update((a, b, c))
        return frozenset(out)

    def combine(self, parts: tuple[str, ...]) -> Optional[str]:
        """Result action of synchronising the whole multiset, or None."""
        parts = tuple(sorted(parts))
        if len(parts) == 1:
            return parts[0]
        memo = self._combine_memo
        if parts in memo:
            return memo[parts]
        result = None
        rest = parts[1:]
        # every two-block partition, with parts[0] pinned to the left block
        for mask in range(1 << len(rest)):
            left = (parts[0],) + tuple(r for i, r in enumerate(rest) if (mask >> i) & 1)
            right = tuple(r for i, r in enumerate(rest) if not (mask >> i) & 1)
            if not right:
                continue
            ra = self.combine(left)
            rb = self.combine(right)
            if ra is None or rb is None:
                continue
            r = self.pair(ra, rb)
            if r is None:
                continue
            if result is not None and result != r:
                raise GammaError(
                    f"gamma is not associative on multiset {parts}: {result} vs {r}"
                )
            result = r
        memo[parts] = result
        return result


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # "undefined" | "unguarded" | "gamma-assoc"
    where: str
    message: str

    def render(self) -> str:
        return f"{self.kind} at {self.where}: {self.message}"


class ProcessEnv:
    """Named recursive process definitions plus the communication function.

    Treated as immutable after construction; expansion passes return fresh
    environments.
    """

    def __init__(self, defs: dict[str, Term] | None = None, gamma: Gamma | None = None):
        self.defs: dict[str, Term] = dict(defs or {})
        for name in self.defs:
            if not IDENT_RE.match(name):
                raise TermError(f"invalid definition name {name!r}")
        self.gamma = gamma if gamma is not None else Gamma()

    def with_defs(self, extra: dict[str, Term]) -> "ProcessEnv":
        merged = dict(self.defs)
        merged.update(extra)
        return ProcessEnv(merged, self.gamma)

    def with_gamma(self, gamma: Gamma) -> "ProcessEnv":
        return ProcessEnv(self.defs, gamma)

    def fresh_name(self, base: str = "X") -> str:
        if base not in self.defs:
            return base
        for i in itertools.count(1):
            cand = f"{base}{i}"
            if cand not in self.defs:
                return cand


EMPTY_ENV = ProcessEnv()


# --------------------------------------------------------------------------
# Guardedness and environment validation
# --------------------------------------------------------------------------


def must_act(t: Term, env: ProcessEnv, _seen: frozenset[str] = frozenset()) -> bool:
    """True when every successful completion of t performs at least one
    action (vacuously true for processes that can never succeed).  This is a
    syntactic under-approximation used by the guardedness check."""
    m = lambda x: must_act(x, env, _seen)
    if isinstance(t, (Zero, Raised, Atom)):
        return True
    if isinstance(t, (One, Test, While, Etcetera, EtceteraOpt, OptBreak, Break)):
        return False
    if isinstance(t, Var):
        if t.name in _seen or t.name not in env.defs:
            return False
        return must_act(env.defs[t.name], env, _seen | {t.name})
    if isinstance(t, (Alt, OrPar1, OrPar2, DisambAlt)):
        return m(t.left) and m(t.right)
    if isinstance(t, (Seq, Par, AndPar, TermMerge, DisambSeq1, DisambSeq2, DisambSeqX)):
        return m(t.left) or m(t.right)
    if isinstance(t, (LeftMerge, RightMerge, CommMerge)):
        return True  # never terminate successfully on their own
    if isinstance(t, (Disrupt, MultiInterrupt, DisambDisrupt)):
        return m(t.left)
    if isinstance(t, (Interrupt, MandInterrupts)):
        return m(t.left) or m(t.right)
    if isinstance(t, DoThenElse):
        return (m(t.cond) or m(t.then)) and m(t.orelse)
    if isinstance(t, (Flow, StreamFlow)):
        return m(t.left) or m(t.right)
    if isinstance(t, ExcFlow):
        return m(t.left)
    if isinstance(t, Neg):
        return False  # conservative: -x may succeed silently when x fails
    raise TermError(f"must_act: unhandled term {type(t).__name__}")


def _unguarded_refs(t: Term, env: ProcessEnv, guarded: bool, acc: set[str]) -> None:
    """Collect Var names reachable in t on some path with no preceding atom."""
    if isinstance(t, Var):
        if not guarded:
            acc.add(t.name)
        return
    if isinstance(t, (Zero, One, Atom, Raised, Test, While,
                      Etcetera, EtceteraOpt, OptBreak, Break)):
        return
    if isinstance(t, (Seq, DisambSeq1, DisambSeq2, DisambSeqX)):
        _unguarded_refs(t.left, env, guarded, acc)
        _unguarded_refs(t.right, env, guarded or must_act(t.left, env), acc)
        return
    if isinstance(t, DoThenElse):
        _unguarded_refs(t.cond, env, guarded, acc)
        _unguarded_refs(t.then, env, guarded or must_act(t.cond, env), acc)
        _unguarded_refs(t.orelse, env, guarded, acc)
        return
    if isinstance(t, (Flow, ExcFlow)):
        _unguarded_refs(t.left, env, guarded, acc)
        _unguarded_refs(t.right, env, guarded or must_act(t.left, env), acc)
        return
    for c in term_children(t):
        _unguarded_refs(c, env, guarded, acc)


def validate_env(env: ProcessEnv) -> list[Diagnostic]:
    """Check all ProcessEnv invariants; empty result means the environment is
    well formed.  Diagnostics name the violated invariant and its location."""
    diags: list[Diagnostic] = []

    for name, body in env.defs.items():
        for ref in sorted(free_vars(body)):
            if ref not in env.defs:
                diags.append(Diagnostic(
                    "undefined", name, f"definition {name!r} refers to undefined {ref!r}"))

    # guardedness: a cycle of definition references with no guarding atom
    edges: dict[str, set[str]] = {}
    for name, body in env.defs.items():
        acc: set[str] = set()
        _unguarded_refs(body, env, False, acc)
        edges[name] = {r for r in acc if r in env.defs}

    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(n: str, stack: list[str]) -> Optional[list[str]]:
        state[n] = 0
        stack.append(n)
        for nxt in sorted(edges.get(n, ())):
            if state.get(nxt) == 0:
                return stack[stack.index(nxt):] + [nxt]
            if nxt not in state:
                cyc = visit(nxt, stack)
                if cyc:
                    return cyc
        stack.pop()
        state[n] = 1
        return None

    reported = set()
    for name in sorted(env.defs):
        if name not in state:
            cyc = visit(name, [])
            if cyc:
                key = frozenset(cyc)
                if key not in reported:
                    reported.add(key)
                    diags.append(Diagnostic(
                        "unguarded", cyc[0],
                        "unguarded recursion through " + " -> ".join(cyc)))

    # gamma associativity on all 3-multisets of declared names
    names = sorted(env.gamma.names())
    for trip in itertools.combinations_with_replacement(names, 3):
        results = {}
        orders = [
            ((trip[0], trip[1]), trip[2]),
            ((trip[0], trip[2]), trip[1]),
            ((trip[1], trip[2]), trip[0]),
        ]
        for (p, q), r in orders:
            first = env.gamma.pair(p, q)
            if first is None:
                continue
            final = env.gamma.pair(first, r)
            if final is None:
                continue
            results[f"({p}|{q})|{r}"] = final
        if len(set(results.values())) > 1:
            detail = ", ".join(f"{k} = {v}" for k, v in sorted(results.items()))
            diags.append(Diagnostic(
                "gamma-assoc", "{%s}" % ",".join(trip),
                f"associativity violation: {detail}"))

    return diags
