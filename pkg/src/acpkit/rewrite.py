"""Axiom-directed term rewriting.

Closed expressions over choice, sequence and the merge auxiliaries reduce to
one of four head-normal shapes: a choice of normal forms, an action prefix
`a;x`, `1`, or `0` (a bare atom stands for `a;1`).  Choice summands are kept
in a canonical order (lexicographic on rendered text) so commutativity and
associativity of `+` need no unoriented rewriting.

Sequence tails are normalised too, except that definition references are
never unfolded inside a tail: the tail of a prefix normal form may therefore
be an arbitrary term, which is what keeps normalisation of guarded recursive
processes finite.

Operators without rewrite rules (the and/or parallels, interrupts and
dataflow arrows) are left opaque inside tails and rejected at the head.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

from .parser import parse_expr, render
from .terms import (
    ActionLabel, Alt, AndPar, Atom, Break, CommMerge, DisambAlt,
    DisambDisrupt, DisambSeq1, DisambSeq2, DisambSeqX, Disrupt, DoThenElse,
    Etcetera, EtceteraOpt, ExcFlow, Flow, Interrupt, LeftMerge,
    MandInterrupts, MultiInterrupt, Neg, One, OptBreak, OrPar1, OrPar2, Par,
    Pred, ProcessEnv, Raised, RightMerge, Seq, StreamFlow, Term, TermMerge,
    Test, UnexpandedIterationOperand, UnresolvedVarError, Value, Var, While,
    Zero, free_vars, rebuild, replace_at, subterm_at, term_children, walk,
    ITERATION_OPERANDS,
)


class RewriteError(Exception):
    pass


class FuelExhausted(RewriteError):
    pass


class NoMatchError(RewriteError):
    pass


class UnsupportedOperatorError(RewriteError):
    def __init__(self, op: str):
        super().__init__(f"no rewrite rules for operator {op} at the head of a term")
        self.op = op


class IterationUnderUnsupportedOperator(RewriteError):
    def __init__(self, op: str):
        super().__init__(
            f"iteration operands have no defined meaning under operator {op}")
        self.op = op


class DepthExceeded(RewriteError):
    pass


class UnresolvedPredicateAtRewrite(RewriteError):
    pass


# --------------------------------------------------------------------------
# Axioms: patterns, matching, single-step application
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Axiom:
    """One oriented equation.  Term variables are written as definition
    references in the patterns; action variables stand for a single atom and
    capture its label."""

    name: str
    lhs: Term
    rhs: Term
    term_vars: frozenset[str]
    action_vars: frozenset[str] = frozenset()
    oriented: bool = True

    def __post_init__(self):
        lhs_vars = {v.name for v in walk(self.lhs) if isinstance(v, Var)}
        rhs_vars = {v.name for v in walk(self.rhs) if isinstance(v, Var)}
        if not rhs_vars <= lhs_vars | self.action_vars:
            raise RewriteError(f"axiom {self.name}: rhs variables not bound by lhs")


def _match(pat: Term, sub: Term, ax: Axiom, tbind: dict, abind: dict) -> bool:
    if isinstance(pat, Var) and pat.name in ax.term_vars:
        if pat.name in tbind:
            return tbind[pat.name] == sub
        tbind[pat.name] = sub
        return True
    if isinstance(pat, Atom) and pat.label.name in ax.action_vars:
        if not isinstance(sub, Atom):
            return False
        name = pat.label.name
        if name in abind:
            return abind[name].same_atom(sub.label)
        abind[name] = sub.label
        return True
    if type(pat) is not type(sub):
        return False
    pk, sk = term_children(pat), term_children(sub)
    if len(pk) != len(sk):
        return False
    # non-term fields must agree exactly
    probe_p = rebuild(pat, [Zero()] * len(pk))
    probe_s = rebuild(sub, [Zero()] * len(sk))
    if probe_p != probe_s:
        return False
    return all(_match(p, s, ax, tbind, abind) for p, s in zip(pk, sk))


def match_axiom(ax: Axiom, sub: Term) -> Optional[tuple[dict, dict]]:
    tbind: dict = {}
    abind: dict = {}
    if _match(ax.lhs, sub, ax, tbind, abind):
        return tbind, abind
    return None


def instantiate(pat: Term, ax: Axiom, tbind: dict, abind: dict) -> Term:
    if isinstance(pat, Var) and pat.name in ax.term_vars:
        return tbind[pat.name]
    if isinstance(pat, Atom) and pat.label.name in ax.action_vars:
        return Atom(abind[pat.label.name])
    kids = term_children(pat)
    if not kids:
        return pat
    return rebuild(pat, [instantiate(c, ax, tbind, abind) for c in kids])


def apply_axiom(t: Term, ax: Axiom, pos: tuple[int, ...]) -> Term:
    """Apply one axiom left-to-right at the given position."""
    sub = subterm_at(t, pos)
    m = match_axiom(ax, sub)
    if m is None:
        raise NoMatchError(f"{ax.name} does not match at {pos or 'root'}")
    tbind, abind = m
    return replace_at(t, pos, instantiate(ax.rhs, ax, tbind, abind))


def _ax(name: str, lhs: str, rhs: str, tvars: str = "", avars: str = "",
        oriented: bool = True) -> Axiom:
    tv = frozenset(tvars.split())
    av = frozenset(avars.split())
    names = frozenset(tv)
    return Axiom(name, parse_expr(lhs, names=names), parse_expr(rhs, names=names),
                 term_vars=tv, action_vars=av, oriented=oriented)


CORE_AXIOMS: dict[str, Axiom] = {a.name: a for a in [
    _ax("A1", "x + y", "y + x", "x y", oriented=False),
    _ax("A2", "(x + y) + z", "x + (y + z)", "x y z"),
    _ax("A3", "x + x", "x", "x"),
    _ax("A4", "(x + y);z", "x;z + y;z", "x y z"),
    _ax("A5", "(x;y);z", "x;(y;z)", "x y z"),
    _ax("0+x", "0 + x", "x", "x"),
    _ax("0;x", "0;x", "0", "x"),
    _ax("1;x", "1;x", "x", "x"),
    _ax("x;1", "x;1", "x", "x"),
]}

LEFT_MERGE_AXIOMS: dict[str, Axiom] = {a.name: a for a in [
    _ax("LM1", "1 <* x", "0", "x"),
    _ax("LM2", "0 <* x", "0", "x"),
    _ax("LM3", "(x + y) <* z", "x <* z + y <* z", "x y z"),
    _ax("LM4", "a;x <* y", "a;(x & y)", "x y", "a"),
]}

MERGE_AXIOMS: dict[str, Axiom] = {a.name: a for a in [
    _ax("M", "x & y", "x o*o y + x <* y + y <* x + x |*| y", "x y"),
    _ax("RM", "x *> y", "y <* x", "x y"),
    _ax("TM1", "1 o*o 1", "1"),
]}

# Derived convenience instances (a bare atom read as a;1).
DERIVED_AXIOMS: dict[str, Axiom] = {a.name: a for a in [
    _ax("LM4a", "a <* y", "a;y", "y", "a"),
]}

# The historical interrupt axioms behind the inconsistency argument: the
# unit clauses forced by x;1 = x (LINT1/LINT2) against the optional-interrupt
# definition (INT for atoms, RINT generally).  Deriving with both subsets
# yields contradictory values for `1 %/ a`.
LINT_AXIOMS: dict[str, Axiom] = {a.name: a for a in [
    _ax("LINT1", "1 %/ y", "1", "y"),
    _ax("LINT2", "a;x %/ y", "a;(x %/ y)", "x y", "a"),
    _ax("INT", "a %/ y", "a + y;a", "y", "a"),
    _ax("RINT", "x %/ y", "x + y;x", "x y"),
]}

ALL_AXIOMS: dict[str, Axiom] = {
    **CORE_AXIOMS, **LEFT_MERGE_AXIOMS, **MERGE_AXIOMS, **DERIVED_AXIOMS,
    **LINT_AXIOMS,
}


# --------------------------------------------------------------------------
# Traces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    rule: str
    pos: tuple[int, ...]
    before: Term
    after: Term

    def render(self) -> str:
        where = ".".join(str(i) for i in self.pos) if self.pos else "root"
        return f"{self.rule} @ {where}: {render(self.before)} => {render(self.after)}"


@dataclass(frozen=True)
class RewriteTrace:
    steps: tuple[Step, ...] = ()

    def render(self) -> str:
        return "\n".join(s.render() for s in self.steps)

    def __len__(self):
        return len(self.steps)


def replay(t: Term, trace: RewriteTrace) -> Term:
    """Re-apply a trace; each step must find its recorded redex."""
    for s in trace.steps:
        cur = subterm_at(t, s.pos)
        if cur != s.before:
            raise RewriteError(
                f"trace replay mismatch at {s.pos}: {render(cur)} != {render(s.before)}")
        t = replace_at(t, s.pos, s.after)
    return t


# --------------------------------------------------------------------------
# Normal forms
# --------------------------------------------------------------------------


def _shape_of(t: Term) -> Optional[str]:
    if isinstance(t, Alt):
        l, r = _shape_of(t.left), _shape_of(t.right)
        return "choice" if l and r else None
    if isinstance(t, Seq):
        return "prefix" if isinstance(t.left, Atom) else None
    if isinstance(t, Atom):
        return "prefix"  # a stands for a;1
    if isinstance(t, One):
        return "one"
    if isinstance(t, (Zero, Raised)):
        return "zero"
    return None


@dataclass(frozen=True)
class NormalForm:
    """A term in one of the four head-normal shapes: choice, action prefix,
    1 or 0 (raised residues count as 0 with an exception marker)."""

    term: Term

    def __post_init__(self):
        if _shape_of(self.term) is None:
            raise RewriteError(
                f"not a normal form: {render(self.term)}")

    @property
    def shape(self) -> str:
        return _shape_of(self.term)

    def render(self) -> str:
        return render(self.term)


def is_normal_form(t: Term) -> bool:
    return _shape_of(t) is not None


# --------------------------------------------------------------------------
# Normalisation
# --------------------------------------------------------------------------

_UNSUPPORTED_HEADS = {
    AndPar: "&&", OrPar1: "|", OrPar2: "||",
    Interrupt: "%/", MultiInterrupt: "%/%", MandInterrupts: "%/%/",
    Flow: "~~>", ExcFlow: "~/~>", StreamFlow: "~~>>",
}

_DISAMB_RULES = {
    DisambAlt: "D-|+|", DisambSeq1: "D-|;", DisambSeq2: "D-||;",
    DisambSeqX: "D-|;|", DisambDisrupt: "D-|/|",
}


def _alt_summands(t: Term) -> list[Term]:
    if isinstance(t, Alt):
        return _alt_summands(t.left) + _alt_summands(t.right)
    return [t]


def _alt_chain(summands: list[Term]) -> Term:
    if not summands:
        return Zero()
    out = summands[-1]
    for s in reversed(summands[:-1]):
        out = Alt(s, out)
    return out


def _head_of(s: Term) -> Optional[tuple[ActionLabel, Optional[Term]]]:
    """Action head of a normal-form summand, with its continuation (None for
    a bare atom)."""
    if isinstance(s, Atom):
        return s.label, None
    if isinstance(s, Seq) and isinstance(s.left, Atom):
        return s.left.label, s.right
    return None


class _Normalizer:
    def __init__(self, env: ProcessEnv, fuel: int):
        self.env = env
        self.fuel = fuel
        self.steps: list[Step] = []

    def step(self, rule: str, pos: tuple[int, ...], before: Term, after: Term) -> Term:
        if before == after:
            return after
        if self.fuel <= 0:
            raise FuelExhausted(f"rewrite fuel exhausted at rule {rule}")
        self.fuel -= 1
        self.steps.append(Step(rule, pos, before, after))
        return after

    # -- canonical choice ---------------------------------------------------

    def _canon_alt(self, cur: Term, pos: tuple[int, ...]) -> Term:
        summands = _alt_summands(cur)
        no_zero = [s for s in summands if not isinstance(s, Zero)]
        if len(no_zero) != len(summands):
            nxt = _alt_chain(no_zero) if no_zero else Zero()
            cur = self.step("0+x", pos, cur, nxt)
            summands = no_zero
        if not summands:
            return cur
        ordered = sorted(summands, key=render)
        if ordered != summands:
            cur = self.step("A1,A2", pos, cur, _alt_chain(ordered))
            summands = ordered
        deduped = [k for k, _ in itertools.groupby(summands)]
        if deduped != summands:
            cur = self.step("A3", pos, cur, _alt_chain(deduped))
        return cur

    # -- main recursion -----------------------------------------------------

    def norm(self, t: Term, pos: tuple[int, ...], tail: bool) -> Term:
        if isinstance(t, (Zero, One, Atom, Raised)):
            return t

        if isinstance(t, Test):
            if t.pred.const is None:
                if tail:
                    return t
                raise UnresolvedPredicateAtRewrite(
                    f"predicate {t.pred.render()} cannot be decided by rewriting")
            after = One() if t.pred.eval({}) else Zero()
            return self.step("D-TEST", pos, t, after)

        if isinstance(t, Var):
            if tail:
                return t
            if t.name not in self.env.defs:
                raise UnresolvedVarError({t.name})
            body = self.step("DEF", pos, t, self.env.defs[t.name])
            return self.norm(body, pos, tail)

        if isinstance(t, Alt):
            l = self.norm(t.left, pos + (0,), tail)
            r = self.norm(t.right, pos + (1,), tail)
            return self._canon_alt(Alt(l, r), pos)

        if isinstance(t, Seq):
            return self._norm_seq(t, pos, tail)

        if isinstance(t, Par):
            after = Alt(Alt(Alt(TermMerge(t.left, t.right),
                                LeftMerge(t.left, t.right)),
                            LeftMerge(t.right, t.left)),
                        CommMerge(t.left, t.right))
            after = self.step("M", pos, t, after)
            return self.norm(after, pos, tail)

        if isinstance(t, RightMerge):
            after = self.step("RM", pos, t, LeftMerge(t.right, t.left))
            return self.norm(after, pos, tail)

        if isinstance(t, LeftMerge):
            return self._norm_left_merge(t, pos, tail)

        if isinstance(t, CommMerge):
            return self._norm_comm_merge(t, pos, tail)

        if isinstance(t, TermMerge):
            return self._norm_term_merge(t, pos, tail)

        if isinstance(t, Neg):
            after = self.step("NEG", pos, t, DoThenElse(t.body, Zero(), One()))
            return self.norm(after, pos, tail)

        if isinstance(t, DoThenElse):
            return self._norm_dte(t, pos, tail)

        if isinstance(t, Disrupt):
            return self._norm_disrupt(t, pos, tail)

        if type(t) in _DISAMB_RULES:
            after = _disamb_step(t, self.env, self.fuel)
            after = self.step(_DISAMB_RULES[type(t)], pos, t, after)
            return self.norm(after, pos, tail)

        if isinstance(t, ITERATION_OPERANDS):
            raise UnexpandedIterationOperand(
                f"{type(t).__name__} must be expanded before normalisation")

        if type(t) in _UNSUPPORTED_HEADS:
            if tail:
                return t
            raise UnsupportedOperatorError(_UNSUPPORTED_HEADS[type(t)])

        raise RewriteError(f"normalize: unhandled term {type(t).__name__}")

    def _norm_seq(self, t: Term, pos: tuple[int, ...], tail: bool) -> Term:
        hx = self.norm(t.left, pos + (0,), tail)
        cur = Seq(hx, t.right)
        if isinstance(hx, Zero):
            return self.step("0;x", pos, cur, Zero())
        if isinstance(hx, Raised):
            return self.step("D-RAISE", pos, cur, hx)
        if isinstance(hx, One):
            after = self.step("1;x", pos, cur, t.right)
            return self.norm(after, pos, tail)
        if isinstance(hx, Alt):
            after = Alt(Seq(hx.left, t.right), Seq(hx.right, t.right))
            after = self.step("A4", pos, cur, after)
            return self.norm(after, pos, tail)
        if isinstance(hx, Seq):  # head normal: left must be an atom
            after = Seq(hx.left, Seq(hx.right, t.right))
            after = self.step("A5", pos, cur, after)
            r = self.norm(after.right, pos + (1,), True)
            return self._finish_prefix(after.left, r, pos)
        if isinstance(hx, Atom):
            r = self.norm(t.right, pos + (1,), True)
            return self._finish_prefix(hx, r, pos)
        if tail:
            return Seq(hx, self.norm(t.right, pos + (1,), True))
        raise RewriteError(f"normalize: unexpected sequence head {type(hx).__name__}")

    def _finish_prefix(self, head: Atom, tail_term: Term, pos: tuple[int, ...]) -> Term:
        cur = Seq(head, tail_term)
        if isinstance(tail_term, One) and tail_term.value is None:
            return self.step("x;1", pos, cur, head)
        return cur

    def _norm_left_merge(self, t: Term, pos: tuple[int, ...], tail: bool) -> Term:
        hx = self.norm(t.left, pos + (0,), tail)
        cur = LeftMerge(hx, t.right)
        if isinstance(hx, Zero):
            return self.step("LM2", pos, cur, Zero())
        if isinstance(hx, Raised):
            return self.step("D-LM-RAISE", pos, cur, hx)
        if isinstance(hx, One):
            return self.step("LM1", pos, cur, Zero())
        if isinstance(hx, Alt):
            after = Alt(LeftMerge(hx.left, t.right), LeftMerge(hx.right, t.right))
            after = self.step("LM3", pos, cur, after)
            return self.norm(after, pos, tail)
        if isinstance(hx, Atom):
            after = self.step("LM4a", pos, cur, Seq(hx, t.right))
            return self.norm(after, pos, tail)
        if isinstance(hx, Seq):
            after = Seq(hx.left, Par(hx.right, t.right))
            after = self.step("LM4", pos, cur, after)
            return self.norm(after, pos, tail)
        if tail:
            return cur
        raise RewriteError("normalize: unexpected left-merge head")

    def _exposed(self, t: Term) -> bool:
        if isinstance(t, (Zero, One, Atom, Raised)):
            return True
        if isinstance(t, Seq):
            return isinstance(t.left, Atom)
        if isinstance(t, Alt):
            return self._exposed(t.left) and self._exposed(t.right)
        return False

    def _norm_comm_merge(self, t: Term, pos: tuple[int, ...], tail: bool) -> Term:
        hl = self.norm(t.left, pos + (0,), tail)
        hr = self.norm(t.right, pos + (1,), tail)
        cur = CommMerge(hl, hr)
        if not (self._exposed(hl) and self._exposed(hr)):
            if tail:
                return cur
            raise RewriteError("normalize: unexpected communication-merge head")
        gamma = self.env.gamma
        contribs: list[Term] = []
        for ls in _alt_summands(hl):
            lh = _head_of(ls)
            if lh is None:
                continue
            for rs in _alt_summands(hr):
                rh = _head_of(rs)
                if rh is None:
                    continue
                c = gamma.pair(lh[0].name, rh[0].name)
                if c is None:
                    continue
                head = Atom(ActionLabel(c))
                lk, rk = lh[1], rh[1]
                if lk is None and rk is None:
                    contribs.append(head)
                elif lk is None:
                    contribs.append(Seq(head, rk))
                elif rk is None:
                    contribs.append(Seq(head, lk))
                else:
                    contribs.append(Seq(head, Par(lk, rk)))
        after = self.step("D-CM", pos, cur, _alt_chain(contribs))
        return self.norm(after, pos, tail)

    def _norm_term_merge(self, t: Term, pos: tuple[int, ...], tail: bool) -> Term:
        hl = self.norm(t.left, pos + (0,), tail)
        hr = self.norm(t.right, pos + (1,), tail)
        cur = TermMerge(hl, hr)
        if isinstance(hl, Alt):
            after = Alt(TermMerge(hl.left, hr), TermMerge(hl.right, hr))
            after = self.step("D-TM-DIST", pos, cur, after)
            return self.norm(after, pos, tail)
        if isinstance(hr, Alt):
            after = Alt(TermMerge(hl, hr.left), TermMerge(hl, hr.right))
            after = self.step("D-TM-DIST", pos, cur, after)
            return self.norm(after, pos, tail)
        if isinstance(hl, One) and isinstance(hr, One):
            value = hl.value if hl.value is not None else hr.value
            return self.step("TM1", pos, cur, One(value))
        for side in (hl, hr):
            if isinstance(side, (Zero, Raised, Atom)) or (
                    isinstance(side, Seq) and isinstance(side.left, Atom)):
                return self.step("D-TM0", pos, cur, Zero())
        if tail:
            return cur
        raise RewriteError("normalize: unexpected termination-merge head")

    def _norm_dte(self, t: Term, pos: tuple[int, ...], tail: bool) -> Term:
        hx = self.norm(t.cond, pos + (0,), tail)
        cur = DoThenElse(hx, t.then, t.orelse)
        if isinstance(hx, One):
            after = self.step("D-DTE1", pos, cur, t.then)
            return self.norm(after, pos, tail)
        if isinstance(hx, (Zero, Raised)):
            after = self.step("D-DTE0", pos, cur, t.orelse)
            return self.norm(after, pos, tail)
        if self._exposed(hx):
            contribs: list[Term] = []
            for s in _alt_summands(hx):
                h = _head_of(s)
                if h is None:  # a One summand: condition may succeed here
                    contribs.append(t.then)
                    continue
                label, rest = h
                if rest is None and label.raises is None:
                    contribs.append(Seq(Atom(label), t.then))
                elif label.raises is not None:
                    # the raise is consumed by taking the else branch
                    bare = Atom(ActionLabel(label.name))
                    contribs.append(Seq(bare, t.orelse))
                else:
                    contribs.append(Seq(Atom(label),
                                        DoThenElse(rest, t.then, t.orelse)))
            after = self.step("D-DTE-ALT", pos, cur, _alt_chain(contribs))
            return self.norm(after, pos, tail)
        if tail:
            return cur
        raise RewriteError("normalize: unexpected do-then-else head")

    def _norm_disrupt(self, t: Term, pos: tuple[int, ...], tail: bool) -> Term:
        hx = self.norm(t.left, pos + (0,), tail)
        hy = self.norm(t.right, pos + (1,), tail)
        cur = Disrupt(hx, hy)
        if isinstance(hx, (Zero, One, Raised)):
            return self.step("D-DIS1", pos, cur, hx)
        if not (self._exposed(hx) and self._exposed(hy)):
            if tail:
                return cur
            raise RewriteError("normalize: unexpected disrupt head")
        x_summands = _alt_summands(hx)
        action_heads = [s for s in x_summands if _head_of(s) is not None]
        if not action_heads:  # left side cannot act: no disruption window
            return self.step("D-DIS1", pos, cur, hx)
        contribs: list[Term] = []
        for s in x_summands:
            h = _head_of(s)
            if h is None:
                contribs.append(s)  # success/deadlock summand passes through
                continue
            label, rest = h
            if label.raises is not None:
                contribs.append(Atom(label))
            elif rest is None:
                contribs.append(Atom(label))
            else:
                contribs.append(Seq(Atom(label), Disrupt(rest, hy)))
        for s in _alt_summands(hy):  # right side may take over by acting
            if _head_of(s) is not None:
                contribs.append(s)
        after = self.step("D-DIS", pos, cur, _alt_chain(contribs))
        return self.norm(after, pos, tail)


def _prescan(t: Term, env: ProcessEnv):
    for node in walk(t):
        if isinstance(node, ITERATION_OPERANDS):
            raise UnexpandedIterationOperand(
                f"{type(node).__name__} must be expanded before normalisation")
    missing = free_vars(t) - set(env.defs)
    if missing:
        raise UnresolvedVarError(missing)
    for body in env.defs.values():
        miss = free_vars(body) - set(env.defs)
        if miss:
            raise UnresolvedVarError(miss)


def normalize(t: Term, env: ProcessEnv = ProcessEnv(),
              fuel: int = 100_000) -> tuple[NormalForm, RewriteTrace]:
    """Rewrite t to head-normal form; the trace replays from t to the
    result."""
    _prescan(t, env)
    n = _Normalizer(env, fuel)
    out = n.norm(t, (), tail=False)
    return NormalForm(out), RewriteTrace(tuple(n.steps))


def normal_term(t: Term, env: ProcessEnv = ProcessEnv(), fuel: int = 100_000) -> Term:
    return normalize(t, env, fuel)[0].term


# --------------------------------------------------------------------------
# Negation elimination
# --------------------------------------------------------------------------


def eliminate_negation(t: Term) -> Term:
    """Replace every negation by its do-then-else definition."""
    kids = term_children(t)
    if kids:
        t = rebuild(t, [eliminate_negation(c) for c in kids])
    if isinstance(t, Neg):
        return DoThenElse(t.body, Zero(), One())
    return t


# --------------------------------------------------------------------------
# Iteration expansion
# --------------------------------------------------------------------------

_SPINES: dict[type, str] = {Seq: ";", Alt: "+", Par: "&", OrPar2: "||"}


def _flatten_spine(t: Term, cls) -> list[Term]:
    if isinstance(t, cls):
        return _flatten_spine(t.left, cls) + _flatten_spine(t.right, cls)
    return [t]


def _fold_left(cls, ops: list[Term]) -> Term:
    out = ops[0]
    for o in ops[1:]:
        out = cls(out, o)
    return out


_OP_NAMES: dict[type, str] = {
    Seq: ";", Alt: "+", Par: "&", AndPar: "&&", OrPar1: "|", OrPar2: "||",
    Disrupt: "/", Interrupt: "%/", MultiInterrupt: "%/%", MandInterrupts: "%/%/",
    LeftMerge: "<*", RightMerge: "*>", CommMerge: "|*|", TermMerge: "o*o",
    DisambAlt: "|+|", DisambSeq1: "|;", DisambSeq2: "||;", DisambSeqX: "|;|",
    DisambDisrupt: "|/|", DoThenElse: "do-then-else", Neg: "-",
    Flow: "~~>", ExcFlow: "~/~>", StreamFlow: "~~>>",
}


class _Expander:
    def __init__(self, env: ProcessEnv):
        self.defs = dict(env.defs)
        self.gamma = env.gamma
        self.seen: dict[Term, Term] = {}

    def fresh(self) -> str:
        if "X" not in self.defs:
            self.defs["X"] = Zero()  # reserve
            return "X"
        for i in itertools.count(1):
            cand = f"X{i}"
            if cand not in self.defs:
                self.defs[cand] = Zero()
                return cand

    def expand(self, t: Term) -> Term:
        if isinstance(t, ITERATION_OPERANDS):
            raise IterationUnderUnsupportedOperator("(no governing operator)")
        cls = type(t)
        if cls in _SPINES:
            ops = _flatten_spine(t, cls)
            if any(isinstance(o, ITERATION_OPERANDS) for o in ops):
                if t in self.seen:  # identical spine: reuse its equation
                    return self.seen[t]
                ops = [o if isinstance(o, ITERATION_OPERANDS) else self.expand(o)
                       for o in ops]
                out = (self._expand_seq(ops) if cls is Seq
                       else self._expand_assoc(cls, ops))
                self.seen[t] = out
                return out
            return rebuild(t, [self.expand(c) for c in term_children(t)])
        for c in term_children(t):
            if isinstance(c, ITERATION_OPERANDS):
                raise IterationUnderUnsupportedOperator(_OP_NAMES.get(cls, cls.__name__))
        kids = term_children(t)
        if not kids:
            return t
        return rebuild(t, [self.expand(c) for c in kids])

    def _expand_seq(self, ops: list[Term]) -> Term:
        loop = any(isinstance(o, (Etcetera, EtceteraOpt, While)) for o in ops)
        if loop:
            name = self.fresh()
            cont: Term = Var(name)
        else:
            cont = One()
        for o in reversed(ops):
            if isinstance(o, Etcetera):
                continue  # the neutral 1 is elided: 1;X = X
            if isinstance(o, (EtceteraOpt, OptBreak)):
                cont = Alt(One(), cont)
            elif isinstance(o, Break):
                cont = One()
            elif isinstance(o, While):
                cont = DoThenElse(Test(o.pred), cont, One())
            else:
                cont = o if isinstance(cont, One) and cont.value is None else Seq(o, cont)
        if loop:
            self.defs[name] = cont
            return Var(name)
        return cont

    def _expand_assoc(self, cls, ops: list[Term]) -> Term:
        neutral: Callable[[], Term] = One if cls is Par else Zero
        loop = False
        mapped: list[Term] = []
        for o in ops:
            if isinstance(o, Etcetera):
                loop = True
                mapped.append(neutral())
            elif isinstance(o, EtceteraOpt):
                loop = True
                mapped.append(One())
            elif isinstance(o, (OptBreak, Break)):
                mapped.append(One())
            elif isinstance(o, While):
                mapped.append(DoThenElse(Test(o.pred), neutral(), One()))
            else:
                mapped.append(o)
        if loop:
            name = self.fresh()
            self.defs[name] = _fold_left(cls, mapped + [Var(name)])
            return Var(name)
        return _fold_left(cls, mapped)


def expand_iteration(t: Term, env: ProcessEnv) -> tuple[Term, ProcessEnv]:
    """Replace iteration operands by recursive specifications: under an
    n-ary application of ; + & or ||, a loop marker spawns a fresh equation
    X = x1 * ... * xn * X with the marker replaced by the operator's neutral
    element; optional breaks become 1-alternatives, mandatory breaks cut the
    continuation, while(p) becomes a runtime-tested conditional break."""
    ex = _Expander(env)
    for name in list(env.defs):
        ex.defs[name] = ex.expand(env.defs[name])
    out = ex.expand(t)
    return out, ProcessEnv(ex.defs, env.gamma)


# --------------------------------------------------------------------------
# Disambiguation
# --------------------------------------------------------------------------

_DSEQ_COMBINER = {DisambSeq1: OrPar1, DisambSeq2: OrPar2, DisambSeqX: DisambAlt}


def _fold_combiner(cls, parts: list[Term]) -> Term:
    out = parts[0]
    for p in parts[1:]:
        out = cls(out, p)
    return out


def _group_heads(summands: list[Term]) -> tuple[dict, list[Term]]:
    """Group action-headed summands by their full label; other summands pass
    through untouched."""
    groups: dict[tuple, list] = {}
    passthrough: list[Term] = []
    for s in summands:
        h = _head_of(s)
        if h is None:
            passthrough.append(s)
        else:
            label, rest = h
            key = (label.name, label.value, label.raises)
            groups.setdefault(key, []).append((label, rest))
    return groups, passthrough


def _cont_term(rest: Optional[Term]) -> Term:
    return One() if rest is None else rest


def _disamb_step(t: Term, env: ProcessEnv, fuel: int = 100_000) -> Term:
    """One disambiguation reduction (no recursion into the result)."""
    cls = type(t)
    if cls is DisambAlt:
        nl = normal_term(t.left, env, fuel)
        nr = normal_term(t.right, env, fuel)
        gl, pl = _group_heads(_alt_summands(nl))
        gr, pr = _group_heads(_alt_summands(nr))
        out: list[Term] = []
        for key in sorted(gl, key=str):
            if key in gr:
                label = gl[key][0][0]
                xa = _alt_chain([_cont_term(r) for _, r in gl[key]])
                ya = _alt_chain([_cont_term(r) for _, r in gr[key]])
                out.append(Seq(Atom(label), DisambAlt(xa, ya)))
            else:
                out.extend(Seq(Atom(l), r) if r is not None else Atom(l)
                           for l, r in gl[key])
        for key in sorted(gr, key=str):
            if key not in gl:
                out.extend(Seq(Atom(l), r) if r is not None else Atom(l)
                           for l, r in gr[key])
        out.extend(pl)
        out.extend(pr)
        return _alt_chain(out)
    if cls in _DSEQ_COMBINER or cls is DisambDisrupt:
        if cls is DisambDisrupt:
            base = Disrupt(t.left, t.right)
            combiner = DisambAlt
        else:
            base = Seq(t.left, t.right)
            combiner = _DSEQ_COMBINER[cls]
        nf = normal_term(base, env, fuel)
        groups, passthrough = _group_heads(_alt_summands(nf))
        out = []
        for key in sorted(groups, key=str):
            entries = groups[key]
            label = entries[0][0]
            if len(entries) == 1:
                rest = entries[0][1]
                out.append(Seq(Atom(label), rest) if rest is not None else Atom(label))
            else:
                combined = _fold_combiner(combiner, [_cont_term(r) for _, r in entries])
                out.append(Seq(Atom(label), combined))
        out.extend(passthrough)
        return _alt_chain(out)
    raise RewriteError(f"not a disambiguation operator: {type(t).__name__}")


def disambiguate_step(t: Term, env: ProcessEnv = ProcessEnv()) -> Term:
    """Public single-step reduction: exposes the factored form before the
    inner combiners are resolved further."""
    return _disamb_step(t, env)


def disambiguate(t: Term, env: ProcessEnv = ProcessEnv(), depth: int = 64) -> Term:
    """Eliminate every disambiguating operator by head factoring."""
    budget = [depth]

    def go(term: Term) -> Term:
        kids = term_children(term)
        if kids:
            term = rebuild(term, [go(c) for c in kids])
        if type(term) in _DISAMB_RULES:
            if budget[0] <= 0:
                raise DepthExceeded("disambiguation depth exceeded")
            budget[0] -= 1
            return go(_disamb_step(term, env))
        return term

    return go(t)


# --------------------------------------------------------------------------
# The interrupt-axiom inconsistency derivation
# --------------------------------------------------------------------------


@dataclass
class LintDerivation:
    axioms: tuple[str, ...]
    trace: RewriteTrace
    result: Term


@dataclass
class LintReport:
    start: Term
    unit_route: LintDerivation       # via LINT1/LINT2
    optional_route: LintDerivation   # via INT/RINT
    lemmas: tuple[str, ...] = ()


def derive_lint() -> LintReport:
    """Mechanically derive the two contradictory values of `1 %/ a` from the
    historical interrupt axiom sets.  The caller decides non-bisimilarity."""
    start = Interrupt(One(), Atom(ActionLabel("a")))

    # Route 1: the unit clauses.
    result_a = apply_axiom(start, LINT_AXIOMS["LINT1"], ())
    steps_a = [Step("LINT1", (), start, result_a)]

    # Route 2: the optional-interrupt definition.
    after_rint = apply_axiom(start, LINT_AXIOMS["RINT"], ())
    steps_b = [Step("RINT", (), start, after_rint)]
    nf, trace = normalize(after_rint)
    steps_b.extend(trace.steps)
    result_b = nf.term

    lemmas = (
        "LINT2: " + Step("LINT2", (),
                         parse_expr("(b;c) %/ a"),
                         apply_axiom(parse_expr("(b;c) %/ a"),
                                     LINT_AXIOMS["LINT2"], ())).render(),
        "INT:   " + Step("INT", (),
                         parse_expr("b %/ a"),
                         apply_axiom(parse_expr("b %/ a"),
                                     LINT_AXIOMS["INT"], ())).render(),
    )
    return LintReport(
        start=start,
        unit_route=LintDerivation(("LINT1", "LINT2"),
                                  RewriteTrace(tuple(steps_a)), result_a),
        optional_route=LintDerivation(("INT", "RINT"),
                                      RewriteTrace(tuple(steps_b)), result_b),
        lemmas=lemmas,
    )
