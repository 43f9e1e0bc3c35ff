"""Structural operational semantics: bounded LTS derivation, deterministic
replay, encapsulation and dataflow plumbing.

States are process terms.  Success is a state predicate (a state may both
succeed and offer transitions, as in `1 + a`), failure means no transitions
and no success.  Communication pairs transitions whose combined action
multiset has a result under the closed communication function; incomplete
multisets ride along as unlabeled "pending" transitions so that n-party
synchronisation works under every bracketing, and are dropped from the
observable LTS.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .terms import (
    ActionLabel, Alt, AndPar, Atom, Binder, Break, CommMerge, Diagnostic,
    DisambAlt, DisambDisrupt, DisambSeq1, DisambSeq2, DisambSeqX, Disrupt,
    DoThenElse, Etcetera, EtceteraOpt, ExcFlow, Flow, Interrupt, LeftMerge,
    MandInterrupts, MultiInterrupt, Neg, One, OptBreak, Outcome, OrPar1,
    OrPar2, Par, Pred, ProcessEnv, Raised, RightMerge, Seq, StreamFlow, Term,
    TermMerge, Test, UnexpandedIterationOperand, UnresolvedPredicateError,
    UnresolvedVarError, Value, Var, While, Zero,
    free_vars, term_children, rebuild, walk, ITERATION_OPERANDS,
)


class SemanticsError(Exception):
    pass


class UnguardedRecursionError(SemanticsError):
    pass


class FlowTypeMismatch(SemanticsError):
    def __init__(self, expected: str, actual: str):
        super().__init__(f"flow type mismatch: expected {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class FlowMissingValue(SemanticsError):
    def __init__(self, binder: Binder):
        super().__init__(f"success carries no value for binder {binder.render()}")
        self.binder = binder


class BudgetExceeded(SemanticsError):
    pass


@dataclass(frozen=True)
class StepBudget:
    max_depth: int = 8
    max_states: int = 4000

    def __post_init__(self):
        if self.max_depth < 1 or self.max_states < 1:
            raise ValueError("budget bounds must be >= 1")


# Internal runtime-only states -------------------------------------------------


@dataclass(frozen=True)
class _IntActive(Term):
    """Single interrupt in progress: suspended left process, running right."""

    susp: Term
    cur: Term


@dataclass(frozen=True)
class _MultiActive(Term):
    """One of the sequential interrupts in progress; rearms on completion."""

    susp: Term
    cur: Term
    arm: Term


@dataclass(frozen=True)
class _EachActive(Term):
    """Post-success interrupt in progress (mandatory-interrupts / stream
    flow).  Carries the suspended process, the running handler, the re-arm
    template, the optional binder and the payload the left side succeeded
    with."""

    susp: Term
    cur: Term
    arm: Term
    binder: Optional[Binder]
    payload: Optional[Value]


@dataclass(frozen=True)
class Transition:
    label: Optional[str]  # None = pending (incomplete synchronisation)
    parts: tuple[str, ...]
    target: Term


def _payload_key(v: Optional[Value]) -> str:
    return "" if v is None else v.render()


def _skey(t: Term) -> str:
    return repr(t)


# Simplifying residual constructors: keep the state space small without
# changing observable behaviour.

def _sseq(x: Term, y: Term) -> Term:
    if isinstance(x, Raised):
        return x
    if isinstance(x, One):
        return y  # sequence yields the last component's value anyway
    if isinstance(x, Zero):
        return x
    return Seq(x, y)


def _spar(cls, x: Term, y: Term) -> Term:
    if cls in (Par, AndPar):
        if isinstance(x, One) and x.value is None:
            return y
        if isinstance(y, One) and y.value is None:
            return x
    return cls(x, y)


def _sdisrupt(x: Term, y: Term) -> Term:
    if isinstance(x, (One, Zero, Raised)):
        return x
    return Disrupt(x, y)


def _bind(t: Term, name: str, value: Value) -> Term:
    """Substitute a flow binding into predicate positions, respecting
    shadowing by inner binders of the same name."""
    if isinstance(t, (Test, While)):
        p = t.pred
        if p.name == name:
            if value.tag != "Bool":
                raise FlowTypeMismatch("Bool", value.tag)
            c = bool(value.val) != p.negated
            return type(t)(Pred(const=c))
        return t
    if isinstance(t, (Flow, ExcFlow, StreamFlow)) and t.binder.name == name:
        return rebuild(t, (_bind(t.left, name, value), t.right))
    kids = term_children(t)
    if not kids:
        return t
    new = tuple(_bind(c, name, value) for c in kids)
    if new == kids:
        return t
    return rebuild(t, new)


def _checked_bind(y: Term, binder: Binder, v: Optional[Value]) -> Term:
    if v is None:
        raise FlowMissingValue(binder)
    if v.tag != binder.tag:
        raise FlowTypeMismatch(binder.tag, v.tag)
    return _bind(y, binder.name, v)


def exception_of(t: Term) -> Optional[str]:
    """Exception name carried by a failed state: first raised residue in
    pre-order."""
    for node in walk(t):
        if isinstance(node, Raised):
            return node.exc
    return None


def flow_value(outcome: Outcome, binder: Binder, *, exceptional: bool = False):
    """Binding produced by handing a terminal outcome to a dataflow binder.

    Success values route through value arrows; failures route only through
    the exception arrow, as a Str binding of the exception name.
    """
    if exceptional:
        if outcome.kind != "Failure" or outcome.exc is None:
            raise FlowMissingValue(binder)
        if binder.tag != "Str":
            raise FlowTypeMismatch("Str", binder.tag)
        return binder.name, Value("Str", outcome.exc)
    if outcome.kind != "Success":
        raise FlowMissingValue(binder)
    if outcome.value is None:
        raise FlowMissingValue(binder)
    if outcome.value.tag != binder.tag:
        raise FlowTypeMismatch(binder.tag, outcome.value.tag)
    return binder.name, outcome.value


def _pick(a: Optional[Value], b: Optional[Value]) -> Optional[Value]:
    return a if a is not None else b


class Engine:
    """Evaluator for the transition relation and the success predicate."""

    def __init__(self, env: ProcessEnv, bindings: Optional[dict[str, bool]] = None,
                 disamb_depth: int = 64):
        self.env = env
        self.bindings = dict(bindings or {})
        self.disamb_depth = disamb_depth
        self._succ: dict[Term, frozenset] = {}
        self._trans: dict[Term, frozenset] = {}
        self._succ_busy: set[Term] = set()
        self._trans_busy: set[Term] = set()
        self._disamb: dict[Term, Term] = {}

    # -- helpers ----------------------------------------------------------

    def _resolve_disamb(self, t: Term) -> Term:
        if t not in self._disamb:
            from .rewrite import disambiguate
            self._disamb[t] = disambiguate(t, self.env, self.disamb_depth)
        return self._disamb[t]

    def _def(self, name: str) -> Term:
        if name not in self.env.defs:
            raise UnresolvedVarError({name})
        return self.env.defs[name]

    def failed(self, t: Term) -> bool:
        return not self.trans(t) and not self.succs(t)

    # -- success predicate --------------------------------------------------

    def succs(self, t: Term) -> frozenset:
        """Set of payloads t can immediately terminate successfully with
        (None stands for a value-less success); empty set = cannot succeed."""
        if t in self._succ:
            return self._succ[t]
        if t in self._succ_busy:
            raise UnguardedRecursionError(
                f"success predicate does not stabilise on {type(t).__name__}")
        self._succ_busy.add(t)
        try:
            out = self._succs(t)
        finally:
            self._succ_busy.discard(t)
        self._succ[t] = out
        return out

    def _succs(self, t: Term) -> frozenset:
        s = self.succs
        if isinstance(t, (Zero, Atom, Raised, LeftMerge, RightMerge, CommMerge)):
            return frozenset()
        if isinstance(t, One):
            return frozenset([t.value])
        if isinstance(t, Test):
            return frozenset([None]) if t.pred.eval(self.bindings) else frozenset()
        if isinstance(t, Var):
            return s(self._def(t.name))
        if isinstance(t, Alt):
            return s(t.left) | s(t.right)
        if isinstance(t, Seq):
            return s(t.right) if s(t.left) else frozenset()
        if isinstance(t, (Par, AndPar, TermMerge)):
            a, b = s(t.left), s(t.right)
            if not a or not b:
                return frozenset()
            return frozenset(_pick(x, y) for x in a for y in b)
        if isinstance(t, (OrPar1, OrPar2)):
            return s(t.left) | s(t.right)
        if isinstance(t, Disrupt):
            return s(t.left)
        if isinstance(t, Interrupt):
            return s(t.left) if s(t.right) else frozenset()
        if isinstance(t, _IntActive):
            return s(t.susp) if s(t.cur) else frozenset()
        if isinstance(t, MultiInterrupt):
            return s(t.left)
        if isinstance(t, _MultiActive):
            return s(t.susp) if s(t.cur) else frozenset()
        if isinstance(t, MandInterrupts):
            if s(t.left) and s(t.right) and not self.trans(t.left):
                return s(t.left)
            return frozenset()
        if isinstance(t, StreamFlow):
            out = set()
            if not self.trans(t.left):
                for v in s(t.left):
                    if s(_checked_bind(t.right, t.binder, v)):
                        out.add(v)
            return frozenset(out)
        if isinstance(t, _EachActive):
            if s(t.cur) and not self.trans(t.susp):
                return frozenset([t.payload])
            return frozenset()
        if isinstance(t, DoThenElse):
            out = frozenset()
            if s(t.cond):
                out |= s(t.then)
            if self.failed(t.cond):
                out |= s(t.orelse)
            return out
        if isinstance(t, Neg):
            return frozenset([None]) if self.failed(t.body) else frozenset()
        if isinstance(t, Flow):
            out = frozenset()
            for v in s(t.left):
                out |= s(_checked_bind(t.right, t.binder, v))
            return out
        if isinstance(t, ExcFlow):
            out = s(t.left)
            if self.failed(t.left):
                exc = exception_of(t.left)
                if exc is not None:
                    out |= s(_checked_bind(t.right, t.binder, Value("Str", exc)))
            return out
        if isinstance(t, (DisambAlt, DisambSeq1, DisambSeq2, DisambSeqX, DisambDisrupt)):
            return s(self._resolve_disamb(t))
        if isinstance(t, ITERATION_OPERANDS):
            raise UnexpandedIterationOperand(
                f"iteration operand {type(t).__name__} must be expanded before "
                "semantic use")
        raise SemanticsError(f"succs: unhandled term {type(t).__name__}")

    # -- transition relation ------------------------------------------------

    def trans(self, t: Term) -> frozenset:
        if t in self._trans:
            return self._trans[t]
        if t in self._trans_busy:
            raise UnguardedRecursionError(
                f"transition relation does not stabilise on {type(t).__name__} "
                "(unguarded recursion)")
        self._trans_busy.add(t)
        try:
            out = self._trans_of(t)
        finally:
            self._trans_busy.discard(t)
        self._trans[t] = out
        return out

    def _par_steps(self, x: Term, y: Term, mk) -> set:
        out = set()
        tx, ty = self.trans(x), self.trans(y)
        for a in tx:
            out.add(Transition(a.label, a.parts, mk(a.target, y)))
        for b in ty:
            out.add(Transition(b.label, b.parts, mk(x, b.target)))
        gamma = self.env.gamma
        if gamma:
            for a in tx:
                for b in ty:
                    parts = tuple(sorted(a.parts + b.parts))
                    out.add(Transition(gamma.combine(parts), parts,
                                       mk(a.target, b.target)))
        return out

    def _trans_of(self, t: Term) -> frozenset:
        tr = self.trans
        if isinstance(t, (Zero, One, Raised, Test, TermMerge)):
            return frozenset()
        if isinstance(t, Atom):
            lab = t.label
            residual = Raised(lab.raises) if lab.raises else One(lab.value)
            return frozenset([Transition(lab.name, (lab.name,), residual)])
        if isinstance(t, Var):
            return tr(self._def(t.name))
        if isinstance(t, Alt):
            return tr(t.left) | tr(t.right)
        if isinstance(t, Seq):
            out = {Transition(s.label, s.parts, _sseq(s.target, t.right))
                   for s in tr(t.left)}
            if self.succs(t.left):
                out |= tr(t.right)
            return frozenset(out)
        if isinstance(t, Par):
            return frozenset(self._par_steps(t.left, t.right,
                                             lambda a, b: _spar(Par, a, b)))
        if isinstance(t, AndPar):
            if self.failed(t.left) or self.failed(t.right):
                return frozenset()  # one side failed: composite is terminal failure
            return frozenset(self._par_steps(t.left, t.right,
                                             lambda a, b: _spar(AndPar, a, b)))
        if isinstance(t, OrPar1):
            return frozenset(self._par_steps(t.left, t.right,
                                             lambda a, b: OrPar1(a, b)))
        if isinstance(t, OrPar2):
            if self.succs(t.left) or self.succs(t.right):
                return frozenset()  # winner's success discards the other side
            return frozenset(self._par_steps(t.left, t.right,
                                             lambda a, b: OrPar2(a, b)))
        if isinstance(t, LeftMerge):
            return frozenset(Transition(s.label, s.parts, _spar(Par, s.target, t.right))
                             for s in tr(t.left))
        if isinstance(t, RightMerge):
            return frozenset(Transition(s.label, s.parts, _spar(Par, s.target, t.left))
                             for s in tr(t.right))
        if isinstance(t, CommMerge):
            gamma = self.env.gamma
            out = set()
            for a in tr(t.left):
                for b in tr(t.right):
                    parts = tuple(sorted(a.parts + b.parts))
                    name = gamma.combine(parts) if gamma else None
                    out.add(Transition(name, parts, _spar(Par, a.target, b.target)))
            return frozenset(out)
        if isinstance(t, Disrupt):
            own = tr(t.left)
            out = {Transition(s.label, s.parts, _sdisrupt(s.target, t.right))
                   for s in own}
            if own:  # right side may take over only while the left is not done
                out |= tr(t.right)
            return frozenset(out)
        if isinstance(t, Interrupt):
            out = {Transition(s.label, s.parts, Interrupt(s.target, t.right))
                   for s in tr(t.left)}
            out |= {Transition(s.label, s.parts, _IntActive(t.left, s.target))
                    for s in tr(t.right)}
            return frozenset(out)
        if isinstance(t, _IntActive):
            out = {Transition(s.label, s.parts, _IntActive(t.susp, s.target))
                   for s in tr(t.cur)}
            if self.succs(t.cur):  # interrupt completed: resume, obligation met
                out |= tr(t.susp)
            return frozenset(out)
        if isinstance(t, MultiInterrupt):
            out = {Transition(s.label, s.parts, MultiInterrupt(s.target, t.right))
                   for s in tr(t.left)}
            out |= {Transition(s.label, s.parts, _MultiActive(t.left, s.target, t.right))
                    for s in tr(t.right)}
            return frozenset(out)
        if isinstance(t, _MultiActive):
            out = {Transition(s.label, s.parts, _MultiActive(t.susp, s.target, t.arm))
                   for s in tr(t.cur)}
            if self.succs(t.cur):
                rearmed = MultiInterrupt(t.susp, t.arm)
                out |= tr(rearmed)
            return frozenset(out)
        if isinstance(t, MandInterrupts):
            out = {Transition(s.label, s.parts, MandInterrupts(s.target, t.right))
                   for s in tr(t.left)}
            if self.succs(t.left):
                for v in self.succs(t.left):
                    for s in tr(t.right):
                        out.add(Transition(
                            s.label, s.parts,
                            _EachActive(t.left, s.target, t.right, None, v)))
            return frozenset(out)
        if isinstance(t, StreamFlow):
            out = {Transition(s.label, s.parts, StreamFlow(s.target, t.binder, t.right))
                   for s in tr(t.left)}
            for v in self.succs(t.left):
                bound = _checked_bind(t.right, t.binder, v)
                for s in tr(bound):
                    out.add(Transition(
                        s.label, s.parts,
                        _EachActive(t.left, s.target, t.right, t.binder, v)))
            return frozenset(out)
        if isinstance(t, _EachActive):
            out = {Transition(s.label, s.parts,
                              _EachActive(t.susp, s.target, t.arm, t.binder, t.payload))
                   for s in tr(t.cur)}
            if self.succs(t.cur):
                # handler done: the left side resumes with its next action,
                # rearmed for future success points (the success point just
                # served does not retrigger the handler)
                for s in tr(t.susp):
                    if t.binder is None:
                        nxt = MandInterrupts(s.target, t.arm)
                    else:
                        nxt = StreamFlow(s.target, t.binder, t.arm)
                    out.add(Transition(s.label, s.parts, nxt))
            return frozenset(out)
        if isinstance(t, DoThenElse):
            out = {Transition(s.label, s.parts,
                              DoThenElse(s.target, t.then, t.orelse))
                   for s in tr(t.cond)}
            if self.succs(t.cond):
                out |= tr(t.then)
            if self.failed(t.cond):
                out |= tr(t.orelse)
            return frozenset(out)
        if isinstance(t, Neg):
            return frozenset(Transition(s.label, s.parts,
                                        DoThenElse(s.target, Zero(), One()))
                             for s in tr(t.body))
        if isinstance(t, Flow):
            out = {Transition(s.label, s.parts, Flow(s.target, t.binder, t.right))
                   for s in tr(t.left)}
            for v in self.succs(t.left):
                out |= tr(_checked_bind(t.right, t.binder, v))
            return frozenset(out)
        if isinstance(t, ExcFlow):
            out = {Transition(s.label, s.parts, ExcFlow(s.target, t.binder, t.right))
                   for s in tr(t.left)}
            if self.failed(t.left):
                exc = exception_of(t.left)
                if exc is not None:
                    out |= tr(_checked_bind(t.right, t.binder, Value("Str", exc)))
            return frozenset(out)
        if isinstance(t, (DisambAlt, DisambSeq1, DisambSeq2, DisambSeqX, DisambDisrupt)):
            return tr(self._resolve_disamb(t))
        if isinstance(t, ITERATION_OPERANDS):
            raise UnexpandedIterationOperand(
                f"iteration operand {type(t).__name__} must be expanded before "
                "semantic use")
        raise SemanticsError(f"trans: unhandled term {type(t).__name__}")

    def material(self, t: Term) -> list[Transition]:
        """Observable transitions, deterministically ordered."""
        steps = [s for s in self.trans(t) if s.label is not None]
        steps.sort(key=lambda s: (s.label, _skey(s.target)))
        return steps


# --------------------------------------------------------------------------
# LTS derivation
# --------------------------------------------------------------------------


@dataclass
class Lts:
    initial: int
    n_states: int
    transitions: tuple[tuple[int, str, int], ...]
    outcomes: dict[int, Outcome]
    success_payloads: dict[int, frozenset]
    truncated: frozenset[int]
    state_terms: tuple[Term, ...] = ()

    @property
    def states(self) -> range:
        return range(self.n_states)

    def out_edges(self) -> dict[int, list[tuple[str, int]]]:
        adj: dict[int, list[tuple[str, int]]] = {s: [] for s in self.states}
        for f, a, to in self.transitions:
            adj[f].append((a, to))
        return adj

    def to_text(self) -> str:
        lines = [f"initial {self.initial} states {self.n_states}"]
        for f, a, to in self.transitions:
            lines.append(f"{f} {a} {to}")
        for s in sorted(set(self.outcomes) | set(self.success_payloads)):
            if s in self.success_payloads:
                for v in sorted(self.success_payloads[s], key=_payload_key):
                    lines.append(f"outcome {s} " + Outcome("Success", value=v).render())
            else:
                lines.append(f"outcome {s} {self.outcomes[s].render()}")
        for s in sorted(self.truncated):
            lines.append(f"truncated {s}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        outcomes = {}
        for s in sorted(set(self.outcomes) | set(self.success_payloads)):
            if s in self.success_payloads:
                outcomes[str(s)] = [
                    Outcome("Success", value=v).render()
                    for v in sorted(self.success_payloads[s], key=_payload_key)
                ]
            else:
                outcomes[str(s)] = [self.outcomes[s].render()]
        return {
            "initial": self.initial,
            "states": self.n_states,
            "transitions": [[f, a, to] for f, a, to in self.transitions],
            "outcomes": outcomes,
            "truncated": sorted(self.truncated),
        }


def _check_closed_expanded(t: Term, env: ProcessEnv):
    missing = free_vars(t) - set(env.defs)
    if missing:
        raise UnresolvedVarError(missing)
    for name, body in env.defs.items():
        miss = free_vars(body) - set(env.defs)
        if miss:
            raise UnresolvedVarError(miss)


def derive(t: Term, env: ProcessEnv, budget: StepBudget = StepBudget(),
           bindings: Optional[dict[str, bool]] = None) -> Lts:
    """Breadth-first bounded LTS of t.  States beyond the depth or state
    budget are flagged truncated; numbering follows discovery order so the
    result is deterministic."""
    _check_closed_expanded(t, env)
    eng = Engine(env, bindings)
    ids: dict[Term, int] = {t: 0}
    terms: list[Term] = [t]
    depth_of = [0]
    transitions: list[tuple[int, str, int]] = []
    truncated: set[int] = set()
    outcomes: dict[int, Outcome] = {}
    payloads: dict[int, frozenset] = {}
    i = 0
    capped = False
    while i < len(terms):
        cur = terms[i]
        d = depth_of[i]
        steps = eng.material(cur)
        succ = eng.succs(cur)
        if succ:
            payloads[i] = succ
            canon = min(succ, key=_payload_key) if len(succ) > 1 else next(iter(succ))
            outcomes[i] = Outcome("Success", value=canon)
        elif not steps:
            outcomes[i] = Outcome("Failure", exc=exception_of(cur))
        if steps and (d >= budget.max_depth or capped):
            truncated.add(i)
            i += 1
            continue
        for s in steps:
            tgt = s.target
            if tgt not in ids:
                ids[tgt] = len(terms)
                terms.append(tgt)
                depth_of.append(d + 1)
                if len(terms) >= budget.max_states:
                    capped = True
            transitions.append((i, s.label, ids[tgt]))
        i += 1
    transitions.sort()
    return Lts(
        initial=0,
        n_states=len(terms),
        transitions=tuple(transitions),
        outcomes=outcomes,
        success_payloads=payloads,
        truncated=frozenset(truncated),
        state_terms=tuple(terms),
    )


def encapsulate(lts: Lts, hidden: frozenset[str] | set[str]) -> Lts:
    """Remove transitions labeled by hidden action names and prune states
    that become unreachable."""
    hidden = frozenset(hidden)
    kept = [(f, a, to) for f, a, to in lts.transitions if a not in hidden]
    adj: dict[int, list[tuple[str, int]]] = {}
    for f, a, to in kept:
        adj.setdefault(f, []).append((a, to))
    reach = {lts.initial}
    stack = [lts.initial]
    while stack:
        s = stack.pop()
        for _, to in adj.get(s, ()):
            if to not in reach:
                reach.add(to)
                stack.append(to)
    remap = {old: new for new, old in enumerate(sorted(reach))}
    transitions = tuple(sorted((remap[f], a, remap[to])
                               for f, a, to in kept if f in reach and to in reach))
    # outcomes describe the underlying states; a state stranded by hiding has
    # no outcome entry, which reads as deadlock
    outcomes = {}
    payloads = {}
    for old, new in remap.items():
        if old in lts.success_payloads:
            payloads[new] = lts.success_payloads[old]
        if old in lts.outcomes:
            outcomes[new] = lts.outcomes[old]
    truncated = frozenset(remap[s] for s in lts.truncated if s in reach)
    state_terms = tuple(lts.state_terms[old] for old in sorted(reach)) \
        if lts.state_terms else ()
    return Lts(
        initial=remap[lts.initial],
        n_states=len(reach),
        transitions=transitions,
        outcomes=outcomes,
        success_payloads=payloads,
        truncated=truncated,
        state_terms=state_terms,
    )


# --------------------------------------------------------------------------
# Deterministic replay
# --------------------------------------------------------------------------


@dataclass
class RunResult:
    status: str  # success | failure | pending | ambiguous | no-such-transition
    value: Optional[Value] = None
    exc: Optional[str] = None
    step: Optional[int] = None
    action: Optional[str] = None
    count: int = 0
    enabled: tuple[str, ...] = ()

    def render(self) -> str:
        if self.status == "success":
            return Outcome("Success", value=self.value).render()
        if self.status == "failure":
            return Outcome("Failure", exc=self.exc).render()
        if self.status == "pending":
            return "Pending"
        if self.status == "ambiguous":
            return (f"AmbiguousTransition({self.action}, {self.count}) "
                    f"at step {self.step}")
        return f"NoSuchTransition({self.action}) at step {self.step}"


def _state_result(eng: Engine, t: Term) -> RunResult:
    succ = eng.succs(t)
    steps = eng.material(t)
    enabled = tuple(sorted({s.label for s in steps}))
    if succ:
        canon = min(succ, key=_payload_key)
        return RunResult("success", value=canon, enabled=enabled)
    if not steps:
        return RunResult("failure", exc=exception_of(t), enabled=())
    return RunResult("pending", enabled=enabled)


def run(t: Term, env: ProcessEnv, script: Iterable[str],
        bindings: Optional[dict[str, bool]] = None) -> RunResult:
    """Follow the unique transition matching each scripted action; report
    ambiguity (the term needs disambiguation) or a missing transition with
    the step index; otherwise the final state's outcome or Pending."""
    _check_closed_expanded(t, env)
    eng = Engine(env, bindings)
    cur = t
    for idx, act in enumerate(script):
        matching = [s for s in eng.material(cur) if s.label == act]
        if not matching:
            return RunResult("no-such-transition", step=idx, action=act,
                             enabled=tuple(sorted({s.label for s in eng.material(cur)})))
        if len(matching) > 1:
            return RunResult("ambiguous", step=idx, action=act, count=len(matching))
        cur = matching[0].target
    return _state_result(eng, cur)


def enabled_actions(t: Term, env: ProcessEnv, script: Iterable[str],
                    bindings: Optional[dict[str, bool]] = None) -> RunResult:
    """Replay a prefix and report the state (used by interactive mode)."""
    return run(t, env, script, bindings)


# --------------------------------------------------------------------------
# Completed traces
# --------------------------------------------------------------------------


def completed_traces(t: Term, env: ProcessEnv, depth: int,
                     bindings: Optional[dict[str, bool]] = None) -> frozenset:
    """Completed traces of t up to the given action count.  Each trace is
    (actions, tag) with tag ("success", payload) / ("failure", exc) /
    ("deadlock",)."""
    _check_closed_expanded(t, env)
    eng = Engine(env, bindings)
    out: set = set()

    def go(cur: Term, prefix: tuple[str, ...]):
        for v in eng.succs(cur):
            out.add((prefix, ("success", v)))
        steps = eng.material(cur)
        if not steps and not eng.succs(cur):
            exc = exception_of(cur)
            out.add((prefix, ("failure", exc) if exc else ("deadlock",)))
        if len(prefix) >= depth:
            return
        for s in steps:
            go(s.target, prefix + (s.label,))

    go(t, ())
    return frozenset(out)


def lts_completed_traces(lts: Lts, depth: int) -> frozenset:
    """Completed traces read off a derived LTS (truncated states contribute
    nothing)."""
    adj = lts.out_edges()
    out: set = set()

    def go(s: int, prefix: tuple[str, ...]):
        if s in lts.success_payloads:
            for v in lts.success_payloads[s]:
                out.add((prefix, ("success", v)))
        elif s in lts.outcomes and s not in lts.truncated:
            o = lts.outcomes[s]
            out.add((prefix, ("failure", o.exc) if o.exc else ("deadlock",)))
        if len(prefix) >= depth:
            return
        for a, to in adj[s]:
            go(to, prefix + (a,))

    go(lts.initial, ())
    return frozenset(out)
