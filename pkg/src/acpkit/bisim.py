"""Strong bisimilarity and completed-trace equivalence of bounded LTSs,
plus the sampled axiom-verification harness.

Bisimilarity is decided by partition refinement over the disjoint union of
the two systems.  State signatures (success payload set, failure exception,
truncation flag) seed the initial partition, so success values are
observable and truncated states only ever match truncated states.  When the
systems differ, a level-indexed product refinement reconstructs a shortest
distinguishing experiment.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Optional

from .gen import GenConfig, random_action, random_term
from .parser import render
from .rewrite import Axiom, instantiate
from .semantics import Lts, StepBudget, derive, lts_completed_traces
from .terms import ProcessEnv, Term


def _signature(lts: Lts, s: int):
    succ = lts.success_payloads.get(s)
    failed = s in lts.outcomes and lts.outcomes[s].kind == "Failure"
    exc = lts.outcomes[s].exc if failed else None
    return (
        frozenset() if succ is None else succ,
        failed,
        exc,
        s in lts.truncated,
    )


def _describe_signature(sig) -> str:
    succ, failed, exc, trunc = sig
    bits = []
    if succ:
        names = sorted("Success" if v is None else f"Success[{v.render()}]"
                       for v in succ)
        bits.append("/".join(names))
    if failed:
        bits.append(f"Failure[{exc}]" if exc else "deadlock")
    if trunc:
        bits.append("truncated")
    return ", ".join(bits) if bits else "running"


@dataclass
class BisimResult:
    equal: bool
    bounded_only: bool = False
    evidence: Optional[tuple[tuple[str, ...], str]] = None

    def __bool__(self):
        return self.equal

    def render(self) -> str:
        verdict = "bisimilar" if self.equal else "not bisimilar"
        if self.bounded_only:
            verdict += " (bounded-only: truncated states present)"
        if self.evidence is not None:
            acts, reason = self.evidence
            trail = " ".join(acts) if acts else "(initial state)"
            verdict += f"; distinguished after [{trail}]: {reason}"
        return verdict


def bisimilar(a: Lts, b: Lts) -> BisimResult:
    """Partition-refinement decision of strong bisimilarity of the initial
    states, with a minimal distinguishing action sequence on failure."""
    states = [("a", s) for s in a.states] + [("b", s) for s in b.states]
    of = {"a": a, "b": b}
    edges = {
        ("a", s): [(lbl, ("a", to)) for f, lbl, to in a.transitions if f == s]
        for s in a.states
    }
    edges.update({
        ("b", s): [(lbl, ("b", to)) for f, lbl, to in b.transitions if f == s]
        for s in b.states
    })

    block: dict = {}
    sigs = {}
    for side, s in states:
        sig = _signature(of[side], s)
        sigs[(side, s)] = sig
        block[(side, s)] = sig
    # refine until stable
    while True:
        fingerprint = {
            st: (block[st], frozenset((lbl, block[to]) for lbl, to in edges[st]))
            for st in states
        }
        renumber: dict = {}
        for st in states:
            fp = fingerprint[st]
            if fp not in renumber:
                renumber[fp] = len(renumber)
        new_block = {st: renumber[fingerprint[st]] for st in states}
        if new_block == block:
            break
        block = new_block

    equal = block[("a", a.initial)] == block[("b", b.initial)]
    bounded = bool(a.truncated) or bool(b.truncated)
    if equal:
        return BisimResult(True, bounded_only=bounded)
    return BisimResult(False, bounded_only=bounded,
                       evidence=_distinguish(a, b, sigs, edges))


def _distinguish(a: Lts, b: Lts, sigs, edges):
    """Shortest distinguishing experiment via level-synchronous product
    refinement: level k separates states distinguishable within k steps."""
    pairs = [(p, q) for p in a.states for q in b.states]
    level: dict = {}
    rel = set()
    for p, q in pairs:
        if sigs[("a", p)] == sigs[("b", q)]:
            rel.add((p, q))
        else:
            level[(p, q)] = 0
    k = 0
    while True:
        k += 1
        drop = set()
        for p, q in rel:
            pa = edges[("a", p)]
            qa = edges[("b", q)]
            ok = True
            for lbl, (_, pt) in pa:
                if not any(l2 == lbl and (pt, qt) in rel for l2, (_, qt) in qa):
                    ok = False
                    break
            if ok:
                for lbl, (_, qt) in qa:
                    if not any(l2 == lbl and (pt, qt) in rel for l2, (_, pt) in pa):
                        ok = False
                        break
            if not ok:
                drop.add((p, q))
        if not drop:
            break
        for pr in drop:
            rel.discard(pr)
            level[pr] = k

    def build(p: int, q: int) -> tuple[tuple[str, ...], str]:
        lk = level[(p, q)]
        if lk == 0:
            return (), (f"state signatures differ: "
                        f"{_describe_signature(sigs[('a', p)])} vs "
                        f"{_describe_signature(sigs[('b', q)])}")
        pa = edges[("a", p)]
        qa = edges[("b", q)]
        for lead, own, side in ((pa, "a", "first"), (qa, "b", "second")):
            for lbl, (_, t1) in sorted(lead, key=lambda e: e[0]):
                answers = [t2 for l2, (_, t2) in (qa if own == "a" else pa) if l2 == lbl]
                pair_of = (lambda x, y: (x, y)) if own == "a" else (lambda x, y: (y, x))
                if all(pair_of(t1, t2) in level and level[pair_of(t1, t2)] < lk
                       for t2 in answers):
                    if not answers:
                        return (lbl,), f"only the {side} system can do '{lbl}'"
                    best = min(answers, key=lambda t2: level[pair_of(t1, t2)])
                    acts, reason = build(*pair_of(t1, best))
                    return (lbl,) + acts, reason
        return (), "states separated by refinement"  # unreachable in practice

    return build(a.initial, b.initial)


def trace_equivalent(a: Lts, b: Lts, depth: int) -> bool:
    """Completed-trace sets up to the given depth coincide (each trace ends
    in Success, Failure or deadlock and carries that tag)."""
    return lts_completed_traces(a, depth) == lts_completed_traces(b, depth)


# --------------------------------------------------------------------------
# Sampled axiom checking
# --------------------------------------------------------------------------


@dataclass
class SchemaFailure:
    index: int
    lhs: str
    rhs: str
    evidence: str


@dataclass
class SchemaReport:
    axiom: str
    samples: int
    failures: list[SchemaFailure] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def render(self) -> str:
        head = f"{self.axiom}: {self.samples} samples, {len(self.failures)} failures"
        lines = [head]
        for f in self.failures:
            lines.append(f"  #{f.index}: {f.lhs}  vs  {f.rhs}  -- {f.evidence}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "samples": self.samples,
            "failures": [
                {"lhs": f.lhs, "rhs": f.rhs, "evidence": f.evidence}
                for f in self.failures
            ],
        }


def check_axiom_schema(ax: Axiom, samples: int, cfg: GenConfig,
                       depth: int = 8, max_states: int = 4000) -> SchemaReport:
    """Instantiate the axiom with random closed terms and assert that both
    sides derive strongly bisimilar systems."""
    rng = random.Random(cfg.seed)
    env = ProcessEnv(gamma=cfg.gamma())
    budget = StepBudget(max_depth=depth, max_states=max_states)
    report = SchemaReport(axiom=ax.name, samples=samples)
    t0 = time.monotonic()
    for i in range(samples):
        tbind = {v: random_term(rng, cfg) for v in sorted(ax.term_vars)}
        abind = {v: random_action(rng, cfg) for v in sorted(ax.action_vars)}
        lhs = instantiate(ax.lhs, ax, tbind, abind)
        rhs = instantiate(ax.rhs, ax, tbind, abind)
        res = bisimilar(derive(lhs, env, budget), derive(rhs, env, budget))
        if not res.equal:
            report.failures.append(SchemaFailure(
                index=i, lhs=render(lhs), rhs=render(rhs), evidence=res.render()))
    report.elapsed = time.monotonic() - t0
    return report
