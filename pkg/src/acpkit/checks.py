"""Named verification suites behind `check`: sampled axiom schemas, the
interrupt-axiom inconsistency regression, and the disambiguation reductions."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .bisim import bisimilar, check_axiom_schema, trace_equivalent
from .gen import GenConfig
from .parser import parse_expr, render
from .rewrite import ALL_AXIOMS, derive_lint, disambiguate, disambiguate_step, normal_term
from .semantics import StepBudget, derive, run
from .terms import ProcessEnv

AXIOM_SUITE = (
    "A1", "A2", "A3", "A4", "A5", "0+x", "0;x", "1;x", "x;1",
    "LM1", "LM2", "LM3", "LM4",
)
MERGE_SUITE = ("M", "RM", "TM1")


@dataclass
class SuiteReport:
    suite: str
    ok: bool
    text: str
    data: dict = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return int(self.data.get("failures", 0 if self.ok else 1))


def axioms_suite(samples: int = 500, seed: int = 0, depth: int = 8) -> SuiteReport:
    cfg = GenConfig(seed=seed)
    lines = [f"axiom suite: samples={samples} seed={seed} depth={depth}"]
    reports = []
    total_failures = 0
    t0 = time.monotonic()
    for name in AXIOM_SUITE + MERGE_SUITE:
        rep = check_axiom_schema(ALL_AXIOMS[name], samples, cfg, depth=depth)
        reports.append(rep)
        total_failures += len(rep.failures)
        lines.append(rep.render())
    elapsed = time.monotonic() - t0
    ok = total_failures == 0
    lines.append(f"result: {'PASS' if ok else 'FAIL'} "
                 f"({len(reports)} schemas, {total_failures} failures, {elapsed:.1f}s)")
    return SuiteReport(
        suite="axioms", ok=ok, text="\n".join(lines),
        data={
            "samples": samples, "seed": seed, "depth": depth,
            "failures": total_failures, "elapsed": elapsed,
            "schemas": [r.to_dict() for r in reports],
        })


def lint_suite(depth: int = 8) -> SuiteReport:
    rep = derive_lint()
    env = ProcessEnv()
    budget = StepBudget(max_depth=depth)
    res = bisimilar(derive(rep.unit_route.result, env, budget),
                    derive(rep.optional_route.result, env, budget))
    ok = not res.equal
    lines = [f"interrupt axiom regression on {render(rep.start)}"]
    lines.append("lemma  " + rep.lemmas[0])
    lines.append("lemma  " + rep.lemmas[1])
    lines.append(f"route {'/'.join(rep.unit_route.axioms)}:")
    for s in rep.unit_route.trace.steps:
        lines.append("  " + s.render())
    lines.append(f"  derives {render(rep.start)} = {render(rep.unit_route.result)}")
    lines.append(f"route {'/'.join(rep.optional_route.axioms)}:")
    for s in rep.optional_route.trace.steps:
        lines.append("  " + s.render())
    lines.append(f"  derives {render(rep.start)} = {render(rep.optional_route.result)}")
    lines.append(f"bisimilar({render(rep.unit_route.result)}, "
                 f"{render(rep.optional_route.result)}): {res.render()}")
    lines.append("result: " + ("PASS (the axiom sets derive non-bisimilar values: "
                               "the combination is inconsistent)" if ok else
                               "FAIL (derivations unexpectedly bisimilar)"))
    return SuiteReport(
        suite="lint", ok=ok, text="\n".join(lines),
        data={
            "start": render(rep.start),
            "unit_route": {"axioms": list(rep.unit_route.axioms),
                           "result": render(rep.unit_route.result)},
            "optional_route": {"axioms": list(rep.optional_route.axioms),
                               "result": render(rep.optional_route.result)},
            "bisimilar": res.equal,
            "evidence": res.render(),
            "failures": 0 if ok else 1,
        })


def disambig_suite(depth: int = 6) -> SuiteReport:
    env = ProcessEnv()
    budget = StepBudget(max_depth=max(depth + 2, 8))
    checks: list[tuple[str, bool, str]] = []

    def add(name: str, ok: bool, detail: str):
        checks.append((name, ok, detail))

    # the factoring reductions, as term-level rewrites (sequences normalise
    # right-nested, hence the explicit grouping in the expected forms)
    step1 = disambiguate_step(parse_expr("(a;b + 1)|; a;d"), env)
    add("(a;b + 1)|; a;d  =  a;(b;a;d | d)",
        step1 == parse_expr("a;(b;(a;d) | d)"), render(step1))
    step2 = disambiguate_step(parse_expr("(a;b + 1)||; a;d"), env)
    add("(a;b + 1)||; a;d  =  a;(b;a;d || d)",
        step2 == parse_expr("a;(b;(a;d) || d)"), render(step2))
    step3 = disambiguate_step(parse_expr("(a;b + 1)|;| a;d"), env)
    add("(a;b + 1)|;| a;d  =  a;(b;a;d |+| d)",
        step3 == parse_expr("a;(b;(a;d) |+| d)"), render(step3))
    factored = disambiguate(parse_expr("a;b;a;c |+| a;d"), env)
    add("a b a c |+| a d  =  a;(b;a;c + d)",
        normal_term(factored, env) == normal_term(parse_expr("a;(b;a;c + d)"), env),
        render(factored))

    # the ambiguous grammars against their factored versions, as completed
    # trace equivalences
    pairs = [
        ("a;b;a;c + a;d", "a;(b;a;c + d)"),
        ("(a;b + 1);a;d", "a;(b;a;d + d)"),
        ("a;b / a;c", "a;(b + c + a;c)"),
    ]
    for lhs, rhs in pairs:
        la = derive(parse_expr(lhs), env, budget)
        lb = derive(parse_expr(rhs), env, budget)
        ok = trace_equivalent(la, lb, depth)
        add(f"traces({lhs}) = traces({rhs}) @ depth {depth}", ok, "")

    # replay: the raw grammar is ambiguous, the factored one deterministic
    amb = run(parse_expr("a;b;a;c + a;d"), env, ["a"])
    add("run(a b a c + a d, [a]) is ambiguous",
        amb.status == "ambiguous" and amb.count == 2, amb.render())
    det = run(disambiguate(parse_expr("a;b;a;c |+| a;d"), env), env, ["a", "d"])
    add("run(factored, [a, d]) replays to Success",
        det.status == "success", det.render())
    det2 = run(disambiguate(parse_expr("a;b;a;c |+| a;d"), env), env,
               ["a", "b", "a", "c"])
    add("run(factored, [a, b, a, c]) replays to Success",
        det2.status == "success", det2.render())

    failures = sum(1 for _, ok, _ in checks if not ok)
    lines = [f"disambiguation suite: depth={depth}"]
    for name, ok, detail in checks:
        line = f"{'PASS' if ok else 'FAIL'}  {name}"
        if detail:
            line += f"   [{detail}]"
        lines.append(line)
    lines.append(f"result: {'PASS' if failures == 0 else 'FAIL'} "
                 f"({len(checks)} checks, {failures} failures)")
    return SuiteReport(
        suite="disambig", ok=failures == 0, text="\n".join(lines),
        data={"checks": [{"name": n, "ok": ok, "detail": d} for n, ok, d in checks],
              "failures": failures})


def run_suite(suite: str, samples: int = 500, seed: int = 0,
              depth: int | None = None) -> SuiteReport:
    if suite == "axioms":
        return axioms_suite(samples=samples, seed=seed, depth=depth or 8)
    if suite == "lint":
        return lint_suite(depth=depth or 8)
    if suite == "disambig":
        return disambig_suite(depth=depth or 6)
    raise ValueError(f"unknown suite {suite!r} (axioms, lint, disambig)")
