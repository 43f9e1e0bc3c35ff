"""HTTP service wrapping the process-algebra kernel.

Every endpoint is stateless: source text, communication tables and predicate
bindings travel in the request body, so one instance serves any number of
clients.  Kernel errors map onto HTTP 400 with a structured kind the CLI
translates into exit codes.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..checks import run_suite
from ..bisim import bisimilar, trace_equivalent
from ..parser import ParseError, parse, parse_gamma_table, render
from ..rewrite import (
    FuelExhausted, RewriteError, expand_iteration, normalize,
)
from ..semantics import (
    Lts, SemanticsError, StepBudget, derive, encapsulate, run,
)
from ..terms import GammaError, ProcessEnv, Term, TermError, validate_env
from .schemas import (
    CheckRequest, CheckResponse, Definition, EquivRequest, EquivResponse,
    ErrorInfo, ExpandRequest, ExpandResponse, LtsRequest, LtsResponse,
    NormalizeRequest, NormalizeResponse, ParseRequest, ParseResponse,
    RunRequest, RunResponse,
)


def _fail(kind: str, message: str, line=None, col=None):
    info = ErrorInfo(kind=kind, message=message, line=line, col=col)
    raise HTTPException(status_code=400, detail=info.model_dump())


def _guard(fn):
    try:
        return fn()
    except ParseError as e:
        _fail("parse", e.message, e.line, e.col)
    except FuelExhausted as e:
        _fail("fuel", str(e))
    except (RewriteError, SemanticsError, TermError, GammaError) as e:
        _fail("semantic", str(e))


def _load(text: str, gamma_text: str, need_main: bool = True):
    gamma = parse_gamma_table(gamma_text) if gamma_text.strip() else None
    spec = parse(text, gamma)
    diags = validate_env(spec.env)
    if diags:
        raise TermError("; ".join(d.render() for d in diags))
    if need_main and spec.main is None:
        raise TermError("no `main` definition in source")
    return spec


def _expanded(spec) -> tuple[Term, ProcessEnv]:
    term, env = expand_iteration(spec.main, spec.env)
    diags = validate_env(env)
    if diags:
        raise TermError("after expansion: " + "; ".join(d.render() for d in diags))
    return term, env


def create_app() -> FastAPI:
    app = FastAPI(
        title="acpkit",
        description="Process-algebra kernel: parse, rewrite, derive, verify.",
        version=__version__,
    )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/parse", response_model=ParseResponse)
    def do_parse(req: ParseRequest):
        def work():
            gamma = parse_gamma_table(req.gamma) if req.gamma.strip() else None
            spec = parse(req.text, gamma)
            diags = validate_env(spec.env)
            return ParseResponse(
                defs=[Definition(name=n, body=render(spec.env.defs[n]))
                      for n in spec.order],
                main=render(spec.main) if spec.main is not None else None,
                diagnostics=[d.render() for d in diags],
            )
        return _guard(work)

    @app.post("/v1/normalize", response_model=NormalizeResponse)
    def do_normalize(req: NormalizeRequest):
        def work():
            spec = _load(req.text, req.gamma)
            term, env = _expanded(spec)
            nf, trace = normalize(term, env, req.fuel)
            return NormalizeResponse(
                normal_form=nf.render(),
                shape=nf.shape,
                trace=[s.render() for s in trace.steps] if req.trace else None,
            )
        return _guard(work)

    @app.post("/v1/expand", response_model=ExpandResponse)
    def do_expand(req: ExpandRequest):
        def work():
            spec = _load(req.text, req.gamma)
            term, env = expand_iteration(spec.main, spec.env)
            fresh = [n for n in env.defs if n not in spec.env.defs]
            names = spec.order + sorted(fresh)
            return ExpandResponse(
                main=render(term),
                defs=[Definition(name=n, body=render(env.defs[n])) for n in names],
            )
        return _guard(work)

    @app.post("/v1/lts", response_model=LtsResponse)
    def do_lts(req: LtsRequest):
        def work():
            spec = _load(req.text, req.gamma)
            term, env = _expanded(spec)
            budget = StepBudget(max_depth=req.depth, max_states=req.max_states)
            lts = derive(term, env, budget, req.bindings)
            if req.hide:
                lts = encapsulate(lts, frozenset(req.hide))
            if req.format == "text":
                return LtsResponse(text=lts.to_text())
            return LtsResponse(lts=lts.to_dict())
        return _guard(work)

    @app.post("/v1/equiv", response_model=EquivResponse)
    def do_equiv(req: EquivRequest):
        def work():
            budget = StepBudget(max_depth=req.depth, max_states=req.max_states)
            sides: list[Lts] = []
            for text in (req.text_a, req.text_b):
                spec = _load(text, req.gamma)
                term, env = _expanded(spec)
                sides.append(derive(term, env, budget, req.bindings))
            la, lb = sides
            if req.mode == "trace":
                eq = trace_equivalent(la, lb, req.depth)
                bounded = bool(la.truncated) or bool(lb.truncated)
                return EquivResponse(equivalent=eq, bounded_only=bounded, mode="trace")
            res = bisimilar(la, lb)
            return EquivResponse(
                equivalent=res.equal,
                bounded_only=res.bounded_only,
                evidence=res.render() if not res.equal else None,
                mode="bisim",
            )
        return _guard(work)

    @app.post("/v1/run", response_model=RunResponse)
    def do_run(req: RunRequest):
        def work():
            spec = _load(req.text, req.gamma)
            term, env = _expanded(spec)
            r = run(term, env, req.script, req.bindings)
            return RunResponse(
                status=r.status,
                rendered=r.render(),
                value=r.value.render() if r.value is not None else None,
                exc=r.exc,
                step=r.step,
                action=r.action,
                count=r.count,
                enabled=list(r.enabled),
            )
        return _guard(work)

    @app.post("/v1/check", response_model=CheckResponse)
    def do_check(req: CheckRequest):
        def work():
            rep = run_suite(req.suite, samples=req.samples, seed=req.seed,
                            depth=req.depth)
            return CheckResponse(suite=rep.suite, ok=rep.ok,
                                 failures=rep.failures, text=rep.text,
                                 data=rep.data)
        return _guard(work)

    return app


app = create_app()
