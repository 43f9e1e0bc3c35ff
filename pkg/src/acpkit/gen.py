"""Seeded random generation of process terms for law checking and fuzzing."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .terms import (
    ActionLabel, Alt, AndPar, Atom, Binder, Break, CommMerge, DisambAlt,
    DisambDisrupt, DisambSeq1, DisambSeq2, DisambSeqX, Disrupt, DoThenElse,
    Etcetera, EtceteraOpt, ExcFlow, Flow, Gamma, Interrupt, LeftMerge,
    MandInterrupts, MultiInterrupt, Neg, One, OptBreak, OrPar1, OrPar2, Par,
    Pred, Raised, RightMerge, Seq, StreamFlow, Term, TermMerge, Test, Value,
    Var, While, Zero,
)

_LEAVES = ("zero", "one", "atom")

_NODE_BUILDERS = {
    "alt": Alt, "seq": Seq, "par": Par,
    "leftmerge": LeftMerge, "rightmerge": RightMerge,
    "commmerge": CommMerge, "termmerge": TermMerge,
}


@dataclass(frozen=True)
class GenConfig:
    """What the generator may build: constructor names, action alphabet,
    nesting depth and the communication table used when deriving."""

    constructors: tuple[str, ...] = (
        "zero", "one", "atom", "alt", "seq", "par", "leftmerge", "commmerge")
    actions: tuple[str, ...] = ("a", "b", "c")
    max_depth: int = 4
    gamma_entries: tuple[tuple[tuple[str, str], str], ...] = ((("a", "b"), "c"),)
    seed: int = 0

    def gamma(self) -> Gamma:
        return Gamma({pair: res for pair, res in self.gamma_entries})


def random_action(rng: random.Random, cfg: GenConfig) -> ActionLabel:
    return ActionLabel(rng.choice(cfg.actions))


def random_term(rng: random.Random, cfg: GenConfig,
                depth: Optional[int] = None) -> Term:
    if depth is None:
        depth = cfg.max_depth
    names = cfg.constructors
    if depth <= 0:
        names = tuple(n for n in names if n in _LEAVES) or ("atom",)
    name = rng.choice(names)
    if name == "zero":
        return Zero()
    if name == "one":
        return One()
    if name == "atom":
        return Atom(random_action(rng, cfg))
    node = _NODE_BUILDERS[name]
    return node(random_term(rng, cfg, depth - 1), random_term(rng, cfg, depth - 1))


# --------------------------------------------------------------------------
# Full-surface fuzzing (every constructor the grammar can print)
# --------------------------------------------------------------------------

SURFACE_VAR_POOL = ("P", "Q", "R")

_BINARY_SURFACE = (
    Alt, Seq, Par, AndPar, OrPar1, OrPar2, LeftMerge, RightMerge, CommMerge,
    TermMerge, Disrupt, Interrupt, MultiInterrupt, MandInterrupts, DisambAlt,
    DisambSeq1, DisambSeq2, DisambSeqX, DisambDisrupt,
)


def _random_value(rng: random.Random) -> Value:
    k = rng.randrange(3)
    if k == 0:
        return Value("Bool", rng.random() < 0.5)
    if k == 1:
        return Value("Int", rng.randint(-99, 99))
    return Value("Str", rng.choice(("s", "msg", "a b", 'q"x')))


def _random_pred(rng: random.Random) -> Pred:
    if rng.random() < 0.5:
        return Pred(const=rng.random() < 0.5, negated=rng.random() < 0.3)
    return Pred(name=rng.choice(("p", "q")), negated=rng.random() < 0.5)


def _random_binder(rng: random.Random) -> Binder:
    return Binder(rng.choice(("v", "w")), rng.choice(("Bool", "Int", "Str")))


def random_surface_term(rng: random.Random, depth: int = 4) -> Term:
    """A random term over every printable constructor (used for render/parse
    round-trip fuzzing; not necessarily semantically meaningful)."""
    if depth <= 0:
        k = rng.randrange(10)
        if k == 0:
            return Zero()
        if k == 1:
            return One(_random_value(rng) if rng.random() < 0.4 else None)
        if k == 2:
            return Var(rng.choice(SURFACE_VAR_POOL))
        if k == 3:
            return Etcetera()
        if k == 4:
            return EtceteraOpt()
        if k == 5:
            return OptBreak()
        if k == 6:
            return Break()
        if k == 7:
            return While(_random_pred(rng))
        if k == 8:
            return Test(_random_pred(rng))
        value = _random_value(rng) if rng.random() < 0.4 else None
        raises = rng.choice(("Err", None, None))
        return Atom(ActionLabel(rng.choice(("a", "b", "go")), value, raises))
    k = rng.randrange(8)
    sub = lambda: random_surface_term(rng, depth - 1)
    if k == 0:
        return Neg(sub())
    if k == 1:
        return DoThenElse(sub(), sub(), sub())
    if k == 2:
        return Flow(sub(), _random_binder(rng), sub())
    if k == 3:
        return ExcFlow(sub(), Binder(rng.choice(("e", "f")), "Str"), sub())
    if k == 4:
        return StreamFlow(sub(), _random_binder(rng), sub())
    if k == 5:
        return Raised("Boom")
    node = rng.choice(_BINARY_SURFACE)
    return node(sub(), sub())
