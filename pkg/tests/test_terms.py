import random

import pytest

from acpkit.gen import GenConfig, random_term
from acpkit.parser import parse_expr
from acpkit.terms import (
    ActionLabel, Atom, Gamma, GammaError, One, Outcome, ProcessEnv, Seq,
    TermError, Value, Var, free_vars, validate_env,
)


def test_value_tags_distinguish_bool_from_int():
    assert Value("Bool", True) != Value("Int", 1)
    assert Value.of(True) == Value("Bool", True)
    assert Value.of(3).tag == "Int"
    with pytest.raises(TermError):
        Value("Int", 2**63)
    with pytest.raises(TermError):
        Value("Bool", 1)


def test_value_render():
    assert Value("Bool", False).render() == "false"
    assert Value("Int", -4).render() == "-4"
    assert Value("Str", 'a"b').render() == '"a\\"b"'


def test_action_label_identity_is_name_only():
    a1 = ActionLabel("a", Value("Int", 5))
    a2 = ActionLabel("a", Value("Int", 6))
    assert a1 == a2 and hash(a1) == hash(a2)
    assert not a1.same_atom(a2)
    with pytest.raises(TermError):
        ActionLabel("9bad")


def test_atoms_compare_by_full_label_content():
    # yields must stay visible to the rewriter even though label identity
    # ignores them
    assert Atom(ActionLabel("a", Value("Int", 5))) != Atom(ActionLabel("a", Value("Int", 6)))
    assert Atom(ActionLabel("a")) == Atom(ActionLabel("a"))


def test_outcome_invariants():
    assert Outcome("Success").render() == "Success"
    assert Outcome("Success", value=Value("Int", 3)).render() == "Success[3]"
    assert Outcome("Failure", exc="IO").render() == "Failure[IO]"
    with pytest.raises(TermError):
        Outcome("Failure", value=Value("Int", 1))


def test_free_vars_examples():
    names = frozenset({"X"})
    assert free_vars(parse_expr("a")) == frozenset()
    assert free_vars(parse_expr("a;X", names=names)) == {"X"}
    assert free_vars(parse_expr("X + X", names=names)) == {"X"}


def test_structural_equality_is_an_equivalence_relation():
    rng = random.Random(5)
    cfg = GenConfig(seed=5)
    terms = [random_term(rng, cfg) for _ in range(200)]
    for t in terms:
        assert t == t
    for a, b in zip(terms, terms[1:]):
        assert (a == b) == (b == a)
    for a, b, c in zip(terms, terms[1:], terms[2:]):
        if a == b and b == c:
            assert a == c


# -- environment validation -------------------------------------------------


def test_validate_env_accepts_guarded_definition():
    env = ProcessEnv({"X": parse_expr("a;X + b", names=frozenset({"X"}))})
    assert validate_env(env) == []


def test_validate_env_rejects_unguarded_recursion():
    env = ProcessEnv({"X": parse_expr("X + a", names=frozenset({"X"}))})
    diags = validate_env(env)
    assert len(diags) == 1
    assert diags[0].kind == "unguarded"
    assert "X" in diags[0].message


def test_validate_env_indirect_unguarded_cycle():
    names = frozenset({"X", "Y"})
    env = ProcessEnv({
        "X": parse_expr("Y", names=names),
        "Y": parse_expr("X", names=names),
    })
    assert any(d.kind == "unguarded" for d in validate_env(env))
    # guarded through the cycle is fine
    env2 = ProcessEnv({
        "X": parse_expr("Y", names=names),
        "Y": parse_expr("a;X", names=names),
    })
    assert validate_env(env2) == []


def test_validate_env_reports_undefined_reference():
    env = ProcessEnv({"X": parse_expr("a;Y", names=frozenset({"X", "Y"}))})
    diags = validate_env(env)
    assert any(d.kind == "undefined" and "Y" in d.message for d in diags)


def test_validate_env_gamma_associativity_violation():
    gamma = Gamma({("a", "b"): "d", ("d", "c"): "e",
                   ("b", "c"): "f", ("a", "f"): "g"})
    diags = validate_env(ProcessEnv(gamma=gamma))
    assert any(d.kind == "gamma-assoc" and "{a,b,c}" in d.where for d in diags)


def test_validate_env_gamma_partial_table_ok():
    gamma = Gamma({("a", "b"): "d", ("d", "c"): "e"})
    assert validate_env(ProcessEnv(gamma=gamma)) == []


def test_gamma_combine_closure():
    gamma = Gamma({("a", "b"): "d", ("d", "c"): "e"})
    assert gamma.pair("b", "a") == "d"  # unordered keys
    assert gamma.combine(("a", "b")) == "d"
    assert gamma.combine(("a", "b", "c")) == "e"
    assert gamma.combine(("a", "c")) is None


def test_gamma_rejects_conflicting_entries():
    with pytest.raises(GammaError):
        Gamma({("a", "b"): "c", ("b", "a"): "d"})
