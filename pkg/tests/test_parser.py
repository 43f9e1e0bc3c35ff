import random

import pytest

from acpkit.gen import SURFACE_VAR_POOL, random_surface_term
from acpkit.parser import (
    ParseError, parse, parse_bindings_table, parse_expr, parse_gamma_table,
    render,
)
from acpkit.terms import (
    ActionLabel, Alt, Atom, Binder, DisambSeq1, Disrupt, Flow, One, OrPar2,
    Par, Seq, StreamFlow, Value, Var, While, Zero,
)

A, B, C = Atom(ActionLabel("a")), Atom(ActionLabel("b")), Atom(ActionLabel("c"))


def test_whitespace_sequences_in_definitions():
    spec = parse("main = a b c")
    assert spec.main == Seq(Seq(A, B), C)


def test_eternal_loop_definition_parses():
    spec = parse("live = searchSequence ...\nsearchSequence = a")
    live = spec.env.defs["live"]
    assert isinstance(live, Seq)
    assert live.left == Var("searchSequence")
    assert type(live.right).__name__ == "Etcetera"


def test_flow_arrow():
    t = parse_expr("x ~~(b:Bool)~~> y")
    assert t == Flow(Atom(ActionLabel("x")), Binder("b", "Bool"), Atom(ActionLabel("y")))
    # Boolean alias normalises to the Bool tag
    t2 = parse_expr("x ~~(b:Boolean)~~> y")
    assert t2.binder == Binder("b", "Bool")


def test_alt_with_one():
    assert parse_expr("a + 1") == Alt(A, One())


def test_sequence_binds_tighter_than_choice():
    # the optionality derivation reads back exactly: a;b + b == (a;b) + b
    t = parse_expr("a;b + b")
    assert t == Alt(Seq(A, B), B)


def test_merge_auxiliaries_bind_tighter_than_choice():
    t = parse_expr("x o*o y + x <* y", names=frozenset({"x", "y"}))
    assert isinstance(t, Alt)
    assert type(t.left).__name__ == "TermMerge"
    assert type(t.right).__name__ == "LeftMerge"


def test_disrupt_binds_tighter_than_choice():
    t = parse_expr("a / b + c")
    assert t == Alt(Disrupt(A, B), C)


def test_disambiguating_sequence_is_looser_than_choice():
    t = parse_expr("a;b + 1 |; a;d")
    assert isinstance(t, DisambSeq1)
    assert t.left == Alt(Seq(A, B), One())


def test_flow_arrows_are_right_associative():
    t = parse_expr("s ~~(d:Int)~~>> t ~~(d:Int)~~>> u")
    assert isinstance(t, StreamFlow)
    assert isinstance(t.right, StreamFlow)
    assert t.left == Atom(ActionLabel("s"))


def test_newline_sequences_and_operator_led_continuation():
    text = """searchSequence = searchCommand
                 ( showSearchingText
                   searchInDatabase
                   showSearchResults
                  )
                 / cancelSearch
searchCommand = a
showSearchingText = a
searchInDatabase = a
showSearchResults = a
cancelSearch = b
"""
    spec = parse(text)
    body = spec.env.defs["searchSequence"]
    # the parenthesised group is the left operand of the disrupt
    assert isinstance(body, Seq)
    assert isinstance(body.right, Disrupt)
    assert body.left == Var("searchCommand")


def test_parenthesised_group_spans_lines_without_new_definition():
    spec = parse("main = (a\n b)\nother = c")
    assert spec.main == Seq(A, B)
    assert "other" in spec.env.defs


def test_yields_raises_and_value_literals():
    t = parse_expr('a^5;b^true;c^"s";boom!IOError')
    seq = t
    atoms = []
    while isinstance(seq, Seq):
        atoms.append(seq.right)
        seq = seq.left
    atoms.append(seq)
    atoms.reverse()
    assert atoms[0].label.value == Value("Int", 5)
    assert atoms[1].label.value == Value("Bool", True)
    assert atoms[2].label.value == Value("Str", "s")
    assert atoms[3].label.raises == "IOError"
    assert parse_expr("1^-3") == One(Value("Int", -3))


def test_delta_epsilon_aliases():
    assert parse_expr("δ") == Zero()
    assert parse_expr("ε + a") == Alt(One(), A)


def test_while_and_test_predicates():
    t = parse_expr("while(!b)")
    assert isinstance(t, While) and t.pred.name == "b" and t.pred.negated
    t2 = parse_expr("test(true)")
    assert t2.pred.const is True


def test_do_then_else():
    t = parse_expr("do a then 0 else 1")
    assert type(t).__name__ == "DoThenElse"
    assert t.cond == A and t.then == Zero() and t.orelse == One()


def test_var_resolution_against_known_names():
    t = parse_expr("a;X", names=frozenset({"X"}))
    assert t.right == Var("X")
    t2 = parse_expr("a;X")  # unknown: plain action
    assert t2.right == Atom(ActionLabel("X"))


def test_render_examples():
    assert render(Alt(A, One())) == "a + 1"
    assert render(parse_expr("x <* y", names=frozenset({"x", "y"}))) == "x <* y"
    assert render(parse_expr("-a")) == "-a"
    assert render(parse_expr("a;b + b")) == "a;b + b"


def test_parse_errors_carry_location():
    with pytest.raises(ParseError) as ei:
        parse("main = a +")
    assert ei.value.line >= 1 and ei.value.col >= 1
    with pytest.raises(ParseError):
        parse("main = ((a)")
    with pytest.raises(ParseError):
        parse("not a definition")
    with pytest.raises(ParseError):
        parse("main = a\nmain = b")  # duplicate
    with pytest.raises(ParseError):
        parse_expr("a b")  # juxtaposition requires a definition body


def test_reserved_words_rejected_as_actions():
    with pytest.raises(ParseError):
        parse_expr("do")
    with pytest.raises(ParseError):
        parse_expr("then + a")


def test_annotated_definition_reference_rejected():
    with pytest.raises(ParseError):
        parse_expr("X^5", names=frozenset({"X"}))


def test_round_trip_10000_random_terms_over_all_constructors():
    rng = random.Random(2024)
    names = frozenset(SURFACE_VAR_POOL)
    for i in range(10_000):
        t = random_surface_term(rng, depth=rng.randint(0, 4))
        text = render(t)
        back = parse_expr(text, names=names)
        assert back == t, f"#{i}: {text}"


def test_gamma_table_format():
    g = parse_gamma_table("a b -> d\nd c -> e  # chain\n\n")
    assert g.pair("a", "b") == "d" and g.pair("c", "d") == "e"
    with pytest.raises(ParseError):
        parse_gamma_table("a b c -> d")


def test_bindings_table_format():
    assert parse_bindings_table("p = true\nq = false\n") == {"p": True, "q": False}
    with pytest.raises(ParseError):
        parse_bindings_table("p = maybe")
