from random import Random

import pytest

from rtlmorph import nodes as n
from rtlmorph import parse, emit, instantiate, elaborate
from rtlmorph.errors import NoEligibleSite, NoProductTerm, UnsupportedWidth
from rtlmorph.morph.logic import (
    BoolExprView, LogicMutationConfig, demorganize, inject_redundant,
    mutate_logic,
)
from rtlmorph.nodes import count_nodes

import bitref
from conftest import design_text


def _expr(text, n_inputs=6):
    ports = ", ".join(f"input wire {c}" for c in "abcdef"[:n_inputs])
    unit = parse(f"module t({ports}, output wire y); assign y = {text}; endmodule")
    return unit.modules[0].items[0].rhs


def test_two_product_rewrite_form():
    got = demorganize(_expr("(a & b) | (a & c)")).expr
    want = _expr("~(~(~(~a | ~b)) & ~(~(~a | ~c)))")
    assert got == want


def test_two_product_rewrite_truth_table():
    src = _expr("(a & b) | (a & c)")
    out = demorganize(src).expr
    names = ["a", "b", "c"]
    assert bitref.truth_table(src, names) == bitref.truth_table(out, names)


def test_single_literal_identity():
    e = _expr("a")
    assert demorganize(e).expr == e


def test_depth_limits_rewrite():
    src = _expr("(a & b) | (c & d)")
    shallow = demorganize(src, depth=1).expr
    # only the root disjunction rewritten; the products stay intact
    assert shallow == _expr("~(~(a & b) & ~(c & d))")


def test_depth_bounds():
    with pytest.raises(ValueError):
        demorganize(_expr("a & b"), depth=0)
    with pytest.raises(ValueError):
        demorganize(_expr("a & b"), depth=9)


def _random_bool_expr(rng, names, depth):
    if depth == 0 or rng.random() < 0.3:
        leaf = n.Ref(rng.choice(names))
        return n.Unary("~", leaf) if rng.random() < 0.3 else leaf
    op = rng.choice(["&", "|", "&", "|", "^"])
    return n.Binary(op, _random_bool_expr(rng, names, depth - 1),
                    _random_bool_expr(rng, names, depth - 1))


def test_demorganize_500_random_4var():
    rng = Random(2024)
    names = ["a", "b", "c", "d"]
    for i in range(500):
        e = _random_bool_expr(rng, names, 3)
        out = demorganize(e, depth=rng.randint(1, 8)).expr
        assert bitref.truth_table(e, names) == bitref.truth_table(out, names), i


def test_inject_double_negation_shape():
    view = inject_redundant(_expr("(a & b) | (a & c)"),
                            LogicMutationConfig(max_extra_terms=1))
    # e | ~(~(a & b & c))
    expected = n.Binary(
        "|", _expr("(a & b) | (a & c)"),
        n.Unary("~", n.Unary("~", _expr("a & b & c"))))
    assert view.expr == expected


def test_inject_zero_terms_is_identity():
    e = _expr("(a & b) | c")
    assert inject_redundant(e, LogicMutationConfig(max_extra_terms=0)).expr == e


def test_inject_no_product_term():
    with pytest.raises(NoProductTerm):
        inject_redundant(_expr("a ^ b"), LogicMutationConfig(max_extra_terms=1))


def test_inject_500_random_6var():
    rng = Random(77)
    names = ["a", "b", "c", "d", "e", "f"]
    checked = 0
    for i in range(500):
        e = _random_bool_expr(rng, names, 3)
        try:
            out = inject_redundant(e, LogicMutationConfig(
                seed=i, max_extra_terms=rng.randint(1, 3))).expr
        except NoProductTerm:
            continue
        checked += 1
        assert bitref.truth_table(e, names) == bitref.truth_table(out, names), i
    assert checked > 300


def test_projection_rejects_wide_signals():
    unit = parse("module t(input wire [3:0] a, output wire y); "
                 "assign y = a[0]; endmodule")
    with pytest.raises(UnsupportedWidth):
        BoolExprView.project(unit.modules[0].items[0].rhs, lambda s: 4)


def test_mutate_logic_reproduces_worked_module():
    unit = parse(design_text("logic_pair"))
    mutant, record = mutate_logic(unit.modules[0])
    text = emit(mutant)
    for frag in (
        "wire term1 = ~(~a | ~b);",
        "wire term2 = ~(~a | ~c);",
        "wire term3 = ~(~term1 & ~term2);",
        "wire term4 = ~(~(a & b & c));",
        "assign y = ~(~term3 & ~term4);",
    ):
        assert frag in text, frag
    assert record.strategy == "logic"
    assert record.output_offsets == {"y": 0}


def test_mutate_logic_no_site():
    unit = parse("module t(input wire [7:0] a, input wire [7:0] b, "
                 "output wire [7:0] y); assign y = a + b; endmodule")
    with pytest.raises(NoEligibleSite):
        mutate_logic(unit.modules[0])


def test_structural_growth(corpus_modules, all_mutants):
    for (design_id, strategy), (mutant, _) in all_mutants.items():
        if strategy != "logic":
            continue
        original = corpus_modules[design_id][1]
        assert count_nodes(mutant) > count_nodes(original), design_id


def test_fresh_name_hygiene():
    text = """module t(input wire a, input wire b, output wire y);
    wire term1 = a;
    assign y = (a & b) | term1;
endmodule
"""
    mutant, _ = mutate_logic(parse(text).modules[0])
    names = [d.name for d in mutant.nets]
    assert len(names) == len(set(names))
    # nothing shadows the pre-existing term1
    assert names.count("term1") == 1


def test_comb_block_site_hoisted():
    text = """module t(input wire a, input wire b, input wire c, output reg y);
    always @(*) begin
        y = (a & b) | c;
    end
endmodule
"""
    mutant, record = mutate_logic(parse(text).modules[0])
    assert any(d.init is not None for d in mutant.nets)
    assert any(site.startswith("comb") for site in record.sites)
    io = instantiate(elaborate(parse(text)))
    im = instantiate(elaborate(n.SourceUnit((mutant,))))
    for v in range(8):
        ins = {"a": v & 1, "b": (v >> 1) & 1, "c": (v >> 2) & 1}
        assert io.eval(ins) == im.eval(ins)


def test_xor_left_opaque():
    out = demorganize(_expr("(a ^ b) | c")).expr
    assert out == _expr("~(~(a ^ b) & ~c)")
