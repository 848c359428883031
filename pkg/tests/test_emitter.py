import itertools

from rtlmorph import nodes as n
from rtlmorph import parse, emit, emit_expr

from conftest import design_text


def test_wire_init_emission_style():
    unit = parse(design_text("logic_pair"))
    from rtlmorph.morph.logic import mutate_logic
    mutant, _ = mutate_logic(unit.modules[0])
    text = emit(mutant)
    assert "wire term1 = ~(~a | ~b);" in text


def test_empty_module_emission():
    text = emit(parse("module m;\nendmodule"))
    assert text.split() == ["module", "m;", "endmodule"]


def test_emit_stability():
    for name in ("counter", "traffic_light", "alu_small", "pipe_xor"):
        text = design_text(name)
        once = emit(parse(text))
        assert emit(parse(once)) == once


def test_emit_injective_on_corpus(corpus_modules):
    texts = {}
    for design_id, (entry, module) in corpus_modules.items():
        texts[design_id] = emit(module)
    for a, b in itertools.combinations(texts, 2):
        assert texts[a] != texts[b], (a, b)


def test_literal_bases_preserved():
    m = parse("module t(output wire [7:0] y); assign y = 8'hA5; endmodule").modules[0]
    assert "8'ha5" in emit(m)
    m = parse("module t(output wire [3:0] y); assign y = 4'b1010; endmodule").modules[0]
    assert "4'b1010" in emit(m)


def test_minimal_parens():
    e = n.Binary("|", n.Binary("&", n.Ref("a"), n.Ref("b")),
                 n.Binary("&", n.Ref("a"), n.Ref("c")))
    assert emit_expr(e) == "a & b | a & c"
    e2 = n.Binary("&", n.Binary("|", n.Ref("a"), n.Ref("b")), n.Ref("c"))
    assert emit_expr(e2) == "(a | b) & c"
    e3 = n.Unary("~", n.Unary("~", n.Ref("a")))
    assert emit_expr(e3) == "~(~a)"


def test_left_associative_reparse():
    e = n.Binary("-", n.Binary("-", n.Ref("a"), n.Ref("b")), n.Ref("c"))
    text = emit_expr(e)
    m = parse(f"module t(input wire [3:0] a, input wire [3:0] b, "
              f"input wire [3:0] c, output wire [3:0] y); assign y = {text}; endmodule")
    assert m.modules[0].items[0].rhs == e
