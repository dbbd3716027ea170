import pytest
from hypothesis import given, settings, strategies as st

from skipflow import corpus_path
from skipflow.ir import MethodRef
from skipflow.oracle import gen_program
from skipflow.text import (
    SfirSyntaxError,
    SfirValidationError,
    SourceFile,
    format_program,
    parse_program,
    print_program,
)

MINIMAL = "type Object {} method Object.main() { b0: start() v0 = 0 return v0 }"

COVERAGE = """
# every statement kind, every condition kind, a merge with two phis
type Object {}
type A extends Object {
  field x : int
  field next : A
}
type B extends A {}
method A.get(this, k) {
  b0: start(this, k)
    v = this.x
    return v
}
method Object.main() {
  b0: start()
    a = new A
    n = null
    z = 0
    a.x = z
    a.next = n
    r = any
    g = a.get(r)
    if a instanceof B then b1 else b2
  b1: label
    jump b5
  b2: label
    if g < z then b3 else b4
  b3: label
    jump b5
  b4: label
    if a == n then b6 else b7
  b6: label
    jump b5
  b7: label
    jump b5
  b5: merge [p = phi(g, z, r, g), q = phi(a, a, n, a)]
    return p
}
root Object.main
"""


def test_minimal_program():
    p = parse_program(MINIMAL)
    assert len(p.types) == 1 and len(p.methods) == 1
    assert p.methods[0].ref == MethodRef("Object", "main")


def test_minimal_print_is_fixed_point():
    once = print_program(parse_program(MINIMAL)).text
    twice = print_program(parse_program(once)).text
    assert once == twice


def test_missing_type_after_instanceof():
    src = "type Object {}\nmethod Object.main() {\n  b0: start()\n    v0 = 0\n    if v0 instanceof then b1 else b2\n}"
    with pytest.raises(SfirSyntaxError) as e:
        parse_program(src)
    # the token right after `instanceof`
    assert (e.value.line, e.value.col) == (5, 22)


def test_validation_errors_carry_positions():
    src = MINIMAL.replace("return v0", "return v9")
    with pytest.raises(SfirValidationError) as e:
        parse_program(SourceFile(src, "x.sfir"))
    d = e.value.diagnostics[0]
    assert d.violation.rule == "ssa-dominance"
    assert (d.origin, d.line, d.col) == ("x.sfir", 1, 39)  # the block holding the use


def test_literal_range():
    with pytest.raises(SfirSyntaxError):
        parse_program(MINIMAL.replace("v0 = 0", f"v0 = {2**63}"))
    p = parse_program(MINIMAL.replace("v0 = 0", f"v0 = {-(2**63)}"))
    assert p.methods[0].blocks[0].statements[0].expr.value == -(2**63)


def test_jdk_corpus_parses_and_round_trips():
    src = SourceFile.read(corpus_path("jdk_onexit"))
    p = parse_program(src)
    assert MethodRef("SharedThreadContainer", "onExit") in {m.ref for m in p.methods}
    assert parse_program(print_program(p)) == p


def test_coverage_program_round_trips():
    p = parse_program(COVERAGE)
    text = format_program(p)
    assert parse_program(text) == p
    assert format_program(parse_program(text)) == text


def test_merge_without_brackets_is_accepted():
    a = parse_program(COVERAGE)
    b = parse_program(COVERAGE.replace("merge [p = phi(g, z, r, g), q = phi(a, a, n, a)]",
                                       "merge p = phi(g, z, r, g), q = phi(a, a, n, a)"))
    assert a == b


def test_header_must_match_start():
    with pytest.raises(SfirSyntaxError):
        parse_program(MINIMAL.replace("Object.main()", "Object.main(x)"))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12))
def test_generated_round_trip(seed, size):
    p = gen_program(seed, size)
    text = format_program(p)
    assert parse_program(text) == p
    assert format_program(parse_program(text)) == text
