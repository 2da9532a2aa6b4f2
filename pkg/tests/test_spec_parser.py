"""Tests for the specification document parser."""

import pytest

from bicomplex.exceptions import SpecParseError
from bicomplex.services.spec_parser import (
    normalize_document,
    parse_document,
    parse_expression,
    parse_spec,
    print_document,
    resolve,
    source_map,
)


def test_parse_particle(spec_text, particle):
    doc = parse_document(spec_text)
    assert doc.dimension == 1
    assert doc.coordinates == ["t"]
    assert [(f.name, f.ghost) for f in doc.fields] == [("x", 0), ("x+", -1)]
    assert doc.q == {"x+": "x_{tt}"}
    spec = resolve(doc, name="particle")
    assert spec.name == "particle"
    assert spec.k == -1
    assert spec.Q.ghost == 1
    assert spec.omega == particle.dv("x") * particle.dv("x+") * particle.dx("t")
    assert not spec.lax


def test_print_round_trip(spec_text):
    doc = parse_document(spec_text)
    assert parse_document(print_document(doc)) == doc


def test_normalize_round_trip(spec_text):
    doc = parse_document(spec_text)
    normal = normalize_document(doc)
    assert normalize_document(normal) == normal
    assert resolve(normal).omega == resolve(doc).omega
    assert resolve(normal).Q == resolve(doc).Q


def test_expressions(particle):
    assert parse_expression(particle, "dV(x+) ^ dV(x)") == parse_expression(
        particle, "dV(x) ^ dV(x+)"
    )
    assert parse_expression(particle, "dV(x) ^ x+") == -parse_expression(particle, "x+ ^ dV(x)")
    assert parse_expression(particle, "d(d(x, t), t)") == particle.jet("x", "tt")
    assert parse_expression(particle, "x**2") == particle.jet("x") * particle.jet("x")
    assert parse_expression(particle, "1/2 * x - x * 1/2").is_zero
    assert parse_expression(particle, "t * vol") == particle.coord("t") * particle.dx("t")
    assert parse_expression(particle, "-x_{t}") == -particle.jet("x", "t")


def test_missing_dimension():
    with pytest.raises(SpecParseError, match="Missing section: dimension"):
        parse_document("fields: x:0\nomega: dV(x) ^ dV(x) ^ dx(t)\n")


def test_unknown_section_location():
    with pytest.raises(SpecParseError) as exc_info:
        parse_document("dimension: 1\nfields: x:0\nmass: 3\n")
    assert exc_info.value.line == 3
    assert exc_info.value.column == 1
    assert "Unknown section: mass" in str(exc_info.value)


def test_bad_field_declarations():
    with pytest.raises(SpecParseError, match="name:ghost"):
        parse_document("dimension: 1\nfields: x\nomega: vol\n")
    with pytest.raises(SpecParseError, match="Invalid field"):
        parse_document("dimension: 1\nfields: 2x:0\nomega: vol\n")
    with pytest.raises(SpecParseError):
        parse_document("dimension: 1\nfields: x:0, x:1\nomega: vol\n")


def test_syntax_error(particle):
    with pytest.raises(SpecParseError, match="Syntax error in omega"):
        parse_expression(particle, "dV(x ^ dx(t)", "omega")
    with pytest.raises(SpecParseError):
        parse_expression(particle, "dV(y) ^ dx(t)")
    with pytest.raises(SpecParseError, match="Unknown coordinate"):
        parse_expression(particle, "x_{s}")


def test_syntax_error_positions():
    """Errors point at the document line, not at the joined section text."""
    head = "dimension: 1\ncoordinates: t\nfields: x:0, x+:-1\n"
    with pytest.raises(SpecParseError, match="Syntax error in omega") as exc_info:
        parse_spec(head + "omega: dV(x ^ dx(t)\n")
    assert exc_info.value.line == 4
    assert exc_info.value.column >= 8
    omega = "omega: dV(x) ^ dV(x+) ^ dx(t)\n"
    with pytest.raises(SpecParseError, match="Syntax error in Q") as exc_info:
        parse_spec(head + omega + "Q:\n    x+ -> x_{tt\n")
    assert exc_info.value.line == 6
    assert exc_info.value.column >= 11


def test_source_map():
    text = (
        "dimension: 1\n"
        "coordinates: t\n"
        "fields: x:0, x+:-1\n"
        "omega:\n"
        "    dV(x) ^ dV(x+)   # anchor\n"
        "\n"
        "      ^ dx(t)\n"
        "Q:\n"
        "    x+ ->  x_{tt}\n"
        "L: 1/2 * x * x_{tt} * dx(t)\n"
    )
    spans = source_map(text)
    assert spans["omega"] == [(5, 5, 14), (7, 7, 7)]
    assert spans["Q^x+"] == [(9, 12, 6)]
    assert spans["L"] == [(10, 4, 24)]
    assert parse_document(text).omega == "dV(x) ^ dV(x+) ^ dx(t)"


def test_unknown_field_in_q(spec_text):
    with pytest.raises(SpecParseError, match="Unknown field in Q"):
        parse_spec(spec_text.replace("x+ -> x_{tt}", "y -> x_{tt}"))


def test_pairing_section(particle):
    text = "dimension: 1\ncoordinates: t\nfields: x:0, x+:-1\npairing:\n    0, 1\n    0, 0\n"
    spec = parse_spec(text + "Q:\n    x+ -> x_{tt}\n")
    assert spec.omega == particle.dv("x") * particle.dv("x+") * particle.dx("t")
    with pytest.raises(SpecParseError, match="2x2"):
        parse_spec("dimension: 1\ncoordinates: t\nfields: x:0, x+:-1\npairing:\n    0, 1\n")


def test_options():
    text = "dimension: 1\nfields: x:0\nomega: vol\noptions:\n    samples: 5\n    arity: 2\n"
    doc = parse_document(text)
    assert doc.options.samples == 5
    assert doc.options.arity == 2
    with pytest.raises(SpecParseError, match="Invalid options"):
        parse_document(text.replace("arity: 2", "arity: 9"))


def test_jet_cap_override(spec_text):
    spec = parse_spec(spec_text, jet_cap=3)
    assert spec.theory.jet_cap == 3
