"""Parser and printer for theory specification documents.

A document is a sequence of sections; a section header is ``name:`` at the
start of a line, with its value on the same line or on the indented lines
below::

    dimension: 1
    coordinates: t
    fields: x:0, x+:-1
    omega: dV(x) ^ dV(x+) ^ dx(t)
    Q:
        x+ -> x_{tt}

Expressions use jets ``u`` / ``u_{tt}``, total derivatives ``d(expr, t)``,
vertical generators ``dV(expr)``, horizontal generators ``dx(t)``, the volume
form ``vol``, rational literals ``p/q``, ``**`` for powers and ``*`` or ``^``
for the graded product. Sums need spaces around the sign when a field name
ends in ``+``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Optional

import pyparsing as pp
from pydantic import ValidationError

from bicomplex.exceptions import BicomplexError, SpecParseError
from bicomplex.models.theory import FieldDecl, SpecDocument, SpecOptions
from bicomplex.services.bv import TheorySpec
from bicomplex.services.calculus import EvolutionaryField, dV, total_derivative
from bicomplex.services.localforms import LocalForm, Theory, format_form

logger = logging.getLogger(__name__)

SECTIONS = ("dimension", "coordinates", "fields", "pairing", "omega", "Q", "L", "theta", "options")
_HEADER = re.compile(r"^([A-Za-z_]+)\s*:(.*)$")

# (line, column, length) of a stretch of document text
Span = tuple[int, int, int]


@dataclass
class _Section:
    name: str
    line: int
    lines: list[str]
    origins: list[tuple[int, int]] = field(default_factory=list)

    @property
    def text(self) -> str:
        return " ".join(part.strip() for part in self.lines if part.strip())

    def source(self) -> list[Span]:
        """(line, column, length) of each non-blank part joined into ``text``."""
        return [
            (number, column, len(part.strip()))
            for part, (number, column) in zip(self.lines, self.origins)
            if part.strip()
        ]


def _indent(text: str) -> int:
    return len(text) - len(text.lstrip())


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def _split_sections(text: str) -> dict[str, _Section]:
    sections: dict[str, _Section] = {}
    current: Optional[_Section] = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        match = _HEADER.match(line)
        if match and not line[0].isspace():
            name = match.group(1)
            if name not in SECTIONS:
                raise SpecParseError(f"Unknown section: {name}", number, 1)
            if name in sections:
                raise SpecParseError(f"Duplicate section: {name}", number, 1)
            current = _Section(name, number, [])
            value = match.group(2)
            if value.strip():
                current.lines.append(value)
                current.origins.append((number, match.start(2) + _indent(value) + 1))
            sections[name] = current
        elif current is not None and line[0].isspace():
            current.lines.append(line)
            current.origins.append((number, _indent(line) + 1))
        else:
            raise SpecParseError("Expected a section header", number, 1)
    return sections


def _parse_int(section: _Section, value: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise SpecParseError(f"Expected an integer in {section.name}", section.line, 1) from None


def _parse_fields(section: _Section) -> list[FieldDecl]:
    fields = []
    for entry in section.text.replace(",", " ").split():
        name, sep, ghost = entry.rpartition(":")
        if not sep or not name:
            raise SpecParseError(f"Expected name:ghost, got {entry!r}", section.line, 1)
        try:
            fields.append(FieldDecl(name=name, ghost=_parse_int(section, ghost)))
        except ValidationError as e:
            message = e.errors()[0]["msg"]
            raise SpecParseError(f"Invalid field {name!r}: {message}", section.line, 1) from None
    return fields


def _parse_mapping(section: _Section, separator: str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for line, (number, column) in zip(section.lines, section.origins):
        key, sep, value = line.partition(separator)
        if not sep:
            raise SpecParseError(
                f"Expected 'key {separator} value' in {section.name}", number, column
            )
        mapping[key.strip()] = value.strip()
    return mapping


def source_map(text: str) -> dict[str, list[Span]]:
    """Document positions of every expression, keyed like the sections of :func:`resolve`.

    Each entry lists (line, column, length) for the parts that were joined
    with single spaces into the expression text.
    """
    sections = _split_sections(text)
    spans = {name: sections[name].source() for name in ("omega", "L", "theta") if name in sections}
    if "Q" in sections:
        q = sections["Q"]
        for line, (number, column) in zip(q.lines, q.origins):
            key, sep, value = line.partition("->")
            if not sep or not value.strip():
                continue
            start = len(key) + len(sep) + _indent(value)
            spans[f"Q^{key.strip()}"] = [
                (number, column + start - _indent(line), len(value.strip()))
            ]
    return spans


def parse_document(text: str) -> SpecDocument:
    """Split a specification into its raw sections.

    Raises:
        SpecParseError: on unknown, duplicate or missing sections and malformed entries
    """
    sections = _split_sections(text)
    for required in ("dimension", "fields"):
        if required not in sections:
            raise SpecParseError(f"Missing section: {required}")
    if "omega" not in sections and "pairing" not in sections:
        raise SpecParseError("Missing section: omega")

    options = SpecOptions()
    if "options" in sections:
        raw = _parse_mapping(sections["options"], ":")
        try:
            options = SpecOptions(**{k: _parse_int(sections["options"], v) for k, v in raw.items()})
        except (ValidationError, TypeError) as e:
            raise SpecParseError(f"Invalid options: {e}", sections["options"].line, 1) from None

    pairing = None
    if "pairing" in sections:
        pairing = [
            [cell.strip() for cell in row.split(",")]
            for row in sections["pairing"].lines
            if row.strip()
        ]

    try:
        return SpecDocument(
            dimension=_parse_int(sections["dimension"], sections["dimension"].text),
            coordinates=sections["coordinates"].text.replace(",", " ").split()
            if "coordinates" in sections
            else [],
            fields=_parse_fields(sections["fields"]),
            omega=sections["omega"].text if "omega" in sections else None,
            pairing=pairing,
            q=_parse_mapping(sections["Q"], "->") if "Q" in sections else {},
            lagrangian=sections["L"].text if "L" in sections else None,
            theta=sections["theta"].text if "theta" in sections else None,
            options=options,
        )
    except ValidationError as e:
        raise SpecParseError(f"Invalid document: {e.errors()[0]['msg']}") from None


def print_document(doc: SpecDocument) -> str:
    """Render a document in section order; ``parse_document`` inverts it."""
    lines = [f"dimension: {doc.dimension}"]
    if doc.coordinates:
        lines.append(f"coordinates: {' '.join(doc.coordinates)}")
    lines.append("fields: " + ", ".join(f"{f.name}:{f.ghost}" for f in doc.fields))
    if doc.pairing is not None:
        lines.append("pairing:")
        lines.extend("    " + ", ".join(row) for row in doc.pairing)
    if doc.omega is not None:
        lines.append(f"omega: {doc.omega}")
    if doc.q:
        lines.append("Q:")
        lines.extend(f"    {name} -> {expr}" for name, expr in doc.q.items())
    if doc.lagrangian is not None:
        lines.append(f"L: {doc.lagrangian}")
    if doc.theta is not None:
        lines.append(f"theta: {doc.theta}")
    options = doc.options.model_dump(exclude_none=True)
    if options:
        lines.append("options:")
        lines.extend(f"    {key}: {value}" for key, value in options.items())
    return "\n".join(lines) + "\n"


# Expressions


def _name_pattern(names: list[str]) -> str:
    alternatives = "|".join(re.escape(n) for n in sorted(names, key=len, reverse=True))
    return rf"(?:{alternatives})(?![A-Za-z0-9])"


def _product(forms: list[LocalForm]) -> LocalForm:
    return reduce(lambda a, b: a * b, forms)


@lru_cache(maxsize=16)
def _expression_grammar(theory: Theory) -> pp.ParserElement:
    """Grammar whose parse actions build local forms of ``theory`` directly."""
    field_names = [f.name for f in theory.fields]
    coordinate = pp.Regex(_name_pattern(list(theory.coordinates)))
    expr = pp.Forward()

    number = pp.Regex(r"\d+(?:/\d+)?")
    number.setParseAction(lambda t: [theory.constant(Fraction(t[0]))])

    subscript = pp.Suppress("_") + (
        pp.Suppress("{") + pp.Regex(r"[A-Za-z ]+") + pp.Suppress("}") | pp.Regex(r"[A-Za-z]")
    )
    jet = pp.Regex(_name_pattern(field_names)) + pp.Optional(subscript, default="")

    def make_jet(t):
        letters = t[1].replace(" ", "")
        for c in letters:
            if c not in theory.coordinates:
                raise pp.ParseFatalException(f"Unknown coordinate in subscript: {c!r}")
        return [theory.jet(t[0], letters)]

    jet.setParseAction(make_jet)

    base = coordinate.copy()
    base.setParseAction(lambda t: [theory.coord(t[0])])

    volume = pp.Keyword("vol")
    volume.setParseAction(lambda t: [theory.volume()])

    horizontal = pp.Suppress(pp.Keyword("dx") + "(") + coordinate + pp.Suppress(")")
    horizontal.setParseAction(lambda t: [theory.dx(t[0])])

    vertical = pp.Suppress(pp.Keyword("dV") + "(") + expr + pp.Suppress(")")
    vertical.setParseAction(lambda t: [dV(t[0])])

    derivative = pp.Suppress(pp.Keyword("d") + "(") + expr + pp.Suppress(",") + coordinate
    derivative = derivative + pp.Suppress(")")
    derivative.setParseAction(
        lambda t: [total_derivative(theory.coordinate_index(t[1]), t[0], capped=True)]
    )

    atom = (
        number
        | horizontal
        | vertical
        | derivative
        | volume
        | jet
        | base
        | pp.Suppress("(") + expr + pp.Suppress(")")
    )

    def power(t):
        tokens = t[0]
        result = tokens[-1]
        for token in reversed(tokens[:-2:2]):
            exponent = result.terms.get((), None) if len(result) == 1 else None
            if exponent is None or exponent.denominator != 1 or exponent < 0:
                raise pp.ParseFatalException("Exponents must be non-negative integers")
            result = token ** int(exponent)
        return [result]

    def negate(t):
        return [-t[0][1]]

    def multiply(t):
        return [_product(list(t[0][0::2]))]

    def add(t):
        tokens = t[0]
        total = tokens[0]
        for op, operand in zip(tokens[1::2], tokens[2::2]):
            total = total + operand if op == "+" else total - operand
        return [total]

    expr <<= pp.infixNotation(
        atom,
        [
            ("**", 2, pp.opAssoc.RIGHT, power),
            ("-", 1, pp.opAssoc.RIGHT, negate),
            (pp.oneOf("* ^"), 2, pp.opAssoc.LEFT, multiply),
            (pp.oneOf("+ -"), 2, pp.opAssoc.LEFT, add),
        ],
    )
    return expr


def _locate(origin: list[Span], column: int) -> tuple[int, int]:
    """Map a column of the space-joined expression back to the document."""
    offset = column - 1
    for number, start, length in origin:
        if offset <= length:
            return number, start + offset
        offset -= length + 1
    number, start, length = origin[-1]
    return number, start + length


def parse_expression(
    theory: Theory,
    text: str,
    section: str = "expression",
    origin: Optional[list[Span]] = None,
) -> LocalForm:
    """Parse one expression into a local form.

    Args:
        theory: Theory whose names the expression may use
        text: Expression text
        section: Section name for diagnostics
        origin: Document spans of ``text`` from :func:`source_map`

    Raises:
        SpecParseError: on syntax errors or references to unknown names
    """
    grammar = _expression_grammar(theory)
    try:
        result = grammar.parseString(text, parseAll=True)
    except pp.ParseBaseException as e:
        line, column = _locate(origin, e.col) if origin else (e.lineno, e.col)
        raise SpecParseError(f"Syntax error in {section}: {e.msg}", line, column) from None
    except BicomplexError as e:
        raise SpecParseError(f"Invalid {section}: {e}") from None
    return result[0]


# Resolution


def _pairing_form(theory: Theory, rows: list[list[str]], line: int) -> LocalForm:
    n = theory.n_fields
    if len(rows) != n or any(len(row) != n for row in rows):
        raise SpecParseError(f"Pairing matrix must be {n}x{n}", line, 1)
    names = [f.name for f in theory.fields]
    vol = theory.volume()
    terms = []
    for a, row in enumerate(rows):
        for b, cell in enumerate(row):
            try:
                value = Fraction(cell)
            except ValueError:
                raise SpecParseError(f"Invalid pairing entry {cell!r}", line, 1) from None
            if value:
                terms.append(theory.dv(names[a]).wedge(theory.dv(names[b])).wedge(vol).scale(value))
    return LocalForm.sum(theory, terms)


def _field_from_components(theory: Theory, comps: dict[str, LocalForm]) -> EvolutionaryField:
    try:
        ghosts = {
            comp.degree("ghd") - theory.ghost(theory.field_index(name))
            for name, comp in comps.items()
            if comp
        }
    except BicomplexError as e:
        raise SpecParseError(f"Invalid Q: {e}") from None
    if len(ghosts) > 1:
        raise SpecParseError(f"Q components have inconsistent ghost degrees {sorted(ghosts)}")
    ghost = ghosts.pop() if ghosts else 1
    try:
        return EvolutionaryField.from_mapping(theory, ghost, comps)
    except BicomplexError as e:
        raise SpecParseError(f"Invalid Q: {e}") from None


def resolve(
    doc: SpecDocument,
    name: str = "theory",
    jet_cap: Optional[int] = None,
    source: Optional[dict[str, list[Span]]] = None,
) -> TheorySpec:
    """Turn a parsed document into a theory with its forms and field.

    ``source`` is the :func:`source_map` of the document text; with it, syntax
    errors carry document positions.

    Raises:
        SpecParseError: on unknown names, degree mismatches or malformed expressions
    """
    try:
        theory = Theory.build(
            doc.dimension,
            doc.fields,
            doc.coordinates,
            jet_cap=jet_cap if jet_cap is not None else doc.options.jet_cap,
        )
    except BicomplexError as e:
        raise SpecParseError(str(e)) from None
    source = source or {}

    pairing_omega = _pairing_form(theory, doc.pairing, 0) if doc.pairing is not None else None
    omega = pairing_omega
    if doc.omega is not None:
        omega = parse_expression(theory, doc.omega, "omega", source.get("omega"))

    comps: dict[str, LocalForm] = {}
    for field_name, text in doc.q.items():
        if field_name not in {f.name for f in theory.fields}:
            raise SpecParseError(f"Unknown field in Q: {field_name!r}")
        section = f"Q^{field_name}"
        comps[field_name] = parse_expression(theory, text, section, source.get(section))
    Q = _field_from_components(theory, comps)

    lagrangian = theta = None
    if doc.lagrangian is not None:
        lagrangian = parse_expression(theory, doc.lagrangian, "L", source.get("L"))
    if doc.theta is not None:
        theta = parse_expression(theory, doc.theta, "theta", source.get("theta"))
    logger.debug(f"Resolved {name}: n={theory.dimension}, {theory.n_fields} fields")
    return TheorySpec(
        name=name,
        theory=theory,
        omega=omega,
        Q=Q,
        lagrangian=lagrangian,
        theta=theta,
        pairing_omega=pairing_omega if doc.omega is not None else None,
    )


def parse_spec(text: str, name: str = "theory", jet_cap: Optional[int] = None) -> TheorySpec:
    """parse_document followed by resolve."""
    return resolve(parse_document(text), name=name, jet_cap=jet_cap, source=source_map(text))


def normalize_document(doc: SpecDocument) -> SpecDocument:
    """Rewrite every expression in canonical printed form."""
    spec = resolve(doc)
    return doc.model_copy(
        update={
            "omega": format_form(spec.omega) if doc.omega is not None else None,
            "q": {
                f.name: format_form(c) for f, c in zip(spec.theory.fields, spec.Q.components) if c
            },
            "lagrangian": format_form(spec.lagrangian) if spec.lagrangian is not None else None,
            "theta": format_form(spec.theta) if spec.theta is not None else None,
        }
    )
