"""Graded-commutative symbolic core of the variational bicomplex.

A local form is a finite sum of terms ``coefficient * monomial`` in the free
graded-commutative algebra over Q generated by

- base coordinates ``x^i``                (degree 0),
- jet variables ``u^a_I``                 (degree ghd(a)),
- vertical generators ``dV u^a_I``        (degree ghd(a) + 1),
- horizontal generators ``dx^i``          (degree 1).

Monomials are kept sorted by a global generator order; reordering during
multiplication applies the Koszul sign of the total degrees. Odd generators
never appear with exponent larger than one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence, Union

from bicomplex.config import get_settings
from bicomplex.exceptions import InhomogeneousFormError, TheoryError
from bicomplex.models.theory import FieldDecl

logger = logging.getLogger(__name__)
settings = get_settings()

# Generator kinds, in the order used for canonical sorting
BASE = 0
JET = 1
VERTICAL = 2
HORIZONTAL = 3

Generator = tuple[int, int, tuple[int, ...], int]
Monomial = tuple[tuple[Generator, int], ...]
Scalar = Union[int, Fraction]

DEGREE_NAMES = ("vfd", "hfd", "hcd", "ghd", "tfd", "efd", "ped", "ted")
DEFAULT_COORDINATES = ("x", "y", "z", "w")


@dataclass(frozen=True)
class Theory:
    """Field content and base dimension shared by all forms of a computation."""

    dimension: int
    fields: tuple[FieldDecl, ...]
    coordinates: tuple[str, ...] = ()
    jet_cap: int = 8

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise TheoryError("Base dimension must be positive")
        if not self.coordinates:
            if self.dimension <= len(DEFAULT_COORDINATES):
                coords = DEFAULT_COORDINATES[: self.dimension]
            else:
                coords = tuple(f"x{i + 1}" for i in range(self.dimension))
            object.__setattr__(self, "coordinates", coords)
        if len(self.coordinates) != self.dimension:
            raise TheoryError(
                f"Expected {self.dimension} coordinate names, got {len(self.coordinates)}"
            )
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise TheoryError("Field names must be unique within a theory")
        clash = set(names) & set(self.coordinates)
        if clash:
            raise TheoryError(f"Names used both as field and coordinate: {sorted(clash)}")

    @classmethod
    def build(
        cls,
        dimension: int,
        fields: Mapping[str, int] | Sequence[FieldDecl],
        coordinates: Sequence[str] = (),
        jet_cap: Optional[int] = None,
    ) -> "Theory":
        """Convenience constructor from ``{name: ghost}`` pairs."""
        if isinstance(fields, Mapping):
            decls = tuple(FieldDecl(name=name, ghost=ghost) for name, ghost in fields.items())
        else:
            decls = tuple(fields)
        return cls(
            dimension=dimension,
            fields=decls,
            coordinates=tuple(coordinates),
            jet_cap=jet_cap if jet_cap is not None else settings.jet_cap,
        )

    @cached_property
    def _field_lookup(self) -> dict[str, int]:
        return {f.name: i for i, f in enumerate(self.fields)}

    @cached_property
    def _coordinate_lookup(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.coordinates)}

    @property
    def n_fields(self) -> int:
        return len(self.fields)

    def field_index(self, name: str) -> int:
        """Index of a field by name."""
        try:
            return self._field_lookup[name]
        except KeyError:
            raise TheoryError(f"Unknown field: {name!r}") from None

    def coordinate_index(self, coordinate: Union[int, str]) -> int:
        """Index of a base coordinate given by name or index."""
        if isinstance(coordinate, int):
            if not 0 <= coordinate < self.dimension:
                raise TheoryError(f"Coordinate index {coordinate} out of range")
            return coordinate
        try:
            return self._coordinate_lookup[coordinate]
        except KeyError:
            raise TheoryError(f"Unknown coordinate: {coordinate!r}") from None

    def ghost(self, field: int) -> int:
        return self.fields[field].ghost

    def generator_degree(self, gen: Generator) -> int:
        """Total degree (ghost + vertical + horizontal) of a generator."""
        kind = gen[0]
        if kind == JET:
            return self.fields[gen[1]].ghost
        if kind == VERTICAL:
            return self.fields[gen[1]].ghost + 1
        if kind == HORIZONTAL:
            return 1
        return 0

    def orders(
        self, spec: Union[None, str, Sequence[int], Sequence[str]] = None
    ) -> tuple[int, ...]:
        """Multi-index from a tuple of orders, a coordinate string or names.

        ``theory.orders("tt")`` and ``theory.orders((2,))`` agree for n = 1.
        """
        if spec is None:
            return (0,) * self.dimension
        if isinstance(spec, str):
            spec = list(spec)
        items = list(spec)
        if items and all(isinstance(s, int) for s in items):
            if len(items) != self.dimension:
                raise TheoryError(
                    f"Multi-index {tuple(items)} has length {len(items)}, expected {self.dimension}"
                )
            if any(s < 0 for s in items):
                raise TheoryError("Multi-index orders must be non-negative")
            return tuple(items)
        counts = [0] * self.dimension
        for name in items:
            counts[self.coordinate_index(name)] += 1
        return tuple(counts)

    # Generator constructors

    def jet(self, name: str, orders=None) -> "LocalForm":
        """The jet variable u^a_I."""
        gen = (JET, self.field_index(name), self.orders(orders), -1)
        return LocalForm.generator(self, gen)

    def dv(self, name: str, orders=None) -> "LocalForm":
        """The vertical generator dV u^a_I."""
        gen = (VERTICAL, self.field_index(name), self.orders(orders), -1)
        return LocalForm.generator(self, gen)

    def coord(self, coordinate: Union[int, str]) -> "LocalForm":
        """The base coordinate x^i."""
        return LocalForm.generator(self, (BASE, -1, (), self.coordinate_index(coordinate)))

    def dx(self, coordinate: Union[int, str]) -> "LocalForm":
        """The horizontal generator dx^i."""
        return LocalForm.generator(self, (HORIZONTAL, -1, (), self.coordinate_index(coordinate)))

    def volume(self) -> "LocalForm":
        """dx^1 ^ ... ^ dx^n."""
        return LocalForm(self, {self.volume_monomial: Fraction(1)})

    @cached_property
    def volume_monomial(self) -> Monomial:
        return tuple(((HORIZONTAL, -1, (), i), 1) for i in range(self.dimension))

    def one(self) -> "LocalForm":
        return LocalForm(self, {(): Fraction(1)})

    def zero(self) -> "LocalForm":
        return LocalForm(self)

    def constant(self, value: Scalar) -> "LocalForm":
        return LocalForm(self, {(): Fraction(value)})


@dataclass(frozen=True)
class Degrees:
    """All degree functions of a homogeneous form.

    The zero form is homogeneous of every degree; it reports ``None`` everywhere.
    """

    vfd: Optional[int]
    hfd: Optional[int]
    hcd: Optional[int]
    ghd: Optional[int]
    tfd: Optional[int]
    efd: Optional[int]
    ped: Optional[int]
    ted: Optional[int]

    @classmethod
    def from_basic(cls, n: int, vfd: int, hfd: int, ghd: int) -> "Degrees":
        hcd = n - hfd
        efd = vfd - hcd
        ped = ghd - hcd
        return cls(
            vfd=vfd,
            hfd=hfd,
            hcd=hcd,
            ghd=ghd,
            tfd=vfd + hfd,
            efd=efd,
            ped=ped,
            ted=ped + vfd,
        )

    @classmethod
    def wildcard(cls) -> "Degrees":
        return cls(*(None,) * len(DEGREE_NAMES))

    @property
    def is_wildcard(self) -> bool:
        return self.vfd is None


def monomial_degrees(theory: Theory, mono: Monomial) -> Degrees:
    """Degrees of a single monomial."""
    vfd = hfd = ghd = 0
    for gen, exp in mono:
        kind = gen[0]
        if kind == VERTICAL:
            vfd += exp
            ghd += theory.fields[gen[1]].ghost * exp
        elif kind == JET:
            ghd += theory.fields[gen[1]].ghost * exp
        elif kind == HORIZONTAL:
            hfd += exp
    return Degrees.from_basic(theory.dimension, vfd, hfd, ghd)


def monomial_total_degree(theory: Theory, mono: Monomial) -> int:
    return sum(theory.generator_degree(gen) * exp for gen, exp in mono)


def monomial_bidegree(mono: Monomial) -> tuple[int, int]:
    """(vfd, hfd) of a monomial."""
    vfd = hfd = 0
    for gen, exp in mono:
        if gen[0] == VERTICAL:
            vfd += exp
        elif gen[0] == HORIZONTAL:
            hfd += exp
    return vfd, hfd


def multiply_monomials(theory: Theory, left: Monomial, right: Monomial) -> tuple[int, Monomial]:
    """Product of two canonical monomials as ``(sign, monomial)``; sign 0 means zero."""
    if not left:
        return 1, right
    if not right:
        return 1, left
    degree = theory.generator_degree
    left_parity = [degree(g) * e % 2 for g, e in left]
    odd_remaining = sum(left_parity)
    out: list[tuple[Generator, int]] = []
    sign = 1
    i = j = 0
    while i < len(left) and j < len(right):
        g, e = left[i]
        h, f = right[j]
        if g < h:
            out.append((g, e))
            odd_remaining -= left_parity[i]
            i += 1
        elif h < g:
            # h passes every left factor not yet emitted
            if degree(h) * f % 2 and odd_remaining % 2:
                sign = -sign
            out.append((h, f))
            j += 1
        else:
            if degree(g) % 2:
                return 0, ()
            out.append((g, e + f))
            i += 1
            j += 1
    out.extend(left[i:])
    out.extend(right[j:])
    return sign, tuple(out)


def normalize(theory: Theory, coeff: Scalar, factors: Iterable[Generator]) -> "LocalForm":
    """Canonical form of ``coeff * g_1 * g_2 * ...`` for generators in any order."""
    sign, mono = 1, ()
    for gen in factors:
        _check_generator(theory, gen)
        s, mono = multiply_monomials(theory, mono, ((gen, 1),))
        if s == 0:
            return LocalForm(theory)
        sign *= s
    return LocalForm(theory, {mono: Fraction(coeff) * sign})


def _check_generator(theory: Theory, gen: Generator) -> None:
    kind, field, orders, coord = gen
    if kind in (JET, VERTICAL):
        if not 0 <= field < theory.n_fields:
            raise TheoryError(f"Unknown field index {field}")
        if len(orders) != theory.dimension:
            raise TheoryError(
                f"Multi-index {orders} has length {len(orders)}, expected {theory.dimension}"
            )
    elif kind in (BASE, HORIZONTAL):
        if not 0 <= coord < theory.dimension:
            raise TheoryError(f"Coordinate index {coord} out of range")
    else:
        raise TheoryError(f"Unknown generator kind {kind}")


class LocalForm:
    """An element of the bicomplex of local forms with exact coefficients.

    Instances are immutable values: every operation returns a new form.
    """

    __slots__ = ("theory", "_terms", "_hash")

    def __init__(self, theory: Theory, terms: Optional[Mapping[Monomial, Scalar]] = None):
        self.theory = theory
        self._terms: dict[Monomial, Fraction] = {}
        self._hash: Optional[int] = None
        if terms:
            for mono, coeff in terms.items():
                if coeff:
                    self._terms[mono] = Fraction(coeff)

    @classmethod
    def generator(cls, theory: Theory, gen: Generator) -> "LocalForm":
        _check_generator(theory, gen)
        return cls(theory, {((gen, 1),): Fraction(1)})

    @classmethod
    def from_monomial(cls, theory: Theory, mono: Monomial, coeff: Scalar = 1) -> "LocalForm":
        return cls(theory, {mono: Fraction(coeff)})

    @classmethod
    def sum(cls, theory: Theory, forms: Iterable["LocalForm"]) -> "LocalForm":
        """Sum of forms without intermediate copies."""
        acc: dict[Monomial, Fraction] = {}
        for form in forms:
            if form.theory is not theory and form.theory != theory:
                raise TheoryError("Cannot mix forms of different theories")
            for mono, coeff in form._terms.items():
                acc[mono] = acc.get(mono, Fraction(0)) + coeff
        return cls(theory, acc)

    # Mapping-like access

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    def items(self) -> Iterator[tuple[Monomial, Fraction]]:
        """Terms in canonical order."""
        for mono in sorted(self._terms):
            yield mono, self._terms[mono]

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(mono, Fraction(0))

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    # Ring operations

    def _check_theory(self, other: "LocalForm") -> None:
        if other.theory is not self.theory and other.theory != self.theory:
            raise TheoryError("Cannot mix forms of different theories")

    def _coerce(self, other) -> "LocalForm":
        if isinstance(other, LocalForm):
            self._check_theory(other)
            return other
        if isinstance(other, (int, Fraction)):
            return self.theory.constant(other)
        return NotImplemented

    def __add__(self, other) -> "LocalForm":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc = dict(self._terms)
        for mono, coeff in other._terms.items():
            acc[mono] = acc.get(mono, Fraction(0)) + coeff
        return LocalForm(self.theory, acc)

    def __radd__(self, other) -> "LocalForm":
        return self.__add__(other)

    def __neg__(self) -> "LocalForm":
        return LocalForm(self.theory, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "LocalForm":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "LocalForm":
        return (-self).__add__(other)

    def scale(self, factor: Scalar) -> "LocalForm":
        factor = Fraction(factor)
        if not factor:
            return LocalForm(self.theory)
        return LocalForm(self.theory, {m: c * factor for m, c in self._terms.items()})

    def wedge(self, other: "LocalForm") -> "LocalForm":
        """Graded-commutative product."""
        self._check_theory(other)
        acc: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                sign, mono = multiply_monomials(self.theory, m1, m2)
                if sign:
                    acc[mono] = acc.get(mono, Fraction(0)) + sign * c1 * c2
        return LocalForm(self.theory, acc)

    def __mul__(self, other) -> "LocalForm":
        if isinstance(other, LocalForm):
            return self.wedge(other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other) -> "LocalForm":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __xor__(self, other) -> "LocalForm":
        return self.wedge(other)

    def __truediv__(self, other) -> "LocalForm":
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, exponent: int) -> "LocalForm":
        result = self.theory.one()
        for _ in range(exponent):
            result = result.wedge(self)
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, LocalForm):
            return self.theory == other.theory and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == self.theory.constant(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # Structure

    def map_terms(self, fn: Callable[[Monomial, Fraction], Optional["LocalForm"]]) -> "LocalForm":
        """Apply ``fn`` to every term and sum the results."""
        return LocalForm.sum(
            self.theory,
            (r for r in (fn(m, c) for m, c in self._terms.items()) if r is not None),
        )

    def filter(self, predicate: Callable[[Monomial], bool]) -> "LocalForm":
        return LocalForm(self.theory, {m: c for m, c in self._terms.items() if predicate(m)})

    def split(self, key: Callable[[Monomial], object]) -> dict[object, "LocalForm"]:
        """Group terms by ``key(monomial)``."""
        groups: dict[object, dict[Monomial, Fraction]] = {}
        for mono, coeff in self._terms.items():
            groups.setdefault(key(mono), {})[mono] = coeff
        return {k: LocalForm(self.theory, v) for k, v in groups.items()}

    def project_bidegree(self, p: int, q: int) -> "LocalForm":
        """The (vfd = p, hfd = q) component."""
        return self.filter(lambda m: monomial_bidegree(m) == (p, q))

    def bidegree_components(self) -> dict[tuple[int, int], "LocalForm"]:
        return self.split(monomial_bidegree)

    def horizontal_components(self) -> dict[int, "LocalForm"]:
        """Components by horizontal form degree."""
        return self.split(lambda m: monomial_bidegree(m)[1])

    def top(self) -> "LocalForm":
        """Component of top horizontal degree."""
        n = self.theory.dimension
        return self.filter(lambda m: monomial_bidegree(m)[1] == n)

    def below_top(self) -> "LocalForm":
        n = self.theory.dimension
        return self.filter(lambda m: monomial_bidegree(m)[1] < n)

    def zero_section_pullback(self) -> "LocalForm":
        """Pull back along the zero section: every jet and vertical generator goes to 0."""
        return self.filter(lambda m: all(g[0] in (BASE, HORIZONTAL) for g, _ in m))

    @property
    def is_base_form(self) -> bool:
        """True when the form lives on the base (no jets, no vertical generators)."""
        return all(g[0] in (BASE, HORIZONTAL) for m in self._terms for g, _ in m)

    def max_jet_order(self) -> int:
        return max(
            (sum(g[2]) for m in self._terms for g, _ in m if g[0] in (JET, VERTICAL)),
            default=0,
        )

    # Degrees

    def degree(self, name: str) -> Optional[int]:
        """A single degree function, checked for homogeneity; None for the zero form."""
        if name not in DEGREE_NAMES:
            raise ValueError(f"Unknown degree function: {name}")
        values = {getattr(monomial_degrees(self.theory, m), name) for m in self._terms}
        if not values:
            return None
        if len(values) > 1:
            raise InhomogeneousFormError(f"Form is inhomogeneous in {name}: {sorted(values)}")
        return values.pop()

    def is_homogeneous(self, name: str) -> bool:
        try:
            self.degree(name)
        except InhomogeneousFormError:
            return False
        return True

    def degrees(self) -> Degrees:
        """All eight degree functions of a form homogeneous in vfd, hfd and ghd."""
        if not self._terms:
            return Degrees.wildcard()
        found = {monomial_degrees(self.theory, m) for m in self._terms}
        if len(found) > 1:
            raise InhomogeneousFormError(
                f"Form is inhomogeneous: {len(found)} distinct degree profiles"
            )
        return found.pop()

    def __repr__(self) -> str:
        return f"LocalForm({format_form(self)})"

    def __str__(self) -> str:
        return format_form(self)


def graded_left_derivative(form: LocalForm, gen: Generator) -> LocalForm:
    """Left derivative with respect to a generator.

    Moves ``gen`` to the front with its Koszul sign and removes one factor, so
    that ``sum_g g * d/dg`` counts the generators of each term.
    """
    theory = form.theory
    gdeg = theory.generator_degree(gen)
    acc: dict[Monomial, Fraction] = {}
    for mono, coeff in form.terms.items():
        prefix_degree = 0
        for pos, (g, e) in enumerate(mono):
            if g == gen:
                sign = -1 if (gdeg * prefix_degree) % 2 else 1
                rest = mono[:pos] + (((g, e - 1),) if e > 1 else ()) + mono[pos + 1 :]
                acc[rest] = acc.get(rest, Fraction(0)) + sign * e * coeff
                break
            if g > gen:
                break
            prefix_degree += theory.generator_degree(g) * e
    return LocalForm(theory, acc)


def strip_volume(form: LocalForm) -> LocalForm:
    """Remove the trailing volume form from top-degree terms (others are dropped)."""
    vol = form.theory.volume_monomial
    k = len(vol)
    return LocalForm(
        form.theory,
        {m[:-k] if k else m: c for m, c in form.terms.items() if m[len(m) - k :] == vol},
    )


# Printing


def format_generator(theory: Theory, gen: Generator) -> str:
    kind, field, orders, coord = gen
    if kind == BASE:
        return theory.coordinates[coord]
    if kind == HORIZONTAL:
        return f"dx({theory.coordinates[coord]})"
    name = theory.fields[field].name
    if any(orders):
        if all(len(c) == 1 for c in theory.coordinates):
            letters = "".join(c * k for c, k in zip(theory.coordinates, orders))
            name = f"{name}_{{{letters}}}"
        else:
            for c, k in zip(theory.coordinates, orders):
                for _ in range(k):
                    name = f"d({name}, {c})"
    if kind == VERTICAL:
        return f"dV({name})"
    return name


def format_monomial(theory: Theory, mono: Monomial) -> str:
    parts = []
    for gen, exp in mono:
        text = format_generator(theory, gen)
        parts.append(f"{text}**{exp}" if exp > 1 else text)
    return " * ".join(parts)


def format_form(form: LocalForm) -> str:
    """Canonical text in the expression language of theory specifications."""
    if form.is_zero:
        return "0"
    out = []
    for i, (mono, coeff) in enumerate(form.items()):
        negative = coeff < 0
        magnitude = -coeff if negative else coeff
        body = format_monomial(form.theory, mono)
        if not body:
            text = str(magnitude)
        elif magnitude == 1:
            text = body
        else:
            text = f"{magnitude} * {body}"
        if i == 0:
            out.append(f"-{text}" if negative else text)
        else:
            out.append(f"- {text}" if negative else f"+ {text}")
    return " ".join(out)
