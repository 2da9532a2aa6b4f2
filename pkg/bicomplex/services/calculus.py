"""Differential operators of the variational bicomplex.

Total derivatives, the horizontal and vertical differentials, evolutionary
vector fields with their Cartan calculus, the interior Euler operator and
Euler-Lagrange extraction. Every operator is a graded derivation built on
:func:`apply_derivation`; signs follow the Koszul rule in total degree with
``dH = sum_i dx^i ^ D_i`` (dx written on the left).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Union

from bicomplex.exceptions import BidegreeError, JetOrderExceeded, TheoryError
from bicomplex.services.localforms import (
    BASE,
    JET,
    VERTICAL,
    Generator,
    LocalForm,
    Monomial,
    Theory,
    graded_left_derivative,
    monomial_bidegree,
    monomial_degrees,
    multiply_monomials,
)
from bicomplex.utils.metrics import track_time

logger = logging.getLogger(__name__)

GeneratorRule = Callable[[Generator], Optional[LocalForm]]


def apply_derivation(form: LocalForm, degree: int, rule: GeneratorRule) -> LocalForm:
    """Extend a rule on generators to a graded derivation of the given degree.

    ``rule(g)`` returns the image of a single generator (None for zero). The
    derivation passes every factor to its left with the sign
    ``(-1)^(degree * deg(prefix))``.

    Args:
        form: Form to differentiate
        degree: Total degree of the derivation
        rule: Image of each generator

    Returns:
        The derived form
    """
    theory = form.theory
    images: dict[Generator, Optional[LocalForm]] = {}
    acc: dict[Monomial, Fraction] = {}
    odd = degree % 2

    for mono, coeff in form.terms.items():
        prefix_degree = 0
        for pos, (gen, exp) in enumerate(mono):
            if gen not in images:
                images[gen] = rule(gen)
            image = images[gen]
            gdeg = theory.generator_degree(gen)
            if image is not None and not image.is_zero:
                sign = -1 if odd and prefix_degree % 2 else 1
                prefix = mono[:pos]
                if exp > 1:
                    prefix = prefix + ((gen, exp - 1),)
                suffix = mono[pos + 1 :]
                factor = coeff * sign * exp
                for img_mono, img_coeff in image.terms.items():
                    s1, left = multiply_monomials(theory, prefix, img_mono)
                    if not s1:
                        continue
                    s2, full = multiply_monomials(theory, left, suffix)
                    if not s2:
                        continue
                    acc[full] = acc.get(full, Fraction(0)) + factor * img_coeff * s1 * s2
            prefix_degree += gdeg * exp
    return LocalForm(theory, acc)


def _raise_order(
    theory: Theory, orders: tuple[int, ...], i: int, capped: bool = True
) -> tuple[int, ...]:
    raised = orders[:i] + (orders[i] + 1,) + orders[i + 1 :]
    if capped and sum(raised) > theory.jet_cap:
        raise JetOrderExceeded(
            f"Total derivative would reach jet order {sum(raised)} (cap {theory.jet_cap})"
        )
    return raised


def total_derivative(
    i: int, x: LocalForm, *, jets: bool = True, base: bool = True, capped: bool = True
) -> LocalForm:
    """The total derivative D_i, an even derivation.

    ``jets`` and ``base`` select the part acting on jet/vertical generators and
    the explicit coordinate dependence; both together give D_i. ``capped=False``
    skips the jet-order guard for internal basis bookkeeping.
    """
    theory = x.theory
    if not 0 <= i < theory.dimension:
        raise TheoryError(f"Coordinate index {i} out of range")

    def rule(gen: Generator) -> Optional[LocalForm]:
        kind, a, orders, coord = gen
        if kind in (JET, VERTICAL):
            if not jets:
                return None
            raised = _raise_order(theory, orders, i, capped)
            return LocalForm.generator(theory, (kind, a, raised, -1))
        if kind == BASE:
            return theory.one() if base and coord == i else None
        return None

    return apply_derivation(x, 0, rule)


def total_derivative_multi(orders: tuple[int, ...], x: LocalForm) -> LocalForm:
    """D_I for a multi-index I."""
    for i, k in enumerate(orders):
        for _ in range(k):
            x = total_derivative(i, x)
    return x


def dH(
    x: LocalForm, *, jets: bool = True, base: bool = True, capped: bool = True
) -> LocalForm:
    """Horizontal differential sum_i dx^i ^ D_i(x)."""
    theory = x.theory
    return LocalForm.sum(
        theory,
        (
            theory.dx(i).wedge(total_derivative(i, x, jets=jets, base=base, capped=capped))
            for i in range(theory.dimension)
        ),
    )


def dV(x: LocalForm) -> LocalForm:
    """Vertical differential: u^a_I -> dV u^a_I, an odd derivation."""
    theory = x.theory

    def rule(gen: Generator) -> Optional[LocalForm]:
        if gen[0] == JET:
            return LocalForm.generator(theory, (VERTICAL, gen[1], gen[2], -1))
        return None

    return apply_derivation(x, 1, rule)


def d_total(x: LocalForm) -> LocalForm:
    """d = dV + dH."""
    return dV(x) + dH(x)


@dataclass(frozen=True, eq=False)
class EvolutionaryField:
    """A local evolutionary vector field sum_a X^a d/du^a of fixed ghost degree.

    Components are forms of bidegree (0, 0); the prolongation D_I X^a is
    computed on demand and memoized per instance.
    """

    theory: Theory
    ghost: int
    components: tuple[LocalForm, ...]
    _prolongations: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.components) != self.theory.n_fields:
            raise TheoryError(
                f"Expected {self.theory.n_fields} components, got {len(self.components)}"
            )
        for a, comp in enumerate(self.components):
            if comp.is_zero:
                continue
            if comp.theory != self.theory:
                raise TheoryError("Field component belongs to a different theory")
            if any(monomial_bidegree(m) != (0, 0) for m in comp.terms):
                raise BidegreeError(
                    f"Component {self.theory.fields[a].name} must have bidegree (0, 0)"
                )
            expected = self.ghost + self.theory.ghost(a)
            if comp.degree("ghd") != expected:
                raise BidegreeError(
                    f"Component {self.theory.fields[a].name} has ghost degree "
                    f"{comp.degree('ghd')}, expected {expected}"
                )

    @classmethod
    def from_mapping(
        cls, theory: Theory, ghost: int, components: Mapping[Union[str, int], LocalForm]
    ) -> "EvolutionaryField":
        """Build a field from ``{field name or index: X^a}``; missing entries are zero."""
        comps = [theory.zero() for _ in theory.fields]
        for key, value in components.items():
            index = key if isinstance(key, int) else theory.field_index(key)
            comps[index] = value
        return cls(theory, ghost, tuple(comps))

    @classmethod
    def zero(cls, theory: Theory, ghost: int) -> "EvolutionaryField":
        return cls(theory, ghost, tuple(theory.zero() for _ in theory.fields))

    @classmethod
    def euler(cls, theory: Theory) -> "EvolutionaryField":
        """The graded Euler vector field sum_a ghd(u^a) u^a d/du^a."""
        comps = tuple(
            theory.jet(f.name).scale(f.ghost) for f in theory.fields
        )
        return cls(theory, 0, comps)

    @classmethod
    def radial(cls, theory: Theory) -> "EvolutionaryField":
        """The fiber-scaling field sum_a u^a d/du^a, taken with ghost degree 0."""
        return cls(theory, 0, tuple(theory.jet(f.name) for f in theory.fields))

    def component(self, a: Union[int, str]) -> LocalForm:
        index = a if isinstance(a, int) else self.theory.field_index(a)
        return self.components[index]

    def prolongation(self, a: int, orders: tuple[int, ...]) -> LocalForm:
        """D_I X^a."""
        key = (a, orders)
        if key not in self._prolongations:
            if not any(orders):
                value = self.components[a]
            else:
                i = next(j for j, k in enumerate(orders) if k)
                lower = orders[:i] + (orders[i] - 1,) + orders[i + 1 :]
                value = total_derivative(i, self.prolongation(a, lower))
            self._prolongations[key] = value
        return self._prolongations[key]

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.components)

    def __add__(self, other: "EvolutionaryField") -> "EvolutionaryField":
        if other.ghost != self.ghost and not other.is_zero and not self.is_zero:
            raise BidegreeError("Cannot add evolutionary fields of different ghost degree")
        ghost = self.ghost if not self.is_zero else other.ghost
        return EvolutionaryField(
            self.theory, ghost, tuple(x + y for x, y in zip(self.components, other.components))
        )

    def __neg__(self) -> "EvolutionaryField":
        return self.scale(-1)

    def __sub__(self, other: "EvolutionaryField") -> "EvolutionaryField":
        return self + (-other)

    def scale(self, factor: Union[int, Fraction]) -> "EvolutionaryField":
        return EvolutionaryField(
            self.theory, self.ghost, tuple(c.scale(factor) for c in self.components)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, EvolutionaryField):
            return NotImplemented
        if self.is_zero and other.is_zero:
            return True
        return self.ghost == other.ghost and self.components == other.components

    def __hash__(self) -> int:
        return hash((self.ghost, self.components))

    def __repr__(self) -> str:
        parts = ", ".join(
            f"{f.name} -> {c}" for f, c in zip(self.theory.fields, self.components) if c
        )
        return f"EvolutionaryField(ghost={self.ghost}, {{{parts}}})"


def interior(X: EvolutionaryField, x: LocalForm) -> LocalForm:
    """Prolonged contraction iota_X, a derivation of degree ghd(X) - 1."""

    def rule(gen: Generator) -> Optional[LocalForm]:
        if gen[0] == VERTICAL:
            return X.prolongation(gen[1], gen[2])
        return None

    return apply_derivation(x, X.ghost - 1, rule)


def lie_derivative(X: EvolutionaryField, x: LocalForm) -> LocalForm:
    """L_X = iota_X dV + (-1)^ghd(X) dV iota_X, a derivation of degree ghd(X)."""
    sign = -1 if X.ghost % 2 else 1

    def rule(gen: Generator) -> Optional[LocalForm]:
        if gen[0] == JET:
            return X.prolongation(gen[1], gen[2])
        if gen[0] == VERTICAL:
            return dV(X.prolongation(gen[1], gen[2])).scale(sign)
        return None

    return apply_derivation(x, X.ghost, rule)


def field_bracket(X: EvolutionaryField, Y: EvolutionaryField) -> EvolutionaryField:
    """Graded commutator [X, Y]^a = L_X Y^a - (-1)^(kl) L_Y X^a."""
    sign = -1 if (X.ghost * Y.ghost) % 2 else 1
    comps = tuple(
        lie_derivative(X, y) - lie_derivative(Y, x).scale(sign)
        for x, y in zip(X.components, Y.components)
    )
    return EvolutionaryField(X.theory, X.ghost + Y.ghost, comps)


def euler_action(x: LocalForm) -> LocalForm:
    """L_E: multiplies each term by its ghost degree."""
    theory = x.theory
    return LocalForm(
        theory, {m: c * monomial_degrees(theory, m).ghd for m, c in x.terms.items()}
    )


@track_time("interior_euler")
def interior_euler(x: LocalForm) -> LocalForm:
    """The interior Euler operator Pi onto source forms.

    Only the top horizontal component contributes; on it
    ``Pi x = (1/p) sum_a dV u^a ^ sum_I (-D)_I (d/d(dV u^a_I) x)``.

    Raises:
        BidegreeError: if a top-degree term has no vertical generator
    """
    theory = x.theory
    n = theory.dimension
    top = x.filter(lambda m: monomial_bidegree(m)[1] == n)
    if top.is_zero:
        return theory.zero()

    pieces = []
    for p, component in top.split(lambda m: monomial_bidegree(m)[0]).items():
        if p == 0:
            raise BidegreeError("Interior Euler operator is undefined on vertical degree 0")
        # vertical generators present in this component, grouped by field
        gens = sorted(
            {g for m in component.terms for g, _ in m if g[0] == VERTICAL}
        )
        for a in range(theory.n_fields):
            inner = LocalForm.sum(
                theory,
                (
                    total_derivative_multi(g[2], graded_left_derivative(component, g)).scale(
                        -1 if sum(g[2]) % 2 else 1
                    )
                    for g in gens
                    if g[1] == a
                ),
            )
            if inner:
                pieces.append(theory.dv(theory.fields[a].name).wedge(inner).scale(Fraction(1, p)))
    return LocalForm.sum(theory, pieces)


def euler_lagrange(L: LocalForm) -> LocalForm:
    """Exterior Euler operator Pi dV on a Lagrangian density.

    Raises:
        BidegreeError: unless L has bidegree (0, n)
    """
    n = L.theory.dimension
    if any(monomial_bidegree(m) != (0, n) for m in L.terms):
        raise BidegreeError("Euler-Lagrange operator expects a form of bidegree (0, n)")
    return interior_euler(dV(L))

