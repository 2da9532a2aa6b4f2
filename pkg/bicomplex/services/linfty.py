"""Symplectic developments, Hamiltonian brackets and the L-infinity tower.

Conventions (locked by the regression suite):

- A Hamiltonian pair (F, X_F) satisfies ``Pi iota_{X_F} omega = -Pi dV F``.
- With ``a = ped(F) - k`` and ``sigma = (-1)^(ab)``::

      {F,G}^S = -(-1)^a iota_{X_F} iota_{X_G} omega
      {F,G}^A = 1/2 ((-1)^a L_{X_F} G - sigma (-1)^b L_{X_G} F)
      {F,G}^B = 2 {F,G}^A - {F,G}^S

- Higher structure lives on the shift, where an element x of cone degree
  ``deg`` has degree ``|x| = deg - k - 1`` and every operation has degree one:
  ``l1 = D - L_Q``, ``l2(x, y) = (-1)^|x| {x, y}``, ``l3 = -H~_Q Jac``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Any, Callable, Optional, Sequence

from sympy import QQ
from sympy.polys.matrices import DomainMatrix
from sympy.utilities.iterables import multiset_partitions

from bicomplex.config import get_settings
from bicomplex.exceptions import (
    ArityError,
    BidegreeError,
    CompatibilityError,
    MaurerCartanError,
    MembershipError,
    NotHamiltonianError,
)
from bicomplex.services.calculus import (
    EvolutionaryField,
    dH,
    dV,
    field_bracket,
    interior,
    interior_euler,
    lie_derivative,
)
from bicomplex.services.homotopy import (
    ConeElement,
    Development,
    HamiltonianCone,
    functional_projector,
    include,
    is_local_functional,
    iterate_series,
    series_bound,
    vertical_homotopy,
    zero_cone,
)
from bicomplex.services.horizontal import horizontal_homotopy
from bicomplex.services.localforms import (
    VERTICAL,
    LocalForm,
    Theory,
    graded_left_derivative,
    monomial_bidegree,
    strip_volume,
)
from bicomplex.utils.metrics import track_time

logger = logging.getLogger(__name__)
settings = get_settings()

Homotopy = Callable[[LocalForm], LocalForm]


# Developments


def symplectic_anchor_residuals(omega: LocalForm, Q: EvolutionaryField) -> dict[str, LocalForm]:
    """Residuals of the preconditions for developing omega along Q."""
    return {
        "dV omega": dV(omega),
        "dH omega": dH(omega),
        "[Q, Q]": LocalForm.sum(omega.theory, field_bracket(Q, Q).components),
        "Pi L_Q omega": interior_euler(lie_derivative(Q, omega)) if omega else omega,
    }


@dataclass(frozen=True)
class SymplecticDevelopment:
    """omega• = sum_k (dV h_V h∇ L_Q)^k omega together with its field Q."""

    theory: Theory
    Q: EvolutionaryField
    anchor: LocalForm
    form: LocalForm
    k: int

    @property
    def development(self) -> Development:
        return Development.from_form(self.form)

    def certificates(self) -> dict[str, LocalForm]:
        """Closure residuals; both vanish for a certified development."""
        return {
            "dV omega•": dV(self.form),
            "(dH - L_Q) omega•": dH(self.form) - lie_derivative(self.Q, self.form),
        }

    @property
    def certified(self) -> bool:
        return all(not r for r in self.certificates().values())


@track_time("build_development")
def build_development(
    omega: LocalForm, Q: EvolutionaryField, homotopy: Optional[Homotopy] = None
) -> SymplecticDevelopment:
    """Extend a closed local symplectic form along a cohomological field.

    Args:
        omega: Anchor of bidegree (2, n), closed under dV and dH
        Q: Cohomological evolutionary field with Pi L_Q omega = 0
        homotopy: Horizontal homotopy to use, h∇ by default

    Returns:
        The development with dV omega• = 0 and (dH - L_Q) omega• = 0

    Raises:
        CompatibilityError: if a precondition fails
    """
    theory = omega.theory
    n = theory.dimension
    homotopy = homotopy or horizontal_homotopy
    if any(monomial_bidegree(m) != (2, n) for m in omega.terms):
        raise BidegreeError(f"Symplectic anchor must have bidegree (2, {n})")
    k = omega.degree("ghd")
    if k is None:
        raise CompatibilityError("Symplectic anchor is zero")
    for name, residual in symplectic_anchor_residuals(omega, Q).items():
        if residual:
            raise CompatibilityError(f"Precondition failed: {name} != 0", residual=residual)

    def step(x: LocalForm) -> LocalForm:
        return dV(vertical_homotopy(homotopy(lie_derivative(Q, x))))

    form = iterate_series(omega, step, series_bound(theory), "development")
    logger.debug(
        f"Development has {len(form)} terms in {len(form.horizontal_components())} degrees"
    )
    return SymplecticDevelopment(theory=theory, Q=Q, anchor=omega, form=form, k=k)


def alternative_horizontal_homotopy(x: LocalForm) -> LocalForm:
    """h∇ + [dH, psi] with psi = h∇ (x^1 ^ h∇(.)), another contracting homotopy.

    psi is even and lowers the horizontal degree by two, so the graded
    commutator ``dH psi - psi dH`` leaves the contract identities intact.
    """
    theory = x.theory
    coordinate = theory.coord(0)

    def psi(y: LocalForm) -> LocalForm:
        inner = horizontal_homotopy(y)
        if not inner:
            return inner
        return horizontal_homotopy(coordinate.wedge(inner))

    correction = dH(psi(x))
    dx = dH(x)
    if dx:
        correction = correction - psi(dx)
    return horizontal_homotopy(x) + correction


def perturbed_horizontal_homotopy_q(x: LocalForm, Q: EvolutionaryField) -> LocalForm:
    """h∇ sum_k (L_Q h∇)^k, the homotopy of the (dH - L_Q)-perturbed Anderson retract."""
    if not x:
        return x
    return iterate_series(
        horizontal_homotopy(x),
        lambda y: horizontal_homotopy(lie_derivative(Q, y)),
        series_bound(x.theory),
        "L_Q-perturbed horizontal homotopy",
    )


def development_difference(
    first: SymplecticDevelopment, second: SymplecticDevelopment
) -> LocalForm:
    """eta with second.form - first.form = (dH - L_Q) eta.

    Raises:
        CompatibilityError: if the developments do not share anchor and field
    """
    if first.anchor != second.anchor or first.Q != second.Q:
        raise CompatibilityError("Developments must share their anchor and field")
    difference = second.form - first.form
    return perturbed_horizontal_homotopy_q(difference, first.Q)


# Hamiltonian vector fields


def ultralocal_coefficients(omega: LocalForm) -> dict[tuple[int, int], Fraction]:
    """Constant coefficients c_ab of omega = sum c_ab dV u^a ^ dV u^b ^ vol.

    Raises:
        NotHamiltonianError: if omega is not ultralocal with constant coefficients
    """
    theory = omega.theory
    vol = theory.volume_monomial
    coefficients: dict[tuple[int, int], Fraction] = {}
    for mono, coeff in omega.terms.items():
        vertical = tuple(item for item in mono if item[0][0] == VERTICAL)
        rest = tuple(item for item in mono if item[0][0] != VERTICAL)
        ultralocal = (
            rest == vol
            and all(not any(g[2]) for g, _ in vertical)
            and sum(e for _, e in vertical) == 2
        )
        if not ultralocal:
            raise NotHamiltonianError(
                "Hamiltonian fields are resolved only for ultralocal constant symplectic forms"
            )
        fields = [g[1] for g, e in vertical for _ in range(e)]
        coefficients[(fields[0], fields[1])] = coeff
    return coefficients


class PairingMatrix:
    """The constant matrix N with (Pi iota_X omega)_b = sum_a N[b][a] X^a."""

    def __init__(self, omega: LocalForm):
        self.theory = omega.theory
        self.coefficients = ultralocal_coefficients(omega)
        self._inverses: dict[int, list[list[Fraction]]] = {}

    def matrix(self, ghost: int) -> list[list[Fraction]]:
        """N for a field of the given ghost degree."""
        theory = self.theory
        size = theory.n_fields
        N = [[Fraction(0)] * size for _ in range(size)]
        for (a, b), c in self.coefficients.items():
            x_a = ghost + theory.ghost(a)
            du_a = theory.ghost(a) + 1
            du_b = theory.ghost(b) + 1
            if a == b:
                N[a][a] += 2 * c
                continue
            N[b][a] += c * (-1) ** ((x_a * du_b) % 2)
            N[a][b] += c * (-1) ** (((ghost - 1) * du_a) % 2)
        return N

    def inverse(self, ghost: int) -> list[list[Fraction]]:
        parity = ghost % 2
        if parity not in self._inverses:
            rows = self.matrix(ghost)
            size = len(rows)
            dm = DomainMatrix(
                [[QQ(v.numerator, v.denominator) for v in row] for row in rows], (size, size), QQ
            )
            if dm.rank() < size:
                raise NotHamiltonianError("Symplectic pairing is degenerate")
            inv = dm.inv().to_Matrix()
            self._inverses[parity] = [
                [Fraction(int(inv[i, j].p), int(inv[i, j].q)) for j in range(size)]
                for i in range(size)
            ]
        return self._inverses[parity]


@dataclass(frozen=True)
class HamiltonianPair:
    """A body F with its Hamiltonian vector field."""

    F: LocalForm
    X: EvolutionaryField


class BracketCalculus:
    """Hamiltonian fields and brackets for one certified development.

    Hamiltonian fields are resolved by inverting the constant pairing; pairs
    for non-ultralocal forms can be registered explicitly.
    """

    def __init__(self, development: SymplecticDevelopment):
        self.development = development
        self.theory = development.theory
        self.k = development.k
        self.cone = HamiltonianCone(development.Q)
        self._pairing: Optional[PairingMatrix] = None
        self._pairing_error: Optional[NotHamiltonianError] = None
        try:
            self._pairing = PairingMatrix(development.anchor)
        except NotHamiltonianError as e:
            self._pairing_error = e
            logger.info(f"Hamiltonian fields must be supplied explicitly: {e}")
        self._fields: dict[LocalForm, EvolutionaryField] = {}
        self._components: dict[tuple[str, tuple[LocalForm, ...]], ConeElement] = {}

    def untwisted(self) -> "BracketCalculus":
        """The calculus of the same anchor with Q = 0."""
        zero = EvolutionaryField.zero(self.theory, 1)
        return BracketCalculus(build_development(self.development.anchor, zero))

    # Degrees

    def shifted_degree(self, c: ConeElement) -> int:
        """a = deg(c) - k, with 0 for the zero element."""
        deg = c.degree()
        return 0 if deg is None else deg - self.k

    # Hamiltonian fields

    def hamiltonian_residual(self, F: LocalForm, X: EvolutionaryField) -> LocalForm:
        """Pi iota_X omega• + Pi dV F."""
        return interior_euler(interior(X, self.development.form)) + interior_euler(dV(F))

    def register(self, F: LocalForm, X: EvolutionaryField) -> HamiltonianPair:
        """Record a user-supplied Hamiltonian pair after checking it."""
        residual = self.hamiltonian_residual(F, X)
        if residual:
            raise NotHamiltonianError(f"Supplied field is not Hamiltonian for {F}: {residual}")
        self._fields[F.top()] = X
        return HamiltonianPair(F, X)

    @track_time("hamiltonian_vector_field")
    def hamiltonian_vector_field(self, F: LocalForm) -> EvolutionaryField:
        """X_F with Pi iota_{X_F} omega• = -Pi dV F.

        Raises:
            NotHamiltonianError: if no field can be resolved
        """
        theory = self.theory
        top = F.top()
        if top in self._fields:
            return self._fields[top]
        if not top:
            return EvolutionaryField.zero(theory, 0)
        source = interior_euler(dV(top))
        ghost = top.degree("ped") - self.k
        if not source:
            field_ = EvolutionaryField.zero(theory, ghost)
            self._fields[top] = field_
            return field_
        if self._pairing is None:
            raise NotHamiltonianError(str(self._pairing_error))

        rhs = [
            strip_volume(graded_left_derivative(source, (VERTICAL, b, theory.orders(), -1)))
            for b in range(theory.n_fields)
        ]
        inverse = self._pairing.inverse(ghost)
        comps = tuple(
            LocalForm.sum(theory, (rhs[b].scale(-inverse[a][b]) for b in range(theory.n_fields)))
            for a in range(theory.n_fields)
        )
        field_ = EvolutionaryField(theory, ghost, comps)
        residual = self.hamiltonian_residual(F, field_)
        if residual:
            raise NotHamiltonianError(f"Resolved field leaves residual {residual}")
        self._fields[top] = field_
        return field_

    def pair(self, c: ConeElement) -> HamiltonianPair:
        return HamiltonianPair(c.body, self.hamiltonian_vector_field(c.body))

    # Brackets

    def _signs(self, c1: ConeElement, c2: ConeElement) -> tuple[int, int, int]:
        a = self.shifted_degree(c1)
        b = self.shifted_degree(c2)
        return a, b, (-1) ** ((a * b) % 2)

    def bracket_s(self, c1: ConeElement, c2: ConeElement) -> ConeElement:
        """{F,G}^S = -(-1)^a iota_{X_F} iota_{X_G} omega•."""
        a, _, _ = self._signs(c1, c2)
        X = self.hamiltonian_vector_field(c1.body)
        Y = self.hamiltonian_vector_field(c2.body)
        if X.is_zero or Y.is_zero:
            return zero_cone(self.theory)
        body = interior(X, interior(Y, self.development.form))
        return include(body.scale(-((-1) ** (a % 2))))

    def bracket_a(self, c1: ConeElement, c2: ConeElement) -> ConeElement:
        """{F,G}^A = 1/2 ((-1)^a L_{X_F} G - sigma (-1)^b L_{X_G} F)."""
        a, b, sigma = self._signs(c1, c2)
        X = self.hamiltonian_vector_field(c1.body)
        Y = self.hamiltonian_vector_field(c2.body)
        first = lie_derivative(X, c2.body).scale((-1) ** (a % 2))
        second = lie_derivative(Y, c1.body).scale(sigma * (-1) ** (b % 2))
        return include((first - second).scale(Fraction(1, 2)))

    def bracket_b(self, c1: ConeElement, c2: ConeElement) -> ConeElement:
        """{F,G}^B = 2 {F,G}^A - {F,G}^S."""
        return self.bracket_a(c1, c2).scale(2) - self.bracket_s(c1, c2)

    def bracket(self, kind: str, c1: ConeElement, c2: ConeElement) -> ConeElement:
        brackets = {"S": self.bracket_s, "A": self.bracket_a, "B": self.bracket_b}
        try:
            return brackets[kind](c1, c2)
        except KeyError:
            raise ValueError(f"Unknown bracket: {kind}") from None

    def sigma(self, c1: ConeElement, c2: ConeElement) -> int:
        return self._signs(c1, c2)[2]

    # Shifted structure

    def cone_degree(self, c: ConeElement) -> int:
        """Degree on the shift: deg(c) - k - 1."""
        return self.shifted_degree(c) - 1

    def lambda2(self, kind: str, c1: ConeElement, c2: ConeElement) -> ConeElement:
        """Symmetric two-bracket on the shift."""
        sign = (-1) ** (self.cone_degree(c1) % 2)
        return self.bracket(kind, c1, c2).scale(sign)

    def jacobiator_sym(
        self, kind: str, x: ConeElement, y: ConeElement, z: ConeElement
    ) -> ConeElement:
        """Symmetric Jacobiator of the shifted two-bracket."""
        dx, dy, dz = (self.cone_degree(c) for c in (x, y, z))
        l2 = self.lambda2
        return (
            l2(kind, l2(kind, x, y), z)
            + l2(kind, l2(kind, x, z), y).scale((-1) ** ((dy * dz) % 2))
            + l2(kind, l2(kind, y, z), x).scale((-1) ** ((dx * (dy + dz)) % 2))
        )

    def jacobiator(self, kind: str, x: ConeElement, y: ConeElement, z: ConeElement) -> ConeElement:
        """Graded Jacobiator of {.,.}^kind in the skew convention."""
        sign = (-1) ** ((self.shifted_degree(y) + 1) % 2)
        return self.jacobiator_sym(kind, x, y, z).scale(sign)

    def lambda3(self, x: ConeElement, y: ConeElement, z: ConeElement) -> ConeElement:
        """Three-bracket of the S-tower on the shift: -H~_Q Jac^sym."""
        return -self.cone.h_tilde(self.jacobiator_sym("S", x, y, z))

    def three_bracket_s(self, x: ConeElement, y: ConeElement, z: ConeElement) -> ConeElement:
        """{x, y, z}^S = -H~_Q Jac_S(x, y, z)."""
        return -self.cone.h_tilde(self.jacobiator("S", x, y, z))

    def s_tower(self) -> "LInfinityStructure":
        """The L-infinity structure (D - L_Q, {,}^S, {,,}^S) on the shifted cone."""
        return LInfinityStructure(
            name="S-tower",
            degree=self.cone_degree,
            zero=lambda: zero_cone(self.theory),
            brackets={
                1: self.cone.differential,
                2: lambda x, y: self.lambda2("S", x, y),
                3: self.lambda3,
            },
        )

    def b_structure(self) -> "LInfinityStructure":
        """The dg Lie structure (D - L_Q, {,}^B) on the shifted cone."""
        return LInfinityStructure(
            name="B-structure",
            degree=self.cone_degree,
            zero=lambda: zero_cone(self.theory),
            brackets={
                1: self.cone.differential,
                2: lambda x, y: self.lambda2("B", x, y),
            },
        )

    # Local functionals

    def ham_degree(self, x: LocalForm) -> int:
        deg = x.degree("ped")
        return 0 if deg is None else deg - self.k - 1

    def bracket_ham(self, x: LocalForm, y: LocalForm) -> LocalForm:
        """{x, y}_ham = P {i x, i y}^S on local functionals.

        Raises:
            MembershipError: if an argument is not a local functional
        """
        for arg in (x, y):
            if arg and not is_local_functional(arg):
                raise MembershipError(f"Not a local functional: {arg}")
        return functional_projector(self.bracket_s(include(x), include(y)))

    def d_ham(self, x: LocalForm) -> LocalForm:
        return self.cone.d_ham(x)

    def ham_structure(self) -> "LInfinityStructure":
        """The dgL[k]a on local functionals, on the shift."""

        def lambda2(x: LocalForm, y: LocalForm) -> LocalForm:
            return self.bracket_ham(x, y).scale((-1) ** (self.ham_degree(x) % 2))

        return LInfinityStructure(
            name="F_ham",
            degree=self.ham_degree,
            zero=self.theory.zero,
            brackets={1: self.d_ham, 2: lambda2},
        )

    # Quasi-inverse

    def _tower(self, kind: str) -> "LInfinityStructure":
        if kind == "S":
            return self.s_tower()
        if kind == "B":
            return self.b_structure()
        raise ValueError(f"Unknown structure: {kind}")

    def quasi_inverse(self, arity: int, *args: LocalForm, kind: str = "S") -> ConeElement:
        """Components of the L-infinity quasi-inverse of the projector.

        Arity one is the perturbed inclusion; above it
        ``I_m = -H~_Q L_m(I)``, where ``L_m(I)`` collects the target brackets
        of lower components minus the components applied to {,}_ham.

        Args:
            arity: Number of arguments, between 1 and n + 1
            args: Local functionals
            kind: "S" for the S-tower, "B" for the B-structure

        Raises:
            ArityError: on a wrong number of arguments or an arity above n + 1
        """
        if arity != len(args):
            raise ArityError(f"Expected {arity} arguments, got {len(args)}")
        limit = self.theory.dimension + 1
        if not 1 <= arity <= limit:
            raise ArityError(f"Quasi-inverse components exist for arity 1..{limit}")
        if arity == 1:
            return self.cone.i_tilde(args[0])
        key = (kind, args)
        if key not in self._components:
            self._components[key] = -self.cone.h_tilde(self._morphism_defect(list(args), kind))
        return self._components[key]

    def _morphism_defect(self, xs: list[LocalForm], kind: str) -> ConeElement:
        """L_m(I): sum over partitions of l_j(I(B_1), ..., I(B_j)) minus I(l2_ham, ...)."""
        ham = self.ham_structure()
        tower = self._tower(kind)
        m = len(xs)
        total = zero_cone(self.theory)
        for blocks in multiset_partitions(list(range(m))):
            op = tower.brackets.get(len(blocks))
            if len(blocks) < 2 or op is None:
                continue
            images = [self.quasi_inverse(len(b), *(xs[p] for p in b), kind=kind) for b in blocks]
            if not all(images):
                continue
            order = [p for b in blocks for p in b]
            total = total + op(*images).scale(ham.koszul_sign(xs, order))
        for a, b in itertools.combinations(range(m), 2):
            inner = ham.bracket(xs[a], xs[b])
            if not inner:
                continue
            rest = [p for p in range(m) if p not in (a, b)]
            image = self.quasi_inverse(m - 1, inner, *(xs[p] for p in rest), kind=kind)
            total = total - image.scale(ham.koszul_sign(xs, [a, b, *rest]))
        return total

    def morphism_residual(self, *xs: LocalForm, kind: str = "S") -> ConeElement:
        """The L-infinity morphism equation of the quasi-inverse at arity len(xs)."""
        ham = self.ham_structure()
        tower = self._tower(kind)
        m = len(xs)
        total = self._morphism_defect(list(xs), kind) + tower.bracket(
            self.quasi_inverse(m, *xs, kind=kind)
        )
        for i, x in enumerate(xs):
            dx = ham.bracket(x)
            if not dx:
                continue
            sign = (-1) ** (sum(self.ham_degree(y) for y in xs[:i]) % 2)
            moved = self.quasi_inverse(m, *xs[:i], dx, *xs[i + 1 :], kind=kind)
            total = total - moved.scale(sign)
        return total

    def push_mc(self, ell: LocalForm, kind: str = "S") -> ConeElement:
        """I_MC(l) = sum_m I_m(l, ..., l) / m!, through arity n + 1.

        At arity two this is ``i~(l) - 1/2 H~_Q {i~(l), i~(l)}^S`` once l is
        Maurer-Cartan among local functionals.
        """
        total = zero_cone(self.theory)
        for m in range(1, self.theory.dimension + 2):
            component = self.quasi_inverse(m, *([ell] * m), kind=kind)
            total = total + component.scale(Fraction(1, factorial(m)))
        return total


@dataclass
class LInfinityStructure:
    """Multi-brackets of degree one on a graded space (symmetric convention)."""

    name: str
    degree: Callable[[Any], int]
    zero: Callable[[], Any]
    brackets: dict[int, Callable[..., Any]] = field(default_factory=dict)

    @property
    def max_arity(self) -> int:
        return max(self.brackets, default=0)

    def bracket(self, *args: Any) -> Any:
        op = self.brackets.get(len(args))
        if op is None:
            return self.zero()
        return op(*args)

    def mc_residual(self, a: Any) -> Any:
        """sum_n l_n(a, ..., a) / n!."""
        total = self.zero()
        for n in sorted(self.brackets):
            total = total + self.brackets[n](*([a] * n)).scale(Fraction(1, factorial(n)))
        return total

    def koszul_sign(self, elements: Sequence[Any], order: Sequence[int]) -> int:
        """Koszul sign of permuting ``elements`` into ``order``."""
        degrees = [self.degree(x) for x in elements]
        sign = 1
        for p, q in itertools.combinations(range(len(order)), 2):
            if order[p] > order[q] and (degrees[order[p]] * degrees[order[q]]) % 2:
                sign = -sign
        return sign

    def jacobi(self, elements: Sequence[Any]) -> Any:
        """Generalized Jacobi expression at arity len(elements), summed over unshuffles."""
        m = len(elements)
        if not 1 <= m <= settings.max_arity:
            raise ArityError(f"Arity {m} outside 1..{settings.max_arity}")
        total = self.zero()
        for i in range(1, m + 1):
            j = m + 1 - i
            if i not in self.brackets or j not in self.brackets:
                continue
            for chosen in itertools.combinations(range(m), i):
                rest = [p for p in range(m) if p not in chosen]
                order = list(chosen) + rest
                inner = self.brackets[i](*(elements[p] for p in chosen))
                if not inner:
                    continue
                outer = self.brackets[j](inner, *(elements[p] for p in rest))
                total = total + outer.scale(self.koszul_sign(elements, order))
        return total

    def twist(self, a: Any) -> "LInfinityStructure":
        """l^a_n(x...) = sum_k l_{n+k}(a^k, x...) / k!.

        Raises:
            MaurerCartanError: if a does not solve the Maurer-Cartan equation
        """
        residual = self.mc_residual(a)
        if residual:
            raise MaurerCartanError(
                f"Cannot twist {self.name} by a non Maurer-Cartan element", residual
            )
        top = self.max_arity

        def twisted(n: int) -> Callable[..., Any]:
            def op(*args: Any) -> Any:
                total = self.zero()
                for extra in range(0, top - n + 1):
                    if n + extra not in self.brackets:
                        continue
                    value = self.brackets[n + extra](*([a] * extra), *args)
                    total = total + value.scale(Fraction(1, factorial(extra)))
                return total

            return op

        return LInfinityStructure(
            name=f"{self.name} twisted",
            degree=self.degree,
            zero=self.zero,
            brackets={n: twisted(n) for n in range(1, top + 1)},
        )

