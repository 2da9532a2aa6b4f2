"""Homotopy operators and retracts of the bicomplex.

Covers the vertical homotopy h_V, the horizontal homotopy h∇ (see
:mod:`bicomplex.services.horizontal`) and its dV-perturbation, the horizontal
cone with its maps I_V, P_V and H, the projector onto local functionals, and
the Q-perturbed cone operators.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

from bicomplex.config import get_settings
from bicomplex.exceptions import (
    BidegreeError,
    CompatibilityError,
    InhomogeneousFormError,
    MembershipError,
    NilpotencyError,
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
from bicomplex.services.horizontal import horizontal_homotopy
from bicomplex.services.localforms import (
    JET,
    VERTICAL,
    LocalForm,
    Theory,
    monomial_bidegree,
)
from bicomplex.utils.metrics import track_time

logger = logging.getLogger(__name__)
settings = get_settings()


def fiber_weight(mono) -> int:
    """Number of jet and vertical generators, counted with exponents."""
    return sum(e for g, e in mono if g[0] in (JET, VERTICAL))


def vertical_homotopy(x: LocalForm) -> LocalForm:
    """h_V: iota_R / weight on each term, R the fiber-radial field.

    Satisfies dV h_V + h_V dV + p*0* = id, h_V^2 = 0 and dH h_V + h_V dH = 0.
    """
    theory = x.theory
    radial = EvolutionaryField.radial(theory)
    acc = []
    for mono, coeff in x.terms.items():
        w = fiber_weight(mono)
        if w == 0 or monomial_bidegree(mono)[0] == 0:
            continue
        acc.append(interior(radial, LocalForm.from_monomial(theory, mono, coeff / w)))
    return LocalForm.sum(theory, acc)


def iterate_series(
    start: LocalForm,
    step: Callable[[LocalForm], LocalForm],
    bound: int,
    name: str,
) -> LocalForm:
    """Sum ``start + step(start) + step(step(start)) + ...`` until a term vanishes.

    Raises:
        NilpotencyError: if more than ``bound`` nonzero terms appear
    """
    total = start.theory.zero()
    term = start
    count = 0
    while term:
        count += 1
        if count > bound:
            raise NilpotencyError(f"{name} series did not terminate within {bound} terms")
        total = total + term
        term = step(term)
    return total


def series_bound(theory: Theory) -> int:
    """Degree bound for series whose every step lowers the horizontal degree."""
    return theory.dimension + 1 + settings.nilpotency_slack


def perturbed_horizontal_homotopy(x: LocalForm) -> LocalForm:
    """h̃∇ = h∇ sum_k (-dV h∇)^k, the homotopy of the d-perturbed Anderson retract."""
    if x.is_zero:
        return x
    return iterate_series(
        horizontal_homotopy(x),
        lambda y: horizontal_homotopy(-dV(y)),
        series_bound(x.theory),
        "dV-perturbed horizontal homotopy",
    )


def source_differential(x: LocalForm) -> LocalForm:
    """Pi dV I, the perturbed differential on source forms."""
    return interior_euler(dV(x))


@dataclass(frozen=True)
class Development:
    """Components alpha^k of a horizontally inhomogeneous form, keyed by hcd.

    All components share one partial effective degree.
    """

    theory: Theory
    components: dict[int, LocalForm]

    @classmethod
    def from_form(cls, x: LocalForm) -> "Development":
        n = x.theory.dimension
        parts = {n - hfd: comp for hfd, comp in x.horizontal_components().items()}
        dev = cls(x.theory, parts)
        dev.ped()
        return dev

    def ped(self) -> Optional[int]:
        values = {c.degree("ped") for c in self.components.values() if c}
        values.discard(None)
        if len(values) > 1:
            raise InhomogeneousFormError(
                f"Development components have distinct ped values {sorted(values)}"
            )
        return values.pop() if values else None

    @property
    def anchor(self) -> LocalForm:
        return self.components.get(0, self.theory.zero())

    def component(self, k: int) -> LocalForm:
        return self.components.get(k, self.theory.zero())

    def to_form(self) -> LocalForm:
        return LocalForm.sum(self.theory, self.components.values())


@dataclass(frozen=True)
class ConeElement:
    """An element (alpha, F) of the horizontal cone Omega(M)[1] + Omega_H."""

    base: LocalForm
    body: LocalForm

    def __post_init__(self) -> None:
        if not self.base.is_base_form:
            raise BidegreeError("Cone base slot must be a form on the base")
        if any(monomial_bidegree(m)[0] for m in self.body.terms):
            raise BidegreeError("Cone body must have vertical degree 0")

    @classmethod
    def of(cls, body: LocalForm, base: Optional[LocalForm] = None) -> "ConeElement":
        """The element (base, body); the base slot defaults to zero."""
        return cls(base if base is not None else body.theory.zero(), body)

    @property
    def theory(self) -> Theory:
        return self.body.theory

    @property
    def is_zero(self) -> bool:
        return self.base.is_zero and self.body.is_zero

    def __bool__(self) -> bool:
        return not self.is_zero

    def __add__(self, other: "ConeElement") -> "ConeElement":
        return ConeElement(self.base + other.base, self.body + other.body)

    def __sub__(self, other: "ConeElement") -> "ConeElement":
        return ConeElement(self.base - other.base, self.body - other.body)

    def __neg__(self) -> "ConeElement":
        return ConeElement(-self.base, -self.body)

    def scale(self, factor: Union[int, Fraction]) -> "ConeElement":
        return ConeElement(self.base.scale(factor), self.body.scale(factor))

    def degree(self) -> Optional[int]:
        """Cone degree: ped of the body, or ped of the base minus one."""
        if self.body:
            return self.body.degree("ped")
        if self.base:
            return self.base.degree("ped") - 1
        return None

    def __str__(self) -> str:
        return f"({self.base}, {self.body})"


def zero_cone(theory: Theory) -> ConeElement:
    return ConeElement(theory.zero(), theory.zero())


def cone_differential(c: ConeElement) -> ConeElement:
    """D(alpha, F) = (-d alpha, dH F + p* alpha)."""
    return ConeElement(-dH(c.base), dH(c.body) + c.base)


def cone_lie(Q: EvolutionaryField, c: ConeElement) -> ConeElement:
    """L_Q on the cone: (0, L_Q F)."""
    return ConeElement(c.theory.zero(), lie_derivative(Q, c.body))


def iv(c: ConeElement) -> LocalForm:
    """I_V(alpha, F) = dV F."""
    return dV(c.body)


def pv(x: LocalForm) -> ConeElement:
    """P_V(x) = (0, h_V of the vertical-degree-one part of x)."""
    theory = x.theory
    first = x.filter(lambda m: monomial_bidegree(m)[0] == 1)
    return ConeElement(theory.zero(), vertical_homotopy(first))


def zero_section_homotopy(c: ConeElement) -> ConeElement:
    """H_{0*}(alpha, F) = (0* F, 0)."""
    return ConeElement(c.body.zero_section_pullback(), c.theory.zero())


@track_time("cone_homotopy")
def cone_homotopy(c: ConeElement) -> ConeElement:
    """H = H_{0*} - P_V h̃∇ I_V, i.e. (0* F, -h_V h∇ dV F)."""
    theory = c.theory
    v = dV(c.body)
    body = -vertical_homotopy(horizontal_homotopy(v)) if v else theory.zero()
    return ConeElement(c.body.zero_section_pullback(), body)


def functional_projector(c: ConeElement) -> LocalForm:
    """The projector onto local functionals: h_V Pi dV F."""
    return vertical_homotopy(interior_euler(dV(c.body)))


def include(x: LocalForm) -> ConeElement:
    """i(x) = (0, x)."""
    return ConeElement(x.theory.zero(), x)


def is_local_functional(x: LocalForm) -> bool:
    """Membership in the image of the projector."""
    if any(monomial_bidegree(m) != (0, x.theory.dimension) for m in x.terms):
        return False
    return functional_projector(include(x)) == x


def require_functional(x: LocalForm) -> None:
    if not is_local_functional(x):
        raise MembershipError(f"Not a local functional: {x}")


class HamiltonianCone:
    """Cone operators perturbed by -L_Q.

    ``h_tilde = H sum_k (L_Q H)^k``, ``i_tilde = sum_k (H L_Q)^k i`` and
    ``d_ham = -P L_Q i``. Cohomological Q is checked once at construction.
    """

    def __init__(self, Q: EvolutionaryField):
        self.Q = Q
        self.theory = Q.theory
        square = field_bracket(Q, Q)
        if not square.is_zero:
            raise CompatibilityError("Q is not cohomological: [Q, Q] != 0", residual=square)
        self.bound = series_bound(self.theory)

    def _series(self, start: ConeElement, step: Callable[[ConeElement], ConeElement], name: str):
        total = zero_cone(self.theory)
        term = start
        count = 0
        while term:
            count += 1
            if count > self.bound:
                raise NilpotencyError(f"{name} series did not terminate within {self.bound} terms")
            total = total + term
            term = step(term)
        return total

    def differential(self, c: ConeElement) -> ConeElement:
        """D - L_Q."""
        return cone_differential(c) - cone_lie(self.Q, c)

    def h_tilde(self, c: ConeElement) -> ConeElement:
        return self._series(
            cone_homotopy(c),
            lambda y: cone_homotopy(cone_lie(self.Q, y)),
            "perturbed cone homotopy",
        )

    def i_tilde(self, x: LocalForm) -> ConeElement:
        return self._series(
            include(x), lambda y: cone_homotopy(cone_lie(self.Q, y)), "perturbed inclusion"
        )

    def d_ham(self, x: LocalForm) -> LocalForm:
        return -functional_projector(cone_lie(self.Q, include(x)))

    def projector(self, c: ConeElement) -> LocalForm:
        """The perturbed projector, equal to the unperturbed one since P H = 0."""
        return functional_projector(c)

