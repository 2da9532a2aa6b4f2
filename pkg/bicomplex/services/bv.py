"""Hamiltonian triples and the BV layer.

A Hamiltonian triple (L•, Q, θ•) over a certified development ω• satisfies

    iota_Q ω• = dV L• + dH θ•.

The canonical triple is θ• = h_V ω•, L• = h_V(iota_Q ω• - dH θ•). Every
construction here returns data together with the residuals that certify it;
residuals are exact local forms and vanish identically when a law holds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from bicomplex.exceptions import BidegreeError, CompatibilityError, NotHamiltonianError
from bicomplex.models.report import CheckResult
from bicomplex.services.calculus import (
    EvolutionaryField,
    d_total,
    dH,
    dV,
    euler_action,
    field_bracket,
    interior,
    interior_euler,
    lie_derivative,
)
from bicomplex.services.homotopy import (
    ConeElement,
    functional_projector,
    include,
    iterate_series,
    pv,
    series_bound,
    vertical_homotopy,
)
from bicomplex.services.horizontal import horizontal_homotopy
from bicomplex.services.linfty import (
    BracketCalculus,
    PairingMatrix,
    SymplecticDevelopment,
    build_development,
    perturbed_horizontal_homotopy_q,
)
from bicomplex.services.localforms import LocalForm, Theory, monomial_bidegree
from bicomplex.services.reporting import Checker
from bicomplex.utils.metrics import track_time

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TheorySpec:
    """A resolved theory: symplectic form, cohomological field and optional presentation.

    ``pairing_omega`` is the form built from a stated pairing matrix; when both
    it and ``omega`` were given they must agree.
    """

    name: str
    theory: Theory
    omega: LocalForm
    Q: EvolutionaryField
    lagrangian: Optional[LocalForm] = None
    theta: Optional[LocalForm] = None
    pairing_omega: Optional[LocalForm] = None

    @property
    def k(self) -> Optional[int]:
        return self.omega.degree("ghd")

    @property
    def lax(self) -> bool:
        """User-supplied presentations are verified rather than constructed."""
        return self.lagrangian is not None


def _vertical_degrees(x: LocalForm) -> set[int]:
    return {monomial_bidegree(m)[0] for m in x.terms}


def zero_section_components(Q: EvolutionaryField) -> dict[str, LocalForm]:
    """0* Q^a per field."""
    return {
        f"0*Q^{f.name}": comp.zero_section_pullback()
        for f, comp in zip(Q.theory.fields, Q.components)
    }


def check_compatibility(spec: TheorySpec, checker: Checker) -> list[CheckResult]:
    """Gate every downstream operation on the structural axioms of the theory.

    Returns:
        The results added to ``checker``
    """
    start = len(checker.results)
    theory, omega, Q = spec.theory, spec.omega, spec.Q
    n = theory.dimension

    checker.check(
        "omega bidegree",
        lambda: omega.filter(lambda m: monomial_bidegree(m) != (2, n)),
        message=f"omega has bidegree (2, {n})",
    )
    checker.check(
        "ghost bookkeeping",
        lambda: {
            "omega ghost degree": omega.is_zero or not omega.is_homogeneous("ghd"),
            "k = -1": spec.k != -1,
            "ghd(Q) = 1": Q.ghost != 1,
        },
        details={"k": spec.k, "ghd(Q)": Q.ghost},
    )
    checker.check("dV omega", lambda: dV(omega))
    checker.check("dH omega", lambda: dH(omega))
    checker.check(
        "[Q, Q]",
        lambda: {
            f"[Q,Q]^{f.name}": comp
            for f, comp in zip(theory.fields, field_bracket(Q, Q).components)
        },
    )
    checker.check("Pi L_Q omega", lambda: interior_euler(lie_derivative(Q, omega)))
    checker.check("Q on the zero section", lambda: zero_section_components(Q))

    try:
        pairing = PairingMatrix(omega)
    except NotHamiltonianError as e:
        checker.skip("constant pairing", str(e))
    else:

        def invertible() -> bool:
            pairing.inverse(0)
            pairing.inverse(1)
            return False

        checker.check("constant pairing", invertible, message="pairing is invertible")

    if spec.pairing_omega is not None:
        checker.check("pairing agrees with omega", lambda: spec.pairing_omega - omega)
    return checker.results[start:]


def require_compatible(spec: TheorySpec) -> None:
    """Raise on the first failing compatibility check.

    Raises:
        CompatibilityError: carrying the failing check's residual
    """
    checker = Checker("check", spec.name)
    check_compatibility(spec, checker)
    failure = checker.report().first_failure()
    if failure is not None:
        raise CompatibilityError(
            f"Compatibility check failed: {failure.name} {failure.message}".rstrip(),
            residual=failure.residual,
        )


def develop(spec: TheorySpec) -> SymplecticDevelopment:
    return build_development(spec.omega, spec.Q)


# Triples


@dataclass(frozen=True)
class HamiltonianTriple:
    """(L•, Q, θ•) over the development ``ambient``."""

    L: LocalForm
    Q: EvolutionaryField
    theta: LocalForm
    ambient: SymplecticDevelopment

    def __post_init__(self) -> None:
        if _vertical_degrees(self.L) - {0}:
            raise BidegreeError("Triple Lagrangian must have vertical degree 0")
        if _vertical_degrees(self.theta) - {1}:
            raise BidegreeError("Triple potential must have vertical degree 1")

    @property
    def theory(self) -> Theory:
        return self.ambient.theory

    @property
    def omega(self) -> LocalForm:
        return self.ambient.form

    def residual(self) -> LocalForm:
        """iota_Q ω• - dV L• - dH θ•."""
        return interior(self.Q, self.omega) - dV(self.L) - dH(self.theta)

    @property
    def certified(self) -> bool:
        return self.residual().is_zero

    def noether(self) -> LocalForm:
        """Δ• = L• - iota_Q θ•."""
        return self.L - interior(self.Q, self.theta)

    def total(self) -> LocalForm:
        """𝕃• = L• + L_E Δ•."""
        return self.L + euler_action(self.noether())


@track_time("canonical_triple")
def canonical_triple(development: SymplecticDevelopment) -> HamiltonianTriple:
    """θ• = h_V ω•, L• = h_V(iota_Q ω• - dH θ•).

    Raises:
        CompatibilityError: if the development or the resulting triple is not certified
    """
    if not development.certified:
        raise CompatibilityError("Development is not certified")
    Q, form = development.Q, development.form
    theta = vertical_homotopy(form)
    L = vertical_homotopy(interior(Q, form) - dH(theta))
    triple = HamiltonianTriple(L=L, Q=Q, theta=theta, ambient=development)
    residual = triple.residual()
    if residual:
        raise CompatibilityError("Canonical triple violates the triple equation", residual)
    logger.debug(f"Canonical Lagrangian has {len(L)} terms, potential {len(theta)} terms")
    return triple


def lax_triple(
    development: SymplecticDevelopment, L: LocalForm, theta: Optional[LocalForm] = None
) -> HamiltonianTriple:
    """A user-supplied presentation; certification is left to the caller.

    The potential defaults to the canonical h_V ω•.
    """
    if theta is None:
        theta = vertical_homotopy(development.form)
    return HamiltonianTriple(L=L, Q=development.Q, theta=theta, ambient=development)


def triple_for(spec: TheorySpec, development: SymplecticDevelopment) -> HamiltonianTriple:
    if spec.lax:
        return lax_triple(development, spec.lagrangian, spec.theta)
    return canonical_triple(development)


def triple_checks(t: HamiltonianTriple, checker: Checker) -> list[CheckResult]:
    """The triple equation and the closure of ω• it encodes."""
    start = len(checker.results)
    checker.check("triple equation", t.residual)
    checker.check(
        "closure from triple",
        lambda: {
            "dV theta - omega•": dV(t.theta) - t.omega,
            "(dH - L_Q) dV theta": dH(dV(t.theta)) - lie_derivative(t.Q, dV(t.theta)),
        },
    )
    checker.check(
        "potential anchor",
        lambda: t.theta.top() - vertical_homotopy(t.ambient.anchor),
        message="theta^0 = h_V omega",
    )
    return checker.results[start:]


def exp_interior(Q: EvolutionaryField, x: LocalForm, sign: int = 1) -> LocalForm:
    """e^{sign iota_Q} x = sum_m (sign iota_Q)^m x / m!.

    Finite, since iota_Q lowers the vertical degree.
    """
    total = x
    term = x
    m = 0
    while term:
        m += 1
        term = interior(Q, term).scale(Fraction(sign, m))
        total = total + term
    return total


def calculus_for(t: HamiltonianTriple) -> BracketCalculus:
    """Bracket calculus over the triple's development with X_L = -Q registered."""
    calc = BracketCalculus(t.ambient)
    try:
        calc.register(t.L, -t.Q)
    except NotHamiltonianError as e:
        logger.warning(f"Lagrangian is not Hamiltonian for -Q: {e}")
    return calc


def master_equation(t: HamiltonianTriple, checker: Checker) -> list[CheckResult]:
    """The modified classical master equation and the B-bracket Maurer-Cartan equation."""
    start = len(checker.results)
    checker.check(
        "modified master equation",
        lambda: interior(t.Q, interior(t.Q, t.omega)).scale(Fraction(1, 2)) - dH(t.L),
        message="1/2 iota_Q iota_Q omega• = dH L•",
    )

    def b_mc() -> ConeElement:
        calc = calculus_for(t)
        ell = include(t.L)
        return calc.cone.differential(ell) + calc.bracket_b(ell, ell).scale(Fraction(1, 2))

    checker.check("B Maurer-Cartan", b_mc, message="(D - L_Q) l + 1/2 {l, l}^B = 0")
    return checker.results[start:]


def noether_and_total(t: HamiltonianTriple) -> tuple[LocalForm, LocalForm]:
    return t.noether(), t.total()


def descent_checks(t: HamiltonianTriple, checker: Checker) -> list[CheckResult]:
    """(dH - L_Q) descent of the Noether and total Lagrangians."""
    start = len(checker.results)
    delta, total = noether_and_total(t)
    checker.check("Noether descent", lambda: dH(delta) - lie_derivative(t.Q, delta))
    checker.check("total descent", lambda: dH(total) - lie_derivative(t.Q, total))
    checker.check(
        "Lagrangian descent",
        lambda: dH(t.L) - lie_derivative(t.Q, interior(t.Q, t.theta)),
        message="dH L• = L_Q iota_Q theta•",
    )
    return checker.results[start:]


# Maurer-Cartan elements


def standard_mc(t: HamiltonianTriple, calc: Optional[BracketCalculus] = None) -> ConeElement:
    """𝕤 = 𝕝 - 1/2 H~_Q {𝕝, 𝕝}^S with 𝕝 = (0, 𝕃•)."""
    calc = calc or calculus_for(t)
    ell = include(t.total())
    alpha = calc.cone.h_tilde(calc.bracket_s(ell, ell)).scale(Fraction(1, 2))
    return ell - alpha


def standard_mc_checks(
    t: HamiltonianTriple, checker: Checker, calc: Optional[BracketCalculus] = None
) -> list[CheckResult]:
    """S-tower Maurer-Cartan residual of 𝕤 and its image among local functionals."""
    start = len(checker.results)
    calc = calc or calculus_for(t)
    s = standard_mc(t, calc)
    ell = functional_projector(include(t.L))

    checker.check("standard MC element", lambda: calc.s_tower().mc_residual(s))
    checker.check(
        "projected MC element",
        lambda: functional_projector(s) - ell,
        message="P s = P (0, L•)",
    )
    checker.check(
        "functional MC equation",
        lambda: calc.ham_structure().mc_residual(ell),
        message="d_ham l + 1/2 {l, l}_ham = 0",
    )

    def pushforward() -> dict[str, object]:
        pushed = calc.push_mc(ell)
        rest = pushed - s
        return {
            "P(s + r) - l": functional_projector(pushed) - ell,
            "P r": functional_projector(rest),
        }

    checker.check("pushed MC element", pushforward, message="I_MC(l) = s + r")
    return checker.results[start:]


# Redefinitions


def redefine_triple(t: HamiltonianTriple, f: LocalForm) -> HamiltonianTriple:
    """T_f: (L• + dH f, Q, θ• + dV f) for f of vertical degree 0 below top.

    Raises:
        BidegreeError: if f has vertical degree or reaches top horizontal degree
    """
    n = t.theory.dimension
    if any(monomial_bidegree(m)[0] != 0 or monomial_bidegree(m)[1] >= n for m in f.terms):
        raise BidegreeError("Triple redefinition expects f of bidegree (0, < n)")
    return HamiltonianTriple(L=t.L + dH(f), Q=t.Q, theta=t.theta + dV(f), ambient=t.ambient)


def redefinition_checks(t: HamiltonianTriple, f: LocalForm, checker: Checker) -> list[CheckResult]:
    """Laws of T_f: certification and the shifts of Δ•, 𝕃• and P(0, L•)."""
    start = len(checker.results)
    new = redefine_triple(t, f)
    Q = t.Q
    shift = dH(f) - lie_derivative(Q, f)
    graded = f + euler_action(f)

    checker.check("redefined triple equation", new.residual)
    checker.check("Noether shift", lambda: new.noether() - t.noether() - shift)
    checker.check(
        "total shift",
        lambda: new.total() - t.total() - dH(graded) + lie_derivative(Q, graded),
        message="shift is (dH - L_Q)(1 + L_E) f",
    )
    checker.check(
        "projected Lagrangian",
        lambda: functional_projector(include(new.L)) - functional_projector(include(t.L)),
    )
    return checker.results[start:]


def _development_of(t: HamiltonianTriple, form: LocalForm) -> SymplecticDevelopment:
    return SymplecticDevelopment(
        theory=t.theory,
        Q=t.Q,
        anchor=form.top(),
        form=form,
        k=t.ambient.k,
    )


def liouville_redefine(
    t: HamiltonianTriple, eta: LocalForm
) -> tuple[HamiltonianTriple, SymplecticDevelopment]:
    """Liouville redefinition along η, over ω~• = ω• + (dH - L_Q) dV η.

    The new triple is (L• + 1/2 iota_Q iota_Q dV η, Q, θ• - dH η + iota_Q dV η).

    Raises:
        BidegreeError: unless η has vertical degree one
        CompatibilityError: unless ped(η) = k - 1
    """
    if _vertical_degrees(eta) - {1}:
        raise BidegreeError("Liouville redefinition expects a form of vertical degree 1")
    k = t.ambient.k
    ped = eta.degree("ped")
    if ped is not None and ped != k - 1:
        raise CompatibilityError(f"Liouville form must have ped {k - 1}, got {ped}")
    Q = t.Q
    zeta = dV(eta)
    omega = t.omega + dH(zeta) - lie_derivative(Q, zeta)
    ambient = _development_of(t, omega)
    iz = interior(Q, zeta)
    triple = HamiltonianTriple(
        L=t.L + interior(Q, iz).scale(Fraction(1, 2)),
        Q=Q,
        theta=t.theta - dH(eta) + iz,
        ambient=ambient,
    )
    return triple, ambient


def liouville_checks(t: HamiltonianTriple, eta: LocalForm, checker: Checker) -> list[CheckResult]:
    """Certification of the Liouville-redefined data and its class shifts."""
    start = len(checker.results)
    new, ambient = liouville_redefine(t, eta)
    Q = t.Q
    primitive = interior(Q, eta)

    checker.check("Liouville development", ambient.certificates)
    checker.check("Liouville triple equation", new.residual)
    checker.check("Liouville potential", lambda: dV(new.theta) - ambient.form)
    checker.check(
        "Liouville master equation",
        lambda: interior(Q, interior(Q, ambient.form)).scale(Fraction(1, 2)) - dH(new.L),
    )
    exact = dH(primitive) - lie_derivative(Q, primitive)
    checker.check(
        "Liouville Noether shift",
        lambda: new.noether() - t.noether() - exact,
        message="shift is (dH - L_Q) iota_Q eta",
    )
    graded = euler_action(primitive)
    checker.check(
        "Liouville total shift",
        lambda: new.total() - t.total() - dH(graded) + lie_derivative(Q, graded),
        message="shift is (dH - L_Q) L_E iota_Q eta",
    )
    return checker.results[start:]


def redefinition_series(Q: EvolutionaryField, beta: LocalForm) -> LocalForm:
    """β• = sum_j (H~_Q dV)^j β, with H~_Q the L_Q-perturbed horizontal homotopy.

    Each step raises the vertical degree by one and lowers the horizontal one.
    """
    return iterate_series(
        beta,
        lambda y: perturbed_horizontal_homotopy_q(dV(y), Q),
        series_bound(beta.theory),
        "redefinition",
    )


def global_redefine(
    t: HamiltonianTriple, beta: LocalForm
) -> tuple[HamiltonianTriple, SymplecticDevelopment]:
    """Redefine (ω•, L•, θ•) keeping (Q, ω) fixed.

    Over ω~• = ω• + (dH - L_Q)β the new data are

        θ~• = θ• + h_V (dH - L_Q)β,
        L~• = L• + P_V((dV - dH) e^{-iota_Q} β•),

    with β• from :func:`redefinition_series`. The anchor β^0 is the top
    horizontal component of β. ω~• is closed only when dV (dH - L_Q)β = 0;
    :func:`global_checks` reports that closure.

    Raises:
        BidegreeError: unless β has vertical degree two
        CompatibilityError: if ped(β) != k - 1 or Pi dV β^0 != 0
    """
    if _vertical_degrees(beta) - {2}:
        raise BidegreeError("Global redefinition expects a form of vertical degree 2")
    k = t.ambient.k
    ped = beta.degree("ped")
    if ped is not None and ped != k - 1:
        raise CompatibilityError(f"Redefinition form must have ped {k - 1}, got {ped}")
    top = beta.top()
    anchor = interior_euler(dV(top)) if top else top
    if anchor:
        raise CompatibilityError("Pi dV beta^0 != 0", residual=anchor)
    Q = t.Q
    gamma = dH(beta) - lie_derivative(Q, beta)
    if dV(gamma):
        logger.warning("dV (dH - L_Q) beta != 0, the redefined development is not closed")
    series = redefinition_series(Q, beta)
    shifted = exp_interior(Q, series, sign=-1)
    ambient = _development_of(t, t.omega + gamma)
    triple = HamiltonianTriple(
        L=t.L + pv(dV(shifted) - dH(shifted)).body,
        Q=Q,
        theta=t.theta + vertical_homotopy(gamma),
        ambient=ambient,
    )
    logger.debug(f"Redefinition series has {len(series)} terms")
    return triple, ambient


def global_checks(t: HamiltonianTriple, beta: LocalForm, checker: Checker) -> list[CheckResult]:
    """Certification of the globally redefined data."""
    start = len(checker.results)
    new, ambient = global_redefine(t, beta)
    Q = t.Q
    gamma = dH(beta) - lie_derivative(Q, beta)

    checker.check(
        "redefinition closure",
        lambda: dV(gamma),
        message="dV (dH - L_Q) beta = 0",
    )
    checker.check("redefined development", ambient.certificates)
    checker.check("globally redefined triple equation", new.residual)
    checker.check("globally redefined potential", lambda: dV(new.theta) - ambient.form)
    checker.check(
        "redefined Lagrangian",
        lambda: new.L - t.L - vertical_homotopy(interior(Q, gamma)),
        message="P_V((dV - dH) e^{-iota_Q} beta•) = h_V iota_Q (dH - L_Q) beta",
    )
    return checker.results[start:]


@dataclass(frozen=True)
class Classification:
    """Differences of two triples as (dH F + p*K, dV F + dH γ)."""

    K: LocalForm
    F: LocalForm
    gamma: LocalForm
    lagrangian_residual: LocalForm
    potential_residual: LocalForm

    @property
    def reconstructed(self) -> bool:
        return self.lagrangian_residual.is_zero and self.potential_residual.is_zero


def classify(first: HamiltonianTriple, second: HamiltonianTriple) -> Classification:
    """Decompose the difference of two triples over the same development.

    Raises:
        CompatibilityError: if the triples live over different developments
    """
    if first.omega != second.omega or first.Q != second.Q:
        raise CompatibilityError("Triples must share their development and field")
    dL = second.L - first.L
    dtheta = second.theta - first.theta
    K = dL.zero_section_pullback()
    v = dV(dL)
    F = -vertical_homotopy(horizontal_homotopy(v)) if v else dL.theory.zero()
    rest = dtheta - dV(F)
    gamma = horizontal_homotopy(rest) if rest else rest
    return Classification(
        K=K,
        F=F,
        gamma=gamma,
        lagrangian_residual=dL - dH(F) - K,
        potential_residual=dtheta - dV(F) - dH(gamma),
    )


# Momentum map


@dataclass(frozen=True)
class MomentumMap:
    """λ = L• + θ•, of total effective degree zero."""

    lam: LocalForm
    triple: HamiltonianTriple

    @classmethod
    def of(cls, t: HamiltonianTriple) -> "MomentumMap":
        return cls(t.L + t.theta, t)

    def residuals(self) -> dict[str, LocalForm]:
        t = self.triple
        Q = t.Q
        delta = t.noether()
        primitive = delta + t.theta
        return {
            "e^{iota_Q} omega• - d lambda": exp_interior(Q, t.omega) - d_total(self.lam),
            "omega• - (d - L_Q)(Delta + theta)": t.omega
            - d_total(primitive)
            + lie_derivative(Q, primitive),
            "(L_Q - dH) lambda - d Delta": lie_derivative(Q, self.lam)
            - dH(self.lam)
            - d_total(delta),
        }


def momentum_map(t: HamiltonianTriple) -> MomentumMap:
    return MomentumMap.of(t)


def momentum_checks(t: HamiltonianTriple, checker: Checker) -> list[CheckResult]:
    """The multisymplectic identities of λ, one check each."""
    start = len(checker.results)
    residuals = momentum_map(t).residuals()
    for name, residual in residuals.items():
        checker.check(name, lambda r=residual: r)
    return checker.results[start:]
