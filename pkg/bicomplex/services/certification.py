"""Check suites behind the CLI commands.

Each suite adds named checks to a :class:`~bicomplex.services.reporting.Checker`.
Randomized suites draw their samples from a seeded :class:`FormSampler`, so a
seed fixes the whole report.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Optional

from bicomplex.config import get_settings
from bicomplex.exceptions import CompatibilityError
from bicomplex.services import bv
from bicomplex.services.calculus import (
    EvolutionaryField,
    dH,
    dV,
    field_bracket,
    interior_euler,
    lie_derivative,
)
from bicomplex.services.homotopy import (
    ConeElement,
    HamiltonianCone,
    cone_differential,
    cone_homotopy,
    cone_lie,
    functional_projector,
    include,
    iv,
    perturbed_horizontal_homotopy,
    pv,
    series_bound,
    source_differential,
    vertical_homotopy,
    zero_section_homotopy,
)
from bicomplex.services.horizontal import horizontal_homotopy
from bicomplex.services.hpl import Perturbation, RetractDatum, compose, perturb, verify_retract
from bicomplex.services.linfty import (
    BracketCalculus,
    SymplecticDevelopment,
    alternative_horizontal_homotopy,
    build_development,
    development_difference,
)
from bicomplex.services.localforms import LocalForm, Theory, format_form
from bicomplex.services.reporting import Checker
from bicomplex.services.sampling import FormSampler

logger = logging.getLogger(__name__)
settings = get_settings()


def sampler_for(theory: Theory, seed: Optional[int]) -> FormSampler:
    """Sample sizes shrink with the base dimension to keep sweeps at desk scale."""
    if theory.dimension >= 3:
        return FormSampler(theory, seed, max_order=1, max_jets=1, max_coordinates=0, max_terms=2)
    if theory.dimension == 2:
        return FormSampler(theory, seed, max_order=1, max_jets=2, max_coordinates=1, max_terms=2)
    return FormSampler(theory, seed)


def first_nonzero(values: Iterable[Any]) -> Any:
    """The first nonzero residual of a sample sweep, or None."""
    for value in values:
        if value:
            return value
    return None


def _sweep(count: int, sample: Callable[[int], Any]) -> Callable[[], Any]:
    return lambda: first_nonzero(sample(i) for i in range(count))


def field_residual(X: EvolutionaryField, Y: EvolutionaryField) -> Any:
    """Componentwise difference of two fields; True when their degrees disagree."""
    if X.is_zero and Y.is_zero:
        return None
    if X.ghost != Y.ghost:
        return True
    return {
        f"component {f.name}": x - y
        for f, x, y in zip(X.theory.fields, X.components, Y.components)
    }


def _mapping_residual(mapping: dict[str, Any]) -> Any:
    return first_nonzero(mapping.values())


@dataclass
class Session:
    """Lazily built data shared by the suites of one run."""

    spec: bv.TheorySpec
    samples: int = field(default_factory=lambda: settings.default_samples)
    seed: Optional[int] = None
    _development: Optional[SymplecticDevelopment] = None
    _triple: Optional[bv.HamiltonianTriple] = None
    _calculus: Any = None

    @property
    def theory(self) -> Theory:
        return self.spec.theory

    @property
    def k(self) -> int:
        return self.spec.k or 0

    def sampler(self, offset: int = 0) -> FormSampler:
        seed = (self.seed if self.seed is not None else settings.default_seed) + offset
        return sampler_for(self.theory, seed)

    @property
    def development(self) -> SymplecticDevelopment:
        if self._development is None:
            self._development = bv.develop(self.spec)
        return self._development

    @property
    def triple(self) -> bv.HamiltonianTriple:
        if self._triple is None:
            self._triple = bv.triple_for(self.spec, self.development)
        return self._triple

    @property
    def calculus(self):
        if self._calculus is None:
            self._calculus = bv.calculus_for(self.triple)
        return self._calculus


# Bicomplex axioms and contracts


def axiom_suite(session: Session, checker: Checker) -> None:
    """Differential identities, the vertical and horizontal contracts and the resolution."""
    sampler = session.sampler(1)
    theory = session.theory
    n = theory.dimension
    count = session.samples
    forms = [sampler.mixed_form() for _ in range(count)]
    vertical = [sampler.vertical_form() for _ in range(count)]
    tops = [sampler.form(1 + i % 2, n) for i in range(count)]
    cones = [sampler.cone_element(int(sampler.rng.integers(-n, 2))) for _ in range(count)]

    checker.check("dH dH = 0", _sweep(count, lambda i: dH(dH(forms[i]))))
    checker.check("dV dV = 0", _sweep(count, lambda i: dV(dV(forms[i]))))
    checker.check("[dH, dV] = 0", _sweep(count, lambda i: dH(dV(forms[i])) + dV(dH(forms[i]))))
    checker.check(
        "Pi Pi = Pi",
        _sweep(count, lambda i: interior_euler(interior_euler(tops[i])) - interior_euler(tops[i])),
    )
    checker.check("Pi dH = 0", _sweep(count, lambda i: interior_euler(dH(vertical[i]))))
    checker.check(
        "(Pi dV)^2 = 0",
        _sweep(count, lambda i: source_differential(source_differential(tops[i]))),
    )

    def vertical_contract(x: LocalForm) -> LocalForm:
        return dV(vertical_homotopy(x)) + vertical_homotopy(dV(x)) + x.zero_section_pullback() - x

    checker.check("vertical contract", _sweep(count, lambda i: vertical_contract(forms[i])))
    checker.check(
        "vertical side conditions",
        _sweep(
            count,
            lambda i: _mapping_residual(
                {
                    "h_V h_V": vertical_homotopy(vertical_homotopy(forms[i])),
                    "[dH, h_V]": dH(vertical_homotopy(forms[i]))
                    + vertical_homotopy(dH(forms[i])),
                }
            ),
        ),
    )

    def horizontal_contract(x: LocalForm) -> LocalForm:
        return dH(horizontal_homotopy(x)) + horizontal_homotopy(dH(x)) + interior_euler(x) - x

    checker.check("horizontal contract", _sweep(count, lambda i: horizontal_contract(vertical[i])))
    checker.check(
        "horizontal side conditions",
        _sweep(
            count,
            lambda i: _mapping_residual(
                {
                    "Pi h": interior_euler(horizontal_homotopy(vertical[i])),
                    "h h": horizontal_homotopy(horizontal_homotopy(vertical[i])),
                }
            ),
        ),
    )

    def resolution(c: ConeElement) -> ConeElement:
        lhs = cone_differential(cone_homotopy(c)) + cone_homotopy(cone_differential(c))
        return lhs + include(functional_projector(c)) - c

    checker.check("cone resolution", _sweep(count, lambda i: resolution(cones[i])))
    checker.check(
        "projector laws",
        _sweep(
            count,
            lambda i: _mapping_residual(
                {
                    "P P - P": functional_projector(include(functional_projector(cones[i])))
                    - functional_projector(cones[i]),
                    "P D": functional_projector(cone_differential(cones[i])),
                }
            ),
        ),
    )


# Perturbation lemma


def anderson_retract() -> RetractDatum:
    """Source forms (with zero differential) as a special retract of (vfd >= 1, dH)."""
    return RetractDatum(
        name="Anderson",
        d_a=lambda a: a - a,
        d_b=dH,
        f=lambda a: a,
        g=lambda b: interior_euler(b.top()),
        h=horizontal_homotopy,
        special=True,
    )


def cone_retract() -> RetractDatum:
    """Local functionals (with zero differential) as a retract of the cone."""
    return RetractDatum(
        name="cone",
        d_a=lambda a: a - a,
        d_b=cone_differential,
        f=include,
        g=functional_projector,
        h=cone_homotopy,
    )


def corollary_retract() -> RetractDatum:
    """Source forms -> (vfd >= 1, -d) -> cone; its homotopy is the cone homotopy H."""
    first = RetractDatum(
        name="source",
        d_a=source_differential,
        d_b=lambda b: -dV(b) - dH(b),
        f=lambda a: a,
        g=lambda b: interior_euler(b.top()),
        h=lambda b: -perturbed_horizontal_homotopy(b),
    )
    second = RetractDatum(
        name="vertical",
        d_a=first.d_b,
        d_b=cone_differential,
        f=pv,
        g=iv,
        h=zero_section_homotopy,
    )
    return compose(first, second)


def _retract_checks(checker: Checker, label: str, results) -> None:
    for result in results:
        checker.check(f"{label}: {result.identity}", lambda r=result.residual: r)


def hpl_suite(session: Session, checker: Checker) -> None:
    """Perturbed retracts against their closed forms."""
    theory = session.theory
    n = theory.dimension
    sampler = session.sampler(2)
    count = min(session.samples, settings.hpl_sample_count)
    bound = series_bound(theory)

    vertical = [sampler.vertical_form() for _ in range(count)]
    sources = [interior_euler(sampler.form(1 + i % 2, n)) for i in range(count)]
    anderson = anderson_retract()
    _retract_checks(checker, "Anderson retract", verify_retract(anderson, sources, vertical))

    perturbed = perturb(anderson, Perturbation(dV, bound))
    checker.check(
        "dV-perturbed homotopy",
        _sweep(
            count,
            lambda i: perturbed.h(vertical[i]) - perturbed_horizontal_homotopy(vertical[i]),
        ),
    )
    checker.check(
        "dV-perturbed differential",
        _sweep(count, lambda i: perturbed.d_a(sources[i]) - source_differential(sources[i])),
    )
    checker.check(
        "dV-perturbed projection",
        _sweep(count, lambda i: perturbed.g(vertical[i]) - interior_euler(vertical[i].top())),
    )

    cones = [sampler.cone_element(int(sampler.rng.integers(-n, 2))) for _ in range(count)]
    functionals = [sampler.functional(int(sampler.rng.integers(-1, 2))) for _ in range(count)]
    unperturbed = cone_retract()
    _retract_checks(checker, "cone retract", verify_retract(unperturbed, functionals, cones))

    try:
        cone = HamiltonianCone(session.spec.Q)
    except CompatibilityError as e:
        checker.skip("L_Q-perturbed cone retract", str(e))
    else:
        Q = session.spec.Q
        shifted = perturb(unperturbed, Perturbation(lambda c: -cone_lie(Q, c), cone.bound))
        checker.check(
            "L_Q-perturbed homotopy",
            _sweep(count, lambda i: shifted.h(cones[i]) - cone.h_tilde(cones[i])),
        )
        checker.check(
            "L_Q-perturbed inclusion",
            _sweep(count, lambda i: shifted.f(functionals[i]) - cone.i_tilde(functionals[i])),
        )
        checker.check(
            "L_Q-perturbed differential",
            _sweep(count, lambda i: shifted.d_a(functionals[i]) - cone.d_ham(functionals[i])),
        )

    composite = corollary_retract()
    checker.check(
        "composite homotopy",
        _sweep(count, lambda i: composite.h(cones[i]) - cone_homotopy(cones[i])),
        message="H = H_0* - P_V h~ I_V",
    )


# Developments and triples


def development_suite(session: Session, checker: Checker) -> None:
    """Certificates of ω• and the comparison with an alternative homotopy."""
    spec = session.spec
    dev = checker_guard(checker, "development", lambda: session.development)
    if dev is None:
        return
    components = {
        f"omega^{k}": format_form(c) for k, c in sorted(dev.development.components.items())
    }
    checker.check("dV omega•", lambda: dV(dev.form), details=components)
    checker.check("(dH - L_Q) omega•", lambda: dH(dev.form) - lie_derivative(dev.Q, dev.form))

    def alternative() -> dict[str, LocalForm]:
        other = build_development(spec.omega, spec.Q, alternative_horizontal_homotopy)
        eta = development_difference(dev, other)
        exact = dH(eta) - lie_derivative(spec.Q, eta)
        return {
            "certificates": _mapping_residual(other.certificates()),
            "difference": other.form - dev.form - exact,
        }

    checker.check("alternative development", alternative, message="difference is (dH - L_Q) eta")


def checker_guard(checker: Checker, name: str, build: Callable[[], Any]) -> Any:
    """Build shared data, recording a failed check instead of raising."""
    holder: list[Any] = []

    def run() -> None:
        holder.append(build())

    result = checker.check(f"{name} constructed", run)
    return holder[0] if result.passed and holder else None


def triple_suite(session: Session, checker: Checker) -> None:
    """Triple equation, master equation, descent, redefinitions and classification."""
    t = checker_guard(checker, "triple", lambda: session.triple)
    if t is None:
        return
    checker.results[-1].details.update({"L": format_form(t.L), "theta": format_form(t.theta)})
    bv.triple_checks(t, checker)
    bv.master_equation(t, checker)
    bv.descent_checks(t, checker)

    theory = session.theory
    n = theory.dimension
    k = session.k
    sampler = session.sampler(3)
    for i in range(min(session.samples, 3)):
        hfd = int(sampler.rng.integers(0, n))
        f = sampler.form(0, hfd, ghost=k + n - hfd)
        bv.redefinition_checks(t, f, checker)
        checker.check(
            "classification of redefinitions",
            lambda f=f: _classification_residual(t, bv.redefine_triple(t, f)),
        )
        hfd = int(sampler.rng.integers(0, n))
        eta = sampler.form(1, hfd, ghost=k - 1 + n - hfd)
        bv.liouville_checks(t, eta, checker)
        bv.global_checks(t, dV(eta), checker)


def _classification_residual(first: bv.HamiltonianTriple, second: bv.HamiltonianTriple) -> Any:
    found = bv.classify(first, second)
    return {"L": found.lagrangian_residual, "theta": found.potential_residual}


# Brackets and L-infinity structures


def _hamiltonian_peds(session: Session) -> Callable[[FormSampler], int]:
    k = session.k
    return lambda sampler: k + int(sampler.rng.integers(0, 3))


def bracket_suite(session: Session, checker: Checker) -> None:
    """Bracket identities on seeded Hamiltonian inputs and the functional dgLa."""
    calc = checker_guard(checker, "bracket calculus", lambda: session.calculus)
    if calc is None:
        return
    sampler = session.sampler(4)
    pick = _hamiltonian_peds(session)
    count = session.samples
    elements = [
        tuple(sampler.hamiltonian_element(pick(sampler)) for _ in range(3)) for _ in range(count)
    ]

    for kind in ("S", "A", "B"):
        checker.check(
            f"skew-symmetry {kind}",
            _sweep(
                count,
                lambda i, kind=kind: calc.bracket(kind, *elements[i][:2])
                + calc.bracket(kind, *reversed(elements[i][:2])).scale(
                    calc.sigma(*elements[i][:2])
                ),
            ),
        )
    s_tower, b_structure = calc.s_tower(), calc.b_structure()
    checker.check(
        "D - L_Q derivation of S", _sweep(count, lambda i: s_tower.jacobi(elements[i][:2]))
    )
    checker.check(
        "D - L_Q derivation of B", _sweep(count, lambda i: b_structure.jacobi(elements[i][:2]))
    )
    checker.check("Jacobi B", _sweep(count, lambda i: calc.jacobiator("B", *elements[i])))
    checker.check(
        "P Jac S = 0",
        _sweep(count, lambda i: functional_projector(calc.jacobiator("S", *elements[i]))),
    )

    def field_compatibility(i: int) -> Any:
        x, y, _ = elements[i]
        bracket = calc.bracket_s(x, y)
        return field_residual(
            calc.hamiltonian_vector_field(bracket.body),
            field_bracket(calc.pair(x).X, calc.pair(y).X),
        )

    checker.check("X_{F,G} = [X_F, X_G]", _sweep(count, field_compatibility))
    functional_suite(session, checker)


def functional_suite(session: Session, checker: Checker) -> None:
    """The dgL[k]a on local functionals and the Lagrangian as its MC element."""
    calc = session.calculus
    sampler = session.sampler(5)
    count = session.samples
    k = session.k
    functionals = [
        tuple(sampler.functional(k + 1 + int(sampler.rng.integers(-1, 2))) for _ in range(3))
        for _ in range(count)
    ]
    ham = calc.ham_structure()
    ell = functional_projector(include(session.triple.L))

    checker.check("d_ham d_ham = 0", _sweep(count, lambda i: ham.jacobi(functionals[i][:1])))
    checker.check("F_ham Leibniz", _sweep(count, lambda i: ham.jacobi(functionals[i][:2])))
    checker.check("F_ham Jacobi", _sweep(count, lambda i: ham.jacobi(functionals[i])))
    checker.check(
        "d_ham = {l, .}_ham",
        _sweep(
            count,
            lambda i: calc.d_ham(functionals[i][0]) - calc.bracket_ham(ell, functionals[i][0]),
        ),
    )
    checker.check("{l, l}_ham = 0", lambda: calc.bracket_ham(ell, ell))


def linfty_suite(session: Session, checker: Checker, arity: int) -> None:
    """Generalized Jacobi identities, twisting, the quasi-inverse and the perturbation lemma."""
    calc = checker_guard(checker, "bracket calculus", lambda: session.calculus)
    if calc is None:
        return
    sampler = session.sampler(6)
    pick = _hamiltonian_peds(session)
    count = session.samples
    s_tower, b_structure = calc.s_tower(), calc.b_structure()
    for m in range(1, arity + 1):
        samples = [
            [sampler.hamiltonian_element(pick(sampler)) for _ in range(m)] for _ in range(count)
        ]
        checker.check(
            f"B Jacobi arity {m}", _sweep(count, lambda i, p=samples: b_structure.jacobi(p[i]))
        )
        if m <= s_tower.max_arity:
            checker.check(
                f"S-tower Jacobi arity {m}",
                _sweep(count, lambda i, p=samples: s_tower.jacobi(p[i])),
            )
        else:
            checker.skip(f"S-tower Jacobi arity {m}", "brackets are constructed up to arity 3")

    ell = functional_projector(include(session.triple.L))
    samples = [sampler.hamiltonian_element(pick(sampler)) for _ in range(count)]
    for kind, structure in (("B", b_structure), ("S", s_tower)):
        twisted = checker_guard(
            checker,
            f"{structure.name} twisted by I_MC(l)",
            lambda s=structure, c=kind: s.twist(calc.push_mc(ell, c)),
        )
        if twisted is not None:
            checker.check(
                f"{structure.name} twisted differential squares to zero",
                _sweep(count, lambda i, t=twisted: t.jacobi([samples[i]])),
            )
    _free_twist_checks(session, checker, calc, samples)

    k = session.k
    top = min(arity, session.theory.dimension + 1)
    functionals = [
        [sampler.functional(k + 1 + int(sampler.rng.integers(-1, 2)))]
        + [sampler.functional(k + 1) for _ in range(top - 1)]
        for _ in range(count)
    ]
    checker.check(
        "P I_1 = id",
        _sweep(
            count,
            lambda i: functional_projector(calc.quasi_inverse(1, functionals[i][0]))
            - functionals[i][0],
        ),
    )
    for m in range(2, top + 1):
        checker.check(
            f"P I_{m} = 0",
            _sweep(
                count,
                lambda i, m=m: functional_projector(calc.quasi_inverse(m, *functionals[i][:m])),
            ),
        )
        checker.check(
            f"quasi-inverse morphism arity {m}",
            _sweep(count, lambda i, m=m: calc.morphism_residual(*functionals[i][:m])),
        )
    hpl_suite(session, checker)


def _free_twist_checks(
    session: Session, checker: Checker, calc: BracketCalculus, samples: list[ConeElement]
) -> None:
    """Twist the Q = 0 S-tower by I_MC(l) and compare with the brackets of L•."""
    free = checker_guard(checker, "Q = 0 calculus", calc.untwisted)
    if free is None:
        return
    ell = functional_projector(include(session.triple.L))
    twisted = checker_guard(
        checker,
        "Q = 0 S-tower twisted by I_MC(l)",
        lambda: free.s_tower().twist(free.push_mc(ell)),
    )
    if twisted is None:
        return
    lagrangian = include(session.triple.L)
    count = session.samples

    def expected(x: ConeElement) -> ConeElement:
        return (
            free.cone.differential(x)
            + free.lambda2("S", lagrangian, x)
            + free.lambda3(lagrangian, lagrangian, x).scale(Fraction(1, 2))
        )

    checker.check(
        "Q = 0 twisted differential",
        _sweep(count, lambda i: twisted.bracket(samples[i]) - expected(samples[i])),
        message="D + {L•, .}^S + 1/2 {L•, L•, .}^S",
    )
    checker.check(
        "Q = 0 twisted differential squares to zero",
        _sweep(count, lambda i: twisted.jacobi([samples[i]])),
    )


def mc_suite(session: Session, checker: Checker) -> None:
    t = checker_guard(checker, "triple", lambda: session.triple)
    if t is None:
        return
    bv.master_equation(t, checker)
    bv.descent_checks(t, checker)
    bv.standard_mc_checks(t, checker, session.calculus)


def momentum_suite(session: Session, checker: Checker) -> None:
    t = checker_guard(checker, "triple", lambda: session.triple)
    if t is None:
        return
    checker.results[-1].details.update({"lambda": format_form(bv.momentum_map(t).lam)})
    bv.momentum_checks(t, checker)


def compatibility_gate(session: Session, checker: Checker) -> bool:
    """Run the compatibility checks; downstream suites run only when they pass."""
    results = bv.check_compatibility(session.spec, checker)
    return all(r.passed for r in results)
