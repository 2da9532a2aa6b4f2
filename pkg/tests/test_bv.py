"""Tests for compatibility, Hamiltonian triples and their redefinitions."""

import pytest

from bicomplex.exceptions import BidegreeError, CompatibilityError
from bicomplex.services import bv
from bicomplex.services.calculus import (
    EvolutionaryField,
    dH,
    dV,
    euler_action,
    field_bracket,
    interior,
    lie_derivative,
)
from bicomplex.services.localforms import Theory
from bicomplex.services.reporting import Checker
from bicomplex.services.spec_parser import parse_spec


def _failures(checker: Checker) -> list[str]:
    return [r.name for r in checker.results if not r.passed]


def test_particle_is_compatible(particle_spec, checker):
    results = bv.check_compatibility(particle_spec, checker)
    assert results
    assert checker.passed, _failures(checker)
    bv.require_compatible(particle_spec)


def test_broken_spec_fails_compatibility(broken_spec, checker):
    bv.check_compatibility(broken_spec, checker)
    assert _failures(checker) == ["Pi L_Q omega"]
    failure = checker.report().first_failure()
    assert failure.residual
    with pytest.raises(CompatibilityError, match="Pi L_Q omega"):
        bv.require_compatible(broken_spec)


def test_symplectic_degree_must_be_minus_one(checker):
    theory = Theory.build(1, {"x": 0, "p": 0}, ["t"])
    spec = bv.TheorySpec(
        name="even",
        theory=theory,
        omega=theory.dv("x") * theory.dv("p") * theory.dx("t"),
        Q=EvolutionaryField.zero(theory, 1),
    )
    bv.check_compatibility(spec, checker)
    failure = checker.report().first_failure()
    assert failure.name == "ghost bookkeeping"
    assert failure.message == "nonzero residual in k = -1"


def test_canonical_triple(particle_triple, lax_spec):
    """L• = 1/2 x x_tt dt, with no lower components."""
    assert particle_triple.certified
    assert particle_triple.L == lax_spec.lagrangian
    assert dV(particle_triple.theta) == particle_triple.omega


def test_lax_triple(lax_spec, checker):
    assert lax_spec.lax
    triple = bv.triple_for(lax_spec, bv.develop(lax_spec))
    bv.triple_checks(triple, checker)
    bv.master_equation(triple, checker)
    bv.descent_checks(triple, checker)
    assert checker.passed, _failures(checker)


def test_lax_triple_with_wrong_lagrangian(particle_triple):
    wrong = bv.lax_triple(particle_triple.ambient, particle_triple.L.scale(2))
    assert not wrong.certified


def test_triple_bidegrees(particle_triple):
    with pytest.raises(BidegreeError):
        bv.HamiltonianTriple(
            L=particle_triple.theta,
            Q=particle_triple.Q,
            theta=particle_triple.theta,
            ambient=particle_triple.ambient,
        )


def test_master_equation_and_descent(particle_triple, checker):
    bv.master_equation(particle_triple, checker)
    bv.descent_checks(particle_triple, checker)
    assert [r.name for r in checker.results] == [
        "modified master equation",
        "B Maurer-Cartan",
        "Noether descent",
        "total descent",
        "Lagrangian descent",
    ]
    assert checker.passed, _failures(checker)


GHOST_PARTICLE = (
    "dimension: 1\n"
    "coordinates: t\n"
    "fields: x:0, c:1, x+:-1, c+:-2\n"
    "omega: dV(x) ^ dV(x+) ^ dx(t) + dV(c) ^ dV(c+) ^ dx(t)\n"
    "Q:\n"
    "    x+ -> x_{tt}\n"
)


def test_master_equation_needs_cohomological_field(checker):
    spec = parse_spec(GHOST_PARTICLE, name="ghost-particle")
    triple = bv.canonical_triple(bv.develop(spec))
    bv.master_equation(triple, checker)
    assert checker.passed, _failures(checker)

    theory = spec.theory
    moving = EvolutionaryField.from_mapping(
        theory,
        1,
        {
            "x+": theory.jet("x", "tt"),
            "c": theory.jet("c") * theory.jet("c", "tt"),
            "c+": theory.jet("x+"),
        },
    )
    assert not field_bracket(moving, moving).is_zero
    swapped = bv.HamiltonianTriple(
        L=triple.L, Q=moving, theta=triple.theta, ambient=triple.ambient
    )
    failed = Checker("test", "ghost-particle")
    bv.master_equation(swapped, failed)
    assert "modified master equation" in _failures(failed)


def test_momentum_map(particle_triple, checker):
    moment = bv.momentum_map(particle_triple)
    assert moment.lam == particle_triple.L + particle_triple.theta
    assert all(r.is_zero for r in moment.residuals().values())
    results = bv.momentum_checks(particle_triple, checker)
    assert len(results) == 3
    assert checker.passed


def test_redefinition_is_classified(particle, particle_triple, checker):
    """T_f shifts by (dH f, dV f) and classification recovers f."""
    f = particle.jet("x") * particle.jet("x")
    new = bv.redefine_triple(particle_triple, f)
    assert new.certified
    assert new.L - particle_triple.L == dH(f)
    found = bv.classify(particle_triple, new)
    assert found.reconstructed
    assert found.F == f
    assert found.K.is_zero
    bv.redefinition_checks(particle_triple, f, checker)
    assert checker.passed, _failures(checker)


def test_total_shift_of_moving_redefinition(particle, particle_triple, checker):
    """f = x+ is moved by Q, and L_E f = -f, so T_f leaves 𝕃• unchanged."""
    f = particle.jet("x+")
    assert lie_derivative(particle_triple.Q, f) == particle.jet("x", "tt")
    new = bv.redefine_triple(particle_triple, f)
    assert new.total() == particle_triple.total()
    assert new.noether() - particle_triple.noether() == dH(f) - particle.jet("x", "tt")
    bv.redefinition_checks(particle_triple, f, checker)
    assert checker.passed, _failures(checker)


def test_redefinition_domain(particle, particle_triple):
    with pytest.raises(BidegreeError):
        bv.redefine_triple(particle_triple, particle.jet("x") * particle.dx("t"))
    with pytest.raises(BidegreeError):
        bv.redefine_triple(particle_triple, particle.dv("x"))


def test_classify_requires_shared_development(particle_triple, lax_spec):
    other = bv.triple_for(lax_spec, bv.develop(lax_spec))
    assert bv.classify(particle_triple, other).reconstructed
    shifted = bv.HamiltonianTriple(
        L=particle_triple.L,
        Q=particle_triple.Q,
        theta=particle_triple.theta,
        ambient=bv.liouville_redefine(particle_triple, _liouville_form(particle_triple))[1],
    )
    with pytest.raises(CompatibilityError):
        bv.classify(particle_triple, shifted)


def _liouville_form(t: bv.HamiltonianTriple):
    theory = t.theory
    return theory.jet("x+") * theory.dv("x+") * theory.dx("t")


def test_liouville_redefinition(particle_triple, checker):
    eta = _liouville_form(particle_triple)
    new, ambient = bv.liouville_redefine(particle_triple, eta)
    assert ambient.certified
    assert new.certified
    bv.liouville_checks(particle_triple, eta, checker)
    assert checker.passed, _failures(checker)


def test_liouville_domain(particle, particle_triple):
    with pytest.raises(BidegreeError):
        bv.liouville_redefine(particle_triple, particle.jet("x") * particle.dx("t"))
    with pytest.raises(CompatibilityError):
        bv.liouville_redefine(
            particle_triple, particle.jet("x") * particle.dv("x+") * particle.dx("t")
        )


def test_global_redefinition_of_exact_form(particle_triple, checker):
    """For β = dV η the result differs from the Liouville one by T_f with f = -iota_Q η."""
    Q = particle_triple.Q
    eta = _liouville_form(particle_triple)
    new, ambient = bv.global_redefine(particle_triple, dV(eta))
    liouville, _ = bv.liouville_redefine(particle_triple, eta)
    assert new.certified
    assert ambient.form == liouville.omega
    assert new.L == liouville.L

    f = -interior(Q, eta)
    graded = f + euler_action(f)
    assert new.noether() - liouville.noether() == dH(f) - lie_derivative(Q, f)
    assert new.total() - liouville.total() == dH(graded) - lie_derivative(Q, graded)

    bv.global_checks(particle_triple, dV(eta), checker)
    assert checker.passed, _failures(checker)
    with pytest.raises(BidegreeError):
        bv.global_redefine(particle_triple, eta)


def test_global_redefinition_beyond_exact_forms(particle, particle_triple, checker):
    """β = (dH - L_Q) ν is not dV-exact; the series corrects it by -dV ν."""
    Q = particle_triple.Q
    nu = particle.jet("x") * particle.dv("x+") * particle.dv("x+")
    beta = dH(nu) - lie_derivative(Q, nu)
    assert dV(beta)
    assert bv.redefinition_series(Q, beta) == beta - dV(nu)

    new, ambient = bv.global_redefine(particle_triple, beta)
    assert ambient.form == particle_triple.omega
    assert new.theta == particle_triple.theta
    assert new.L == particle_triple.L
    bv.global_checks(particle_triple, beta, checker)
    assert checker.passed, _failures(checker)


def test_global_redefinition_reports_open_development(particle, particle_triple, checker):
    beta = particle.jet("x+") * particle.dv("x") * particle.dv("x", "t")
    _, ambient = bv.global_redefine(particle_triple, beta)
    assert not ambient.certified
    bv.global_checks(particle_triple, beta, checker)
    assert "redefinition closure" in _failures(checker)


def test_standard_mc_element(particle_triple, checker):
    bv.standard_mc_checks(particle_triple, checker)
    assert checker.passed, _failures(checker)


@pytest.mark.slow
def test_abelian_chern_simons(cs3_spec, checker):
    bv.check_compatibility(cs3_spec, checker)
    assert checker.passed, _failures(checker)
    development = bv.develop(cs3_spec)
    assert development.k == -1
    triple = bv.canonical_triple(development)
    assert triple.certified
    bv.master_equation(triple, checker)
    bv.momentum_checks(triple, checker)
    assert checker.passed, _failures(checker)


@pytest.mark.slow
def test_chern_simons_descent_and_standard_mc(cs3_triple, checker):
    bv.descent_checks(cs3_triple, checker)
    bv.standard_mc_checks(cs3_triple, checker)
    assert checker.passed, _failures(checker)


@pytest.mark.slow
def test_chern_simons_redefinitions(cs3_triple, checker):
    cs = cs3_triple.theory
    f = cs.jet("c+") * cs.dx("x")
    assert lie_derivative(cs3_triple.Q, f)
    bv.redefinition_checks(cs3_triple, f, checker)
    eta = cs.jet("a1+") * cs.dv("a1+") * cs.volume()
    bv.liouville_checks(cs3_triple, eta, checker)
    assert checker.passed, _failures(checker)
