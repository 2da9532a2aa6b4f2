"""Tests for the homological perturbation lemma."""

from fractions import Fraction

import pytest

from bicomplex.exceptions import NilpotencyError
from bicomplex.services.calculus import dH, dV, interior_euler
from bicomplex.services.certification import anderson_retract, cone_retract, corollary_retract
from bicomplex.services.homotopy import (
    HamiltonianCone,
    cone_homotopy,
    cone_lie,
    perturbed_horizontal_homotopy,
    series_bound,
    source_differential,
)
from bicomplex.services.hpl import (
    Perturbation,
    RetractDatum,
    compose,
    geometric_series,
    perturb,
    verify_retract,
)
from bicomplex.services.sampling import FormSampler


def test_anderson_retract(particle, particle_sampler):
    sources = [interior_euler(particle_sampler.form(1 + i % 2, 1)) for i in range(10)]
    vertical = [particle_sampler.vertical_form() for _ in range(10)]
    checks = verify_retract(anderson_retract(), sources, vertical)
    assert [c.identity for c in checks][:3] == [
        "f d_A = d_B f",
        "g d_B = d_A g",
        "id - f g = d h + h d",
    ]
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]


def test_dv_perturbed_anderson_retract(particle, particle_sampler):
    """Perturbing dH by dV gives h~ = h sum (-dV h)^k and d_A~ = Pi dV."""
    perturbed = perturb(anderson_retract(), Perturbation(dV, series_bound(particle)))
    sources = [interior_euler(particle_sampler.form(1 + i % 2, 1)) for i in range(8)]
    vertical = [particle_sampler.vertical_form() for _ in range(8)]
    for x in vertical:
        assert perturbed.h(x) == perturbed_horizontal_homotopy(x)
        assert perturbed.g(x) == interior_euler(x.top())
        assert perturbed.d_b(x) == dH(x) + dV(x)
    for s in sources:
        assert perturbed.d_a(s) == source_differential(s)
    checks = verify_retract(perturbed, sources, vertical)
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]


def test_cone_retract_and_lq_perturbation(particle_spec):
    theory = particle_spec.theory
    sampler = FormSampler(theory, seed=5)
    cones = [sampler.cone_element(int(sampler.rng.integers(-1, 2))) for _ in range(10)]
    functionals = [sampler.functional(int(sampler.rng.integers(-1, 2))) for _ in range(10)]
    checks = verify_retract(cone_retract(), functionals, cones)
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]

    Q = particle_spec.Q
    cone = HamiltonianCone(Q)
    shifted = perturb(cone_retract(), Perturbation(lambda c: -cone_lie(Q, c), cone.bound))
    for c in cones:
        assert shifted.h(c) == cone.h_tilde(c)
    for x in functionals:
        assert shifted.f(x) == cone.i_tilde(x)
        assert shifted.d_a(x) == cone.d_ham(x)


def test_composite_homotopy_is_cone_homotopy(particle_sampler):
    composite = corollary_retract()
    for _ in range(10):
        c = particle_sampler.cone_element(int(particle_sampler.rng.integers(-1, 2)))
        assert composite.h(c) == cone_homotopy(c)


def _scalar_retract() -> RetractDatum:
    """Q as a retract of itself with a zero homotopy, over plain fractions."""
    return RetractDatum.identity(lambda x: x - x, name="scalars")


def test_identity_retract():
    checks = verify_retract(_scalar_retract(), [Fraction(3)], [Fraction(1, 2), Fraction(0)])
    assert all(c.passed for c in checks)
    assert len(checks) == 6


def test_compose_with_identity(particle_sampler):
    anderson = anderson_retract()
    composed = compose(RetractDatum.identity(anderson.d_a, name="sources"), anderson)
    for _ in range(5):
        x = particle_sampler.vertical_form()
        assert composed.h(x) == anderson.h(x)
        assert composed.g(x) == anderson.g(x)


def test_geometric_series_terminates():
    assert geometric_series(Fraction(8), lambda x: x / 2 if x > 1 else x - x, 10, "halving") == 15


def test_non_nilpotent_perturbation():
    r = RetractDatum(
        name="loop",
        d_a=lambda a: a - a,
        d_b=lambda b: b - b,
        f=lambda a: a,
        g=lambda b: b,
        h=lambda b: b,
    )
    looping = perturb(r, Perturbation(lambda b: -b, bound=3))
    with pytest.raises(NilpotencyError):
        looping.h(Fraction(1))
