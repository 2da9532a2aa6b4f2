"""Tests for developments, Hamiltonian brackets and the L-infinity tower."""

from fractions import Fraction

import pytest

from bicomplex.exceptions import (
    ArityError,
    CompatibilityError,
    MaurerCartanError,
    NotHamiltonianError,
)
from bicomplex.services import bv
from bicomplex.services.calculus import dH, field_bracket, lie_derivative
from bicomplex.services.homotopy import functional_projector, include
from bicomplex.services.linfty import (
    BracketCalculus,
    LInfinityStructure,
    PairingMatrix,
    alternative_horizontal_homotopy,
    build_development,
    development_difference,
)
from bicomplex.services.localforms import Theory
from bicomplex.services.sampling import FormSampler


@pytest.fixture(scope="module")
def calc(particle_triple) -> BracketCalculus:
    return bv.calculus_for(particle_triple)


@pytest.fixture
def hamiltonian_sampler(particle):
    return FormSampler(particle, seed=19)


def test_particle_development(particle_spec):
    """omega• = omega + dV x ^ dV x_t."""
    theory = particle_spec.theory
    dev = build_development(particle_spec.omega, particle_spec.Q)
    assert dev.certified
    assert dev.k == -1
    expected = particle_spec.omega + theory.dv("x") * theory.dv("x", "t")
    assert dev.form == expected


def test_alternative_development_differs_by_exact_form(particle_spec):
    first = build_development(particle_spec.omega, particle_spec.Q)
    second = build_development(
        particle_spec.omega, particle_spec.Q, alternative_horizontal_homotopy
    )
    assert second.certified
    eta = development_difference(first, second)
    Q = particle_spec.Q
    assert second.form - first.form == dH(eta) - lie_derivative(Q, eta)


def test_development_rejects_broken_field(broken_spec):
    with pytest.raises(CompatibilityError, match="Pi L_Q omega"):
        build_development(broken_spec.omega, broken_spec.Q)


def test_lagrangian_field_is_minus_q(calc, particle_triple):
    X = calc.hamiltonian_vector_field(particle_triple.L)
    assert X == -particle_triple.Q


def test_pairing_matrix():
    theory = Theory.build(1, {"x": 0, "x+": -1, "y": 0}, ["t"])
    omega = theory.dv("x") * theory.dv("x+") * theory.volume()
    with pytest.raises(NotHamiltonianError):
        PairingMatrix(omega).inverse(0)
    curved = theory.jet("y") * omega
    with pytest.raises(NotHamiltonianError):
        PairingMatrix(curved)


def test_bracket_skew_symmetry(calc, hamiltonian_sampler):
    rng = hamiltonian_sampler.rng
    for _ in range(5):
        x = hamiltonian_sampler.hamiltonian_element(-1 + int(rng.integers(0, 3)))
        y = hamiltonian_sampler.hamiltonian_element(-1 + int(rng.integers(0, 3)))
        for kind in ("S", "A", "B"):
            lhs = calc.bracket(kind, x, y)
            rhs = calc.bracket(kind, y, x).scale(calc.sigma(x, y))
            assert (lhs + rhs).is_zero


def test_vector_field_compatibility(calc, hamiltonian_sampler):
    """X_{F,G} = [X_F, X_G]."""
    for _ in range(5):
        x = hamiltonian_sampler.hamiltonian_element(-1)
        y = hamiltonian_sampler.hamiltonian_element(0)
        expected = field_bracket(calc.pair(x).X, calc.pair(y).X)
        found = calc.hamiltonian_vector_field(calc.bracket_s(x, y).body)
        if expected.is_zero:
            assert found.is_zero
        else:
            assert found == expected


def test_b_structure_and_s_tower_jacobi(calc, hamiltonian_sampler):
    tower, b = calc.s_tower(), calc.b_structure()
    assert tower.max_arity == 3
    for m in (1, 2, 3):
        for _ in range(3):
            samples = [
                hamiltonian_sampler.hamiltonian_element(
                    -1 + int(hamiltonian_sampler.rng.integers(0, 3))
                )
                for _ in range(m)
            ]
            assert not b.jacobi(samples)
            assert not tower.jacobi(samples)


def test_projected_jacobiator_vanishes(calc, hamiltonian_sampler):
    for _ in range(3):
        x, y, z = (hamiltonian_sampler.hamiltonian_element(-1) for _ in range(3))
        assert functional_projector(calc.jacobiator("S", x, y, z)).is_zero
        assert not calc.jacobiator("B", x, y, z)


def test_lagrangian_is_maurer_cartan(calc, particle_triple):
    ell = include(particle_triple.L)
    assert not calc.b_structure().mc_residual(ell)
    functional = functional_projector(ell)
    assert calc.bracket_ham(functional, functional).is_zero


def test_functional_dgla(calc, particle):
    sampler = FormSampler(particle, seed=23)
    ham = calc.ham_structure()
    for _ in range(5):
        xs = [sampler.functional(int(sampler.rng.integers(-1, 2))) for _ in range(3)]
        assert not ham.jacobi(xs[:1])
        assert not ham.jacobi(xs[:2])
        assert not ham.jacobi(xs)


def test_quasi_inverse(calc, particle):
    sampler = FormSampler(particle, seed=29)
    for _ in range(4):
        x, y = sampler.functional(0), sampler.functional(0)
        assert functional_projector(calc.quasi_inverse(1, x)) == x
        assert functional_projector(calc.quasi_inverse(2, x, y)).is_zero
        assert not calc.morphism_residual(x, y)
    with pytest.raises(ArityError):
        calc.quasi_inverse(3, x, y, y)
    with pytest.raises(ArityError):
        calc.quasi_inverse(2, x)


def test_jacobi_arity_limit(particle):
    structure = LInfinityStructure(
        name="zero", degree=lambda x: 0, zero=particle.zero, brackets={1: lambda x: x - x}
    )
    with pytest.raises(ArityError):
        structure.jacobi([particle.zero()] * 5)


def test_register_rejects_wrong_field(particle_triple):
    calc = BracketCalculus(particle_triple.ambient)
    with pytest.raises(NotHamiltonianError):
        calc.register(particle_triple.L, particle_triple.Q)
    assert calc.hamiltonian_vector_field(particle_triple.theory.zero()).is_zero


def test_twisted_differential_squares_to_zero(calc, particle_triple, hamiltonian_sampler):
    ell = functional_projector(include(particle_triple.L))
    twists = [
        calc.b_structure().twist(include(particle_triple.L)),
        calc.b_structure().twist(calc.push_mc(ell, "B")),
        calc.s_tower().twist(calc.push_mc(ell)),
    ]
    assert [t.max_arity for t in twists] == [2, 2, 3]
    for ped in (-1, 0, 1):
        x = hamiltonian_sampler.hamiltonian_element(ped)
        for twisted in twists:
            assert not twisted.jacobi([x])


def test_twist_by_zero_keeps_structure(calc, hamiltonian_sampler):
    tower = calc.s_tower()
    twisted = tower.twist(tower.zero())
    x = hamiltonian_sampler.hamiltonian_element(0)
    y = hamiltonian_sampler.hamiltonian_element(-1)
    assert not twisted.bracket(x) - tower.bracket(x)
    assert not twisted.bracket(x, y) - tower.bracket(x, y)


def test_twist_rejects_non_maurer_cartan(calc, particle):
    """(0, x+ dt) has l1 = (0, -x_tt dt) and vanishing brackets with itself."""
    a = include(particle.jet("x+") * particle.dx("t"))
    for structure in (calc.b_structure(), calc.s_tower()):
        with pytest.raises(MaurerCartanError, match="non Maurer-Cartan") as exc_info:
            structure.twist(a)
        assert exc_info.value.residual


def test_free_tower_twisted_by_lagrangian(calc, particle_triple, hamiltonian_sampler):
    """Twisting the Q = 0 tower by I_MC(l) gives D + {L•, .}^S + 1/2 {L•, L•, .}^S."""
    free = calc.untwisted()
    assert free.development.Q.is_zero
    assert free.development.form == particle_triple.ambient.anchor
    ell = functional_projector(include(particle_triple.L))
    twisted = free.s_tower().twist(free.push_mc(ell))
    lagrangian = include(particle_triple.L)
    for ped in (-1, 0, 1):
        x = hamiltonian_sampler.hamiltonian_element(ped)
        expected = (
            free.cone.differential(x)
            + free.lambda2("S", lagrangian, x)
            + free.lambda3(lagrangian, lagrangian, x).scale(Fraction(1, 2))
        )
        assert not twisted.bracket(x) - expected
        assert not twisted.jacobi([x])


def test_three_bracket_vanishes_on_homotopy_image(calc, hamiltonian_sampler):
    for _ in range(3):
        x, y, z = (hamiltonian_sampler.hamiltonian_element(-1) for _ in range(3))
        image = calc.cone.h_tilde(z)
        assert not calc.three_bracket_s(x, y, image)
        assert not calc.three_bracket_s(image, x, y)
        assert not calc.lambda3(x, image, y)


@pytest.mark.slow
def test_quasi_inverse_arity_three(cs3_triple):
    cs_calc = bv.calculus_for(cs3_triple)
    sampler = FormSampler(cs3_triple.theory, seed=31)
    xs = [sampler.functional(0) for _ in range(3)]
    assert functional_projector(cs_calc.quasi_inverse(2, *xs[:2])).is_zero
    assert functional_projector(cs_calc.quasi_inverse(3, *xs)).is_zero
    assert not cs_calc.morphism_residual(*xs[:2])
    assert not cs_calc.morphism_residual(*xs)
    with pytest.raises(ArityError):
        cs_calc.quasi_inverse(5, *xs, *xs[:2])
