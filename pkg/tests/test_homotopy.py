"""Tests for the vertical and horizontal homotopies and the cone resolution."""

import pytest

from bicomplex.exceptions import BidegreeError, MembershipError
from bicomplex.services.calculus import dH, dV, interior_euler
from bicomplex.services.homotopy import (
    ConeElement,
    Development,
    cone_differential,
    cone_homotopy,
    functional_projector,
    include,
    is_local_functional,
    iv,
    pv,
    require_functional,
    source_differential,
    vertical_homotopy,
    zero_section_homotopy,
)
from bicomplex.services.horizontal import homotopy_for, horizontal_homotopy


@pytest.mark.parametrize("sampler", ["particle_sampler", "plane_sampler"])
def test_vertical_contract(sampler, request):
    """dV h_V + h_V dV + p* 0* = id, with the side conditions."""
    sampler = request.getfixturevalue(sampler)
    for _ in range(15):
        x = sampler.mixed_form()
        h = vertical_homotopy
        assert dV(h(x)) + h(dV(x)) + x.zero_section_pullback() == x
        assert h(h(x)).is_zero
        assert (dH(h(x)) + h(dH(x))).is_zero


@pytest.mark.parametrize("sampler", ["particle_sampler", "plane_sampler"])
def test_horizontal_contract(sampler, request):
    """dH h + h dH + Pi = id on forms of positive vertical degree."""
    sampler = request.getfixturevalue(sampler)
    for _ in range(15):
        x = sampler.vertical_form()
        h = horizontal_homotopy
        assert dH(h(x)) + h(dH(x)) + interior_euler(x) == x
        assert interior_euler(h(x)).is_zero
        assert h(h(x)).is_zero


def test_horizontal_homotopy_caches_blocks(particle, particle_sampler):
    homotopy = homotopy_for(particle)
    for _ in range(5):
        homotopy(particle_sampler.vertical_form())
    assert homotopy.cache_size > 0


def test_source_differential_squares_to_zero(particle_sampler):
    for i in range(10):
        source = interior_euler(particle_sampler.form(1 + i % 2, 1))
        assert source_differential(source_differential(source)).is_zero


@pytest.mark.parametrize("sampler", ["particle_sampler", "plane_sampler"])
def test_cone_resolution(sampler, request):
    """[D, H] + i P = id on the cone."""
    sampler = request.getfixturevalue(sampler)
    n = sampler.theory.dimension
    for _ in range(15):
        c = sampler.cone_element(int(sampler.rng.integers(-n, 2)))
        lhs = cone_differential(cone_homotopy(c)) + cone_homotopy(cone_differential(c))
        assert lhs + include(functional_projector(c)) == c
        assert functional_projector(cone_differential(c)).is_zero


def test_projector_on_free_particle(particle):
    """P(1/2 x_t^2 dt) = -1/2 x x_tt dt."""
    dt = particle.dx("t")
    x_t = particle.jet("x", "t")
    density = x_t * x_t * dt / 2
    expected = -(particle.jet("x") * particle.jet("x", "tt") * dt) / 2
    assert functional_projector(include(density)) == expected
    assert is_local_functional(expected)
    assert not is_local_functional(density)
    with pytest.raises(MembershipError):
        require_functional(density)


def test_cone_element_validation(particle):
    with pytest.raises(BidegreeError):
        ConeElement.of(particle.dv("x") * particle.dx("t"))
    with pytest.raises(BidegreeError):
        ConeElement.of(particle.jet("x"), base=particle.jet("x"))
    element = ConeElement.of(particle.jet("x+") * particle.dx("t"))
    assert element.degree() == -1
    base_only = ConeElement.of(particle.zero(), base=particle.dx("t"))
    assert base_only.degree() == -1


def test_development_components(particle_triple):
    dev = Development.from_form(particle_triple.omega)
    assert set(dev.components) == {0, 1}
    assert dev.to_form() == particle_triple.omega
    assert dev.ped() == -1


def test_cone_maps(particle_sampler):
    """I_V D = -dH I_V, I_V P_V = id on dV-exact forms, H = H_0* - P_V h I_V."""
    for _ in range(10):
        c = particle_sampler.cone_element(int(particle_sampler.rng.integers(-1, 2)))
        assert iv(cone_differential(c)) == -dH(iv(c))
        assert iv(pv(iv(c))) == iv(c)
        if iv(c):
            expected = zero_section_homotopy(c) - pv(horizontal_homotopy(iv(c)))
            assert cone_homotopy(c) == expected
