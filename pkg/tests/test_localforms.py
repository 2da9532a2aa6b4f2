"""Tests for the graded-commutative core."""

from fractions import Fraction

import pytest

from bicomplex.exceptions import InhomogeneousFormError, JetOrderExceeded, TheoryError
from bicomplex.services.calculus import total_derivative
from bicomplex.services.localforms import Theory, format_form


def test_koszul_signs(particle):
    """Odd generators anticommute and square to zero; even ones commute."""
    x, xp = particle.jet("x"), particle.jet("x+")
    dvx, dvxp = particle.dv("x"), particle.dv("x+")
    dt = particle.dx("t")

    assert (dt ^ dt).is_zero
    assert (dvx ^ dvx).is_zero
    assert (xp ^ xp).is_zero
    assert not (dvxp ^ dvxp).is_zero
    assert (dvxp ^ dvxp) == dvxp**2
    assert (dvx ^ dt) == -(dt ^ dvx)
    assert (xp ^ dvx) == -(dvx ^ xp)
    assert (x ^ dvx) == (dvx ^ x)


def test_associativity(particle_sampler):
    """The graded product is associative on random forms."""
    for _ in range(10):
        a, b, c = (particle_sampler.mixed_form() for _ in range(3))
        assert (a * b) * c == a * (b * c)


def test_graded_commutativity(plane_sampler):
    """a b = (-1)^{|a||b|} b a for homogeneous monomials."""
    for _ in range(10):
        a = plane_sampler.monomial(1, 1)
        b = plane_sampler.monomial(1, 0)
        if a.is_zero or b.is_zero:
            continue
        da = a.degree("ghd") + 2
        db = b.degree("ghd") + 1
        assert a * b == (b * a).scale((-1) ** (da * db))


def test_degrees(particle):
    """All degree functions of a homogeneous form."""
    form = particle.jet("x") * particle.dv("x+") * particle.dx("t")
    degrees = form.degrees()
    assert (degrees.vfd, degrees.hfd, degrees.hcd) == (1, 1, 0)
    assert degrees.ghd == -1
    assert degrees.ped == -1
    assert degrees.efd == 1


def test_zero_form_is_wildcard(particle):
    assert particle.zero().degree("ped") is None
    assert particle.zero().degrees().is_wildcard


def test_inhomogeneous_degree(particle):
    form = particle.jet("x") + particle.dx("t")
    with pytest.raises(InhomogeneousFormError):
        form.degree("hfd")
    assert form.is_homogeneous("ghd")


def test_mixing_theories(particle, plane):
    with pytest.raises(TheoryError):
        particle.jet("x") + plane.jet("u")


def test_unknown_names(particle):
    with pytest.raises(TheoryError):
        particle.jet("y")
    with pytest.raises(TheoryError):
        particle.dx("s")


def test_jet_cap():
    """Total derivatives stop at the configured jet order."""
    theory = Theory.build(1, {"x": 0}, ["t"], jet_cap=2)
    assert total_derivative(0, theory.jet("x", "t")) == theory.jet("x", "tt")
    with pytest.raises(JetOrderExceeded):
        total_derivative(0, theory.jet("x", "tt"))


def test_format(particle):
    form = particle.jet("x", "tt").scale(Fraction(1, 2)) - particle.dv("x+") * particle.dx("t")
    assert format_form(form) == "1/2 * x_{tt} - dV(x+) * dx(t)"
    assert format_form(particle.zero()) == "0"


def test_default_coordinates():
    theory = Theory.build(3, {"u": 0})
    assert theory.coordinates == ("x", "y", "z")
    assert theory.orders("xz") == (1, 0, 1)
