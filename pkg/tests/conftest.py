"""Test configuration and fixtures."""

from pathlib import Path

import numpy as np
import pytest

from bicomplex.config import get_settings
from bicomplex.services import bv
from bicomplex.services.certification import Session
from bicomplex.services.localforms import Theory
from bicomplex.services.reporting import Checker
from bicomplex.services.sampling import FormSampler
from bicomplex.services.spec_parser import parse_spec

SPECS = Path(__file__).resolve().parents[1] / "specs"


def load_spec(name: str) -> bv.TheorySpec:
    path = SPECS / f"{name}.spec"
    return parse_spec(path.read_text(encoding="utf-8"), name=name)


@pytest.fixture
def settings():
    """Get test settings."""
    return get_settings()


@pytest.fixture
def rng():
    """Seeded numpy generator."""
    return np.random.default_rng(7)


@pytest.fixture(scope="session")
def particle_spec() -> bv.TheorySpec:
    return load_spec("particle")


@pytest.fixture(scope="session")
def lax_spec() -> bv.TheorySpec:
    return load_spec("particle_lax")


@pytest.fixture(scope="session")
def broken_spec() -> bv.TheorySpec:
    return load_spec("broken")


@pytest.fixture(scope="session")
def cs3_spec() -> bv.TheorySpec:
    return load_spec("cs3")


@pytest.fixture(scope="session")
def particle(particle_spec) -> Theory:
    """The particle theory: coordinate t, fields x (ghost 0) and x+ (ghost -1)."""
    return particle_spec.theory


@pytest.fixture(scope="session")
def plane() -> Theory:
    """A two-dimensional theory with an even and an odd field."""
    return Theory.build(2, {"u": 0, "c": 1}, ["x", "y"])


@pytest.fixture(scope="session")
def particle_triple(particle_spec) -> bv.HamiltonianTriple:
    return bv.triple_for(particle_spec, bv.develop(particle_spec))


@pytest.fixture(scope="session")
def cs3_triple(cs3_spec) -> bv.HamiltonianTriple:
    return bv.canonical_triple(bv.develop(cs3_spec))


@pytest.fixture
def particle_sampler(particle) -> FormSampler:
    return FormSampler(particle, seed=7)


@pytest.fixture
def plane_sampler(plane) -> FormSampler:
    return FormSampler(plane, seed=11, max_order=1, max_jets=2, max_coordinates=1, max_terms=2)


@pytest.fixture
def particle_session(particle_spec) -> Session:
    return Session(spec=particle_spec, samples=4, seed=3)


@pytest.fixture
def checker() -> Checker:
    return Checker("test", "particle", seed=0)


@pytest.fixture
def spec_text() -> str:
    """Minimal particle document."""
    return (SPECS / "particle.spec").read_text(encoding="utf-8")
