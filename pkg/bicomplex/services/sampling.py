"""Seeded random local forms, fields and cone elements for sample-based checks."""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Optional

import numpy as np

from bicomplex.config import get_settings
from bicomplex.services.calculus import EvolutionaryField
from bicomplex.services.homotopy import ConeElement, functional_projector, include
from bicomplex.services.localforms import (
    BASE,
    HORIZONTAL,
    JET,
    VERTICAL,
    Generator,
    LocalForm,
    Theory,
    monomial_degrees,
    normalize,
)

logger = logging.getLogger(__name__)
settings = get_settings()


class FormSampler:
    """Random generator of local forms for one theory.

    Every draw goes through a ``numpy.random.Generator`` so that a seed fixes
    the whole sample set.
    """

    def __init__(
        self,
        theory: Theory,
        seed: Optional[int] = None,
        max_order: int = 2,
        max_jets: int = 2,
        max_coordinates: int = 1,
        max_terms: int = 3,
    ):
        self.theory = theory
        self.rng = np.random.default_rng(settings.default_seed if seed is None else seed)
        self.max_order = min(max_order, theory.jet_cap - 1)
        self.max_jets = max_jets
        self.max_coordinates = max_coordinates
        self.max_terms = max_terms

    def _orders(self) -> tuple[int, ...]:
        n = self.theory.dimension
        total = int(self.rng.integers(0, self.max_order + 1))
        counts = [0] * n
        for _ in range(total):
            counts[int(self.rng.integers(0, n))] += 1
        return tuple(counts)

    def _field(self) -> int:
        return int(self.rng.integers(0, self.theory.n_fields))

    def _coefficient(self) -> Fraction:
        value = int(self.rng.integers(1, 4)) * (1 if self.rng.random() < 0.5 else -1)
        if self.rng.random() < 0.25:
            return Fraction(value, int(self.rng.integers(2, 4)))
        return Fraction(value)

    def monomial(self, vfd: int, hfd: int) -> LocalForm:
        """One random term of the given bidegree (possibly zero)."""
        n = self.theory.dimension
        factors: list[Generator] = []
        for i in self.rng.permutation(n)[:hfd]:
            factors.append((HORIZONTAL, -1, (), int(i)))
        for _ in range(vfd):
            factors.append((VERTICAL, self._field(), self._orders(), -1))
        for _ in range(int(self.rng.integers(0, self.max_jets + 1))):
            factors.append((JET, self._field(), self._orders(), -1))
        for _ in range(int(self.rng.integers(0, self.max_coordinates + 1))):
            factors.append((BASE, -1, (), int(self.rng.integers(0, n))))
        return normalize(self.theory, self._coefficient(), factors)

    def form(
        self, vfd: int, hfd: int, ghost: Optional[int] = None, attempts: int = 40
    ) -> LocalForm:
        """A random form of bidegree (vfd, hfd); ghost-homogeneous when requested."""
        terms = int(self.rng.integers(1, self.max_terms + 1))
        parts: list[LocalForm] = []
        for _ in range(attempts):
            if len(parts) >= terms:
                break
            term = self.monomial(vfd, hfd)
            if not term:
                continue
            if ghost is not None:
                mono = next(iter(term.terms))
                if monomial_degrees(self.theory, mono).ghd != ghost:
                    continue
            parts.append(term)
        return LocalForm.sum(self.theory, parts)

    def mixed_form(self) -> LocalForm:
        """A random inhomogeneous form spread over several bidegrees."""
        n = self.theory.dimension
        parts = [
            self.form(int(self.rng.integers(0, 3)), int(self.rng.integers(0, n + 1)))
            for _ in range(2)
        ]
        return LocalForm.sum(self.theory, parts)

    def vertical_form(self) -> LocalForm:
        """A random form of vertical degree one or two."""
        n = self.theory.dimension
        return self.form(int(self.rng.integers(1, 3)), int(self.rng.integers(0, n + 1)))

    def field(self, ghost: int) -> EvolutionaryField:
        """A random evolutionary field of the given ghost degree."""
        comps = {
            a: self.form(0, 0, ghost=ghost + f.ghost) for a, f in enumerate(self.theory.fields)
        }
        return EvolutionaryField.from_mapping(self.theory, ghost, comps)

    def base_form(self, hfd: int) -> LocalForm:
        """A random polynomial form on the base."""
        n = self.theory.dimension
        parts = []
        for _ in range(int(self.rng.integers(1, self.max_terms + 1))):
            factors: list[Generator] = [
                (HORIZONTAL, -1, (), int(i)) for i in self.rng.permutation(n)[:hfd]
            ]
            for _ in range(int(self.rng.integers(0, 3))):
                factors.append((BASE, -1, (), int(self.rng.integers(0, n))))
            parts.append(normalize(self.theory, self._coefficient(), factors))
        return LocalForm.sum(self.theory, parts)

    def cone_element(self, ped: int) -> ConeElement:
        """A random cone element of cone degree ``ped``."""
        n = self.theory.dimension
        hfd = int(self.rng.integers(0, n + 1))
        ghost = ped + n - hfd
        body = self.form(0, hfd, ghost=ghost)
        q = ped + n + 1
        base = self.base_form(q) if 0 <= q <= n and self.rng.random() < 0.5 else None
        return ConeElement.of(body, base)

    def hamiltonian_body(self, ped: int, lower: bool = True) -> LocalForm:
        """A top-degree body of the given ped, optionally with a sub-top component."""
        n = self.theory.dimension
        body = self.form(0, n, ghost=ped)
        if lower:
            body = body + self.form(0, n - 1, ghost=ped + 1)
        return body

    def hamiltonian_element(self, ped: int, lower: bool = True) -> ConeElement:
        return include(self.hamiltonian_body(ped, lower))

    def functional(self, ped: int) -> LocalForm:
        """A random local functional: the projection of a random top body."""
        return functional_projector(include(self.form(0, self.theory.dimension, ghost=ped)))
