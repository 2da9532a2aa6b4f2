"""Horizontal homotopy h∇ for forms of positive vertical degree.

The horizontal differential splits as ``dH = dH_jet + dH_x`` where ``dH_jet``
differentiates jet and vertical generators only and ``dH_x`` differentiates
the explicit coordinate dependence. ``dH_jet`` preserves the multiset of
(kind, field) slots of a monomial and the vector ``g_i = sum J_i - [dx^i]``,
so it decomposes into finite-dimensional complexes ("pieces") on which an
exact Moore-Penrose pseudo-inverse is a homotopy. Perturbing by ``dH_x``
(which lowers the polynomial degree in the coordinates) gives a homotopy for
``dH`` itself; composing with ``1 - Pi`` in top degree yields the contract

    [dH, h∇] + I Pi = id   on vertical degree >= 1,   Pi h∇ = 0.
"""

from __future__ import annotations

import itertools
import logging
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from bicomplex.config import get_settings
from bicomplex.exceptions import BidegreeError, NilpotencyError
from bicomplex.services.calculus import dH, interior_euler
from bicomplex.services.localforms import (
    BASE,
    HORIZONTAL,
    JET,
    VERTICAL,
    LocalForm,
    Monomial,
    Theory,
    monomial_bidegree,
    normalize,
)
from bicomplex.utils.metrics import metrics

logger = logging.getLogger(__name__)
settings = get_settings()

PieceKey = tuple[tuple[tuple[tuple[int, int], int], ...], tuple[int, ...]]


def split_coordinates(mono: Monomial) -> tuple[Monomial, Monomial]:
    """Split a monomial into its base-coordinate factor and the rest."""
    base = tuple(item for item in mono if item[0][0] == BASE)
    rest = tuple(item for item in mono if item[0][0] != BASE)
    return base, rest


def piece_key(theory: Theory, mono: Monomial) -> PieceKey:
    """Invariants of ``dH_jet`` on a coordinate-free monomial."""
    slots: dict[tuple[int, int], int] = {}
    g = [0] * theory.dimension
    for gen, exp in mono:
        kind = gen[0]
        if kind in (JET, VERTICAL):
            slots[(kind, gen[1])] = slots.get((kind, gen[1]), 0) + exp
            for i, k in enumerate(gen[2]):
                g[i] += k * exp
        elif kind == HORIZONTAL:
            g[gen[3]] -= exp
    return tuple(sorted(slots.items())), tuple(g)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Weak compositions of ``total`` into ``parts`` ordered parts."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def piece_basis(theory: Theory, key: PieceKey, q: int) -> list[Monomial]:
    """Canonical monomials of horizontal degree ``q`` in a piece."""
    slots, g = key
    instances = [slot for slot, count in slots for _ in range(count)]
    n = theory.dimension
    found: set[Monomial] = set()
    for subset in itertools.combinations(range(n), q):
        totals = [g[i] + (1 if i in subset else 0) for i in range(n)]
        if any(t < 0 for t in totals):
            continue
        per_axis = [list(_compositions(t, len(instances))) for t in totals]
        for choice in itertools.product(*per_axis):
            factors = []
            for s, (kind, a) in enumerate(instances):
                orders = tuple(choice[i][s] for i in range(n))
                factors.append((kind, a, orders, -1))
            factors.extend((HORIZONTAL, -1, (), i) for i in subset)
            form = normalize(theory, 1, factors)
            found.update(form.terms)
    return sorted(found)


def _to_domain(rows: list[list[Fraction]], shape: tuple[int, int]) -> DomainMatrix:
    return DomainMatrix(
        [[QQ(v.numerator, v.denominator) for v in row] for row in rows], shape, QQ
    )


def pseudo_inverse(rows: list[list[Fraction]], shape: tuple[int, int]) -> list[list[Fraction]]:
    """Exact Moore-Penrose pseudo-inverse via a full-rank factorization.

    With ``d = C R`` (C the pivot columns, R the nonzero rows of the reduced
    row echelon form) the pseudo-inverse is ``R^T (R R^T)^-1 (C^T C)^-1 C^T``.
    """
    m, k = shape
    zero = [[Fraction(0)] * m for _ in range(k)]
    if m == 0 or k == 0:
        return zero
    d = _to_domain(rows, shape)
    rref, pivots = d.rref()
    r = len(pivots)
    if r == 0:
        return zero
    c = d.extract(list(range(m)), list(pivots))
    rr = rref.extract(list(range(r)), list(range(k)))
    rt = rr.transpose()
    ct = c.transpose()
    pinv = rt * (rr * rt).inv() * (ct * c).inv() * ct
    matrix = pinv.to_Matrix()
    return [
        [Fraction(int(matrix[i, j].p), int(matrix[i, j].q)) for j in range(m)] for i in range(k)
    ]


class _Block:
    """Pseudo-inverse of ``dH_jet`` from degree q - 1 to q within one piece."""

    __slots__ = ("lower", "upper_index", "pinv")

    def __init__(self, lower: list[Monomial], upper: list[Monomial], pinv: list[list[Fraction]]):
        self.lower = lower
        self.upper_index = {mono: j for j, mono in enumerate(upper)}
        self.pinv = pinv


class HorizontalHomotopy:
    """The horizontal homotopy of one theory with its block cache."""

    def __init__(self, theory: Theory):
        self.theory = theory
        self._blocks: dict[tuple[PieceKey, int], _Block] = {}

    @property
    def cache_size(self) -> int:
        return len(self._blocks)

    def _block(self, key: PieceKey, q: int) -> _Block:
        cache_key = (key, q)
        if cache_key not in self._blocks:
            theory = self.theory
            lower = piece_basis(theory, key, q - 1)
            upper = piece_basis(theory, key, q)
            index = {mono: i for i, mono in enumerate(upper)}
            rows = [[Fraction(0)] * len(lower) for _ in upper]
            for j, mono in enumerate(lower):
                image = dH(LocalForm.from_monomial(theory, mono), base=False, capped=False)
                for out, coeff in image.terms.items():
                    rows[index[out]][j] = coeff
            pinv = pseudo_inverse(rows, (len(upper), len(lower)))
            self._blocks[cache_key] = _Block(lower, upper, pinv)
            logger.debug(
                f"Cached horizontal block q={q} ({len(lower)}x{len(upper)}); "
                f"{len(self._blocks)} blocks total"
            )
            metrics.update_cache_size(len(self._blocks))
        return self._blocks[cache_key]

    def jet_homotopy(self, x: LocalForm) -> LocalForm:
        """h_0: the blockwise pseudo-inverse of ``dH_jet``.

        Coordinate factors are even scalars for ``dH_jet`` and pass through.
        """
        theory = self.theory
        grouped: dict[tuple[PieceKey, int], dict[Monomial, dict[Monomial, Fraction]]] = {}
        for mono, coeff in x.terms.items():
            base, rest = split_coordinates(mono)
            q = monomial_bidegree(rest)[1]
            if q == 0:
                continue
            slot = grouped.setdefault((piece_key(theory, rest), q), {})
            slot.setdefault(base, {})[rest] = coeff

        acc: dict[Monomial, Fraction] = {}
        for (key, q), by_base in grouped.items():
            block = self._block(key, q)
            for base, vector in by_base.items():
                for i, out in enumerate(block.lower):
                    row = block.pinv[i]
                    value = sum(
                        (row[block.upper_index[m]] * c for m, c in vector.items()), Fraction(0)
                    )
                    if value:
                        # base coordinates sort first and are even
                        mono = base + out
                        acc[mono] = acc.get(mono, Fraction(0)) + value
        return LocalForm(theory, acc)

    def perturbed(self, x: LocalForm) -> LocalForm:
        """h_0 sum_k (-dH_x h_0)^k, finite since dH_x lowers the coordinate degree."""
        bound = _coordinate_degree(x) + 1 + settings.nilpotency_slack
        total = self.theory.zero()
        term = self.jet_homotopy(x)
        steps = 0
        while term:
            total = total + term
            steps += 1
            if steps > bound:
                raise NilpotencyError(f"Horizontal perturbation series exceeded {bound} steps")
            term = self.jet_homotopy(-dH(term, jets=False))
        return total

    def __call__(self, x: LocalForm) -> LocalForm:
        """h∇ on forms of vertical degree at least one."""
        if x.is_zero:
            return x
        if any(monomial_bidegree(m)[0] == 0 for m in x.terms):
            raise BidegreeError("Horizontal homotopy is only defined on vertical degree >= 1")
        top = x.top()
        return self.perturbed(x.below_top() + top - interior_euler(top))


def _coordinate_degree(x: LocalForm) -> int:
    return max(
        (sum(e for g, e in m if g[0] == BASE) for m in x.terms),
        default=0,
    )


@lru_cache(maxsize=32)
def homotopy_for(theory: Theory) -> HorizontalHomotopy:
    """Shared horizontal homotopy (and block cache) of a theory."""
    return HorizontalHomotopy(theory)


def horizontal_homotopy(x: LocalForm) -> LocalForm:
    """h∇(x) for x of vertical degree >= 1."""
    return homotopy_for(x.theory)(x)
