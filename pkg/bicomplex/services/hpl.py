"""Homological perturbation lemma over operator closures.

A retract datum packages two complexes ``(A, d_A)`` (small) and ``(B, d_B)``
(large) with chain maps ``f: A -> B``, ``g: B -> A`` and a homotopy ``h`` on B
such that ``id_B - f g = d_B h + h d_B``. Complexes here are spaces of local
forms or cone elements, so every identity is certified pointwise on samples.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

from bicomplex.exceptions import NilpotencyError

logger = logging.getLogger(__name__)


Operator = Callable[[Any], Any]


def _identity(x: Any) -> Any:
    return x


def _zero(x: Any) -> Any:
    return x - x


@dataclass(frozen=True)
class RetractDatum:
    """A deformation retract ``A <-> B`` with ``id_B - f g = [d_B, h]``.

    ``special`` marks the side conditions h^2 = 0, h f = 0 and g h = 0.
    """

    name: str
    d_a: Operator
    d_b: Operator
    f: Operator
    g: Operator
    h: Operator
    special: bool = False

    @classmethod
    def identity(cls, d: Operator, name: str = "identity") -> "RetractDatum":
        """The trivial retract of a complex onto itself."""
        return cls(name=name, d_a=d, d_b=d, f=_identity, g=_identity, h=_zero, special=True)


@dataclass(frozen=True)
class Perturbation:
    """A perturbation k of d_B with a nilpotency bound for (k h)."""

    k: Operator
    bound: int


def geometric_series(x: Any, step: Operator, bound: int, name: str) -> Any:
    """``x + step(x) + step(step(x)) + ...`` until a term vanishes."""
    total = x - x
    term = x
    count = 0
    while term:
        count += 1
        if count > bound:
            raise NilpotencyError(f"{name}: series did not terminate within {bound} terms")
        total = total + term
        term = step(term)
    return total


def perturb(r: RetractDatum, p: Perturbation) -> RetractDatum:
    """Transfer a retract along ``d_B -> d_B + k``.

    f~ = sum (-h k)^i f,  g~ = g sum (-k h)^i,  h~ = h sum (-k h)^i,
    d_A~ = d_A + g sum (-k h)^i k f.
    """
    k, h, bound = p.k, r.h, p.bound

    def minus_kh(y: Any) -> Any:
        return -k(h(y))

    def minus_hk(y: Any) -> Any:
        return -h(k(y))

    def f_tilde(a: Any) -> Any:
        return geometric_series(r.f(a), minus_hk, bound, f"{r.name}: f~")

    def g_tilde(b: Any) -> Any:
        return r.g(geometric_series(b, minus_kh, bound, f"{r.name}: g~"))

    def h_tilde(b: Any) -> Any:
        return h(geometric_series(b, minus_kh, bound, f"{r.name}: h~"))

    def d_a_tilde(a: Any) -> Any:
        return r.d_a(a) + r.g(geometric_series(k(r.f(a)), minus_kh, bound, f"{r.name}: d_A~"))

    def d_b_tilde(b: Any) -> Any:
        return r.d_b(b) + k(b)

    logger.debug(f"Perturbing retract {r.name} (bound {bound})")
    return RetractDatum(
        name=f"{r.name}~",
        d_a=d_a_tilde,
        d_b=d_b_tilde,
        f=f_tilde,
        g=g_tilde,
        h=h_tilde,
        special=r.special,
    )


def compose(r1: RetractDatum, r2: RetractDatum) -> RetractDatum:
    """Compose ``A <-> B`` (r1) with ``B <-> C`` (r2).

    ``f = f2 f1``, ``g = g1 g2`` and ``h = h2 + f2 h1 g2``.
    """

    def f(a: Any) -> Any:
        return r2.f(r1.f(a))

    def g(c: Any) -> Any:
        return r1.g(r2.g(c))

    def h(c: Any) -> Any:
        return r2.h(c) + r2.f(r1.h(r2.g(c)))

    return RetractDatum(
        name=f"{r1.name}*{r2.name}",
        d_a=r1.d_a,
        d_b=r2.d_b,
        f=f,
        g=g,
        h=h,
        special=False,
    )


@dataclass
class RetractCheck:
    """Outcome of one retract identity over a sample set."""

    identity: str
    samples: int
    residual: Optional[Any] = None

    @property
    def passed(self) -> bool:
        return self.residual is None


def _first_residual(pairs: Sequence[tuple[Any, Any]]) -> Optional[Any]:
    for lhs, rhs in pairs:
        residual = lhs - rhs
        if residual:
            return residual
    return None


def verify_retract(
    r: RetractDatum, samples_a: Sequence[Any], samples_b: Sequence[Any]
) -> list[RetractCheck]:
    """Check the chain-map and homotopy identities (and side conditions) on samples.

    Args:
        r: Retract datum to certify
        samples_a: Elements of the small complex
        samples_b: Elements of the large complex

    Returns:
        One check per identity, carrying the first nonzero residual
    """
    checks = [
        RetractCheck(
            "f d_A = d_B f",
            len(samples_a),
            _first_residual([(r.f(r.d_a(a)), r.d_b(r.f(a))) for a in samples_a]),
        ),
        RetractCheck(
            "g d_B = d_A g",
            len(samples_b),
            _first_residual([(r.g(r.d_b(b)), r.d_a(r.g(b))) for b in samples_b]),
        ),
        RetractCheck(
            "id - f g = d h + h d",
            len(samples_b),
            _first_residual(
                [(b - r.f(r.g(b)), r.d_b(r.h(b)) + r.h(r.d_b(b))) for b in samples_b]
            ),
        ),
    ]
    if r.special:
        checks.extend(
            [
                RetractCheck(
                    "h h = 0",
                    len(samples_b),
                    _first_residual([(r.h(r.h(b)), _zero(b)) for b in samples_b]),
                ),
                RetractCheck(
                    "h f = 0",
                    len(samples_a),
                    _first_residual([(r.h(r.f(a)), _zero(r.f(a))) for a in samples_a]),
                ),
                RetractCheck(
                    "g h = 0",
                    len(samples_b),
                    _first_residual([(r.g(r.h(b)), _zero(r.g(b))) for b in samples_b]),
                ),
            ]
        )
    for check in checks:
        if not check.passed:
            logger.warning(f"Retract {r.name}: identity '{check.identity}' fails on samples")
    return checks

