"""The relative-entropy functor on finite morphisms and its law checkers.

Values live in [0, inf], represented as Python floats with math.inf for the
infinite branch.  The multiplication conventions are inf * 0 = 0 * inf = 0
and inf * c = inf for c > 0.  Each per-point term computes the probability
ratio exactly as a Fraction before a single double-precision log, so a
morphism with an optimal hypothesis sums literal zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainMismatchError
from .pairs import CoherentPair, is_absolutely_coherent

INF = math.inf


def ext_mul(a: float, b: float) -> float:
    """Multiplication in [0, inf] with the inf * 0 = 0 convention."""
    if a == 0 or b == 0:
        return 0.0
    return a * b


def _ln_fraction(r: Fraction) -> float:
    # log via integer numerator/denominator; exact 0.0 when r == 1 and no
    # overflow for huge exact ratios
    if r == 1:
        return 0.0
    return math.log(r.numerator) - math.log(r.denominator)


def _kl_terms(p, m) -> dict[str, float] | None:
    """Per-point terms of KL(p || m), or None if p is not dominated by m."""
    terms: dict[str, float] = {}
    for x in p.space:
        px = p(x)
        if px == 0:
            terms[x] = 0.0
            continue
        mx = m(x)
        if mx == 0:
            return None
        terms[x] = float(px) * _ln_fraction(px / mx)
    return terms


def kl_divergence(p, m) -> float:
    """KL(p || m) for two exact distributions on one space, in nats."""
    if p.space != m.space:
        raise DomainMismatchError("distributions live on different spaces")
    terms = _kl_terms(p, m)
    if terms is None:
        return INF
    return max(0.0, math.fsum(terms[x] for x in p.space))


@dataclass(frozen=True)
class ReValue:
    """Relative entropy of a morphism, with its per-point breakdown."""

    value: float
    absolutely_coherent: bool
    per_point_terms: dict[str, float] | None

    def is_infinite(self) -> bool:
        return self.value == INF


def re_fin(pair: CoherentPair) -> ReValue:
    """Relative entropy of a coherent pair: KL of p against s applied to q.

    Infinite exactly when the pair is not absolutely coherent.
    """
    reconstructed = pair.hypothesis_pushforward()
    terms = _kl_terms(pair.p, reconstructed)
    if terms is None:
        return ReValue(INF, False, None)
    value = max(0.0, math.fsum(terms[x] for x in pair.p.space))
    return ReValue(value, True, terms)


@dataclass(frozen=True)
class LocalReDecomposition:
    """Per-fiber relative entropies and their q-weighted total."""

    entries: tuple[tuple[str, Fraction, float], ...]
    total: float


def local_re(pair: CoherentPair, y: str) -> float:
    """Relative entropy of the morphism restricted to the fiber over y.

    Equals KL(p_y || s_y) where p_y is the disintegration row.  Only
    meaningful for q(y) > 0; zero-mass fibers are excluded from totals by
    the inf * 0 convention.
    """
    if y not in pair.q.space:
        raise DomainMismatchError(f"{y!r} is not a point of the observation space")
    qy = pair.q(y)
    if qy == 0:
        raise DomainMismatchError(
            f"local relative entropy at {y!r} is undefined: q({y}) = 0"
        )
    p_y = {x: pair.p(x) / qy for x in pair.p.space if pair.f[x] == y and pair.p(x) > 0}
    s_y = pair.s(y)
    terms = []
    for x, px in p_y.items():
        sx = s_y(x)
        if sx == 0:
            return INF
        terms.append(float(px) * _ln_fraction(px / sx))
    return max(0.0, math.fsum(terms))


def convex_decompose(pair: CoherentPair) -> LocalReDecomposition:
    """Split the pair's relative entropy into q-weighted local values.

    The weighted total agrees with re_fin: exactly +inf together, and
    within accumulated log rounding when finite.
    """
    entries = []
    parts = []
    for y in pair.q.space:
        qy = pair.q(y)
        if qy == 0:
            continue
        local = local_re(pair, y)
        entries.append((y, qy, local))
        parts.append(ext_mul(float(qy), local))
    if any(part == INF for part in parts):
        total = INF
    else:
        total = math.fsum(parts)
    return LocalReDecomposition(tuple(entries), total)


@dataclass(frozen=True)
class FunctorialityCheck:
    """Both sides of the composition identity for relative entropy."""

    first: float
    second: float
    composite: float
    residual: float | None          # set when all three values are finite
    infinite_agreement: bool | None  # set when any value is infinite

    def holds(self, tol: float = 1e-10) -> bool:
        if self.residual is not None:
            return abs(self.residual) < tol
        return bool(self.infinite_agreement)


def check_functoriality(first: CoherentPair, second: CoherentPair) -> FunctorialityCheck:
    """Compare RE(second . first) against RE(first) + RE(second)."""
    from .pairs import compose_pairs

    composite = compose_pairs(first, second)
    a = re_fin(first).value
    b = re_fin(second).value
    c = re_fin(composite).value
    if a == INF or b == INF or c == INF:
        return FunctorialityCheck(a, b, c, None, c == INF and (a == INF or b == INF))
    return FunctorialityCheck(a, b, c, c - a - b, None)


@dataclass(frozen=True)
class LscCheck:
    liminf_est: float
    satisfied: bool


def check_lsc_on_sequence(
    target: CoherentPair, approximants: list[CoherentPair], tol: float = 1e-9
) -> LscCheck:
    """Spot-check lower semicontinuity along a caller-supplied sequence.

    The caller asserts that the approximants converge strongly to the
    target; this only compares the target's value against the running
    minimum of the tail.
    """
    if not approximants:
        raise DomainMismatchError("need at least one approximant")
    liminf = INF
    for pair in approximants:
        liminf = min(liminf, re_fin(pair).value)
    value = re_fin(target).value
    return LscCheck(liminf, value <= liminf + tol)


def scaled_functor(c: float, pair: CoherentPair) -> float:
    """c times the pair's relative entropy, with inf * 0 = 0."""
    if c < 0:
        raise DomainMismatchError("scale must be nonnegative")
    return ext_mul(c, re_fin(pair).value)
