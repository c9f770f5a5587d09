"""Exact finite probability spaces, distributions and stochastic kernels.

All masses are `fractions.Fraction`, so every operation here is exact and
equality checks never need tolerances.  Types are immutable after
construction and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import DomainMismatchError

ZERO = Fraction(0)
ONE = Fraction(1)


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


@dataclass(frozen=True)
class FiniteSpace:
    """A finite set of distinct, nonempty string labels in a fixed order.

    The order given at construction is canonical: all iteration, summation
    and serialization follow it.
    """

    points: tuple[str, ...]

    def __init__(self, points: Iterable[str]):
        pts = tuple(points)
        if not pts:
            raise DomainMismatchError("a finite space needs at least one point")
        seen = set()
        for label in pts:
            if not isinstance(label, str) or not label:
                raise DomainMismatchError(f"invalid point label {label!r}")
            if label in seen:
                raise DomainMismatchError(f"duplicate point label {label!r}")
            seen.add(label)
        object.__setattr__(self, "points", pts)

    def __contains__(self, label: str) -> bool:
        return label in self.points

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def index(self, label: str) -> int:
        return self.points.index(label)


@dataclass(frozen=True)
class FiniteDistribution:
    """An exact probability mass function on a FiniteSpace."""

    space: FiniteSpace
    mass: Mapping[str, Fraction] = field(compare=False)
    _masses: tuple[Fraction, ...] = field(init=False)

    def __init__(self, space: FiniteSpace, mass: Mapping[str, object]):
        for label in mass:
            if label not in space:
                raise DomainMismatchError(f"mass assigned to unknown point {label!r}")
        masses = tuple(_as_fraction(mass.get(x, ZERO)) for x in space)
        if any(m < 0 for m in masses):
            raise DomainMismatchError("negative mass")
        if sum(masses) != ONE:
            raise DomainMismatchError(f"masses sum to {sum(masses)}, not 1")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "mass", {x: m for x, m in zip(space, masses)})
        object.__setattr__(self, "_masses", masses)

    def __call__(self, label: str) -> Fraction:
        if label not in self.space:
            raise DomainMismatchError(f"{label!r} is not a point of the space")
        return self.mass[label]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return self.space == other.space and self._masses == other._masses

    def __hash__(self):
        return hash((self.space, self._masses))

    def support(self) -> tuple[str, ...]:
        return tuple(x for x in self.space if self.mass[x] > 0)

    def items(self):
        return ((x, self.mass[x]) for x in self.space)


def uniform(space: FiniteSpace) -> FiniteDistribution:
    w = Fraction(1, len(space))
    return FiniteDistribution(space, {x: w for x in space})


def dirac(x: str, space: FiniteSpace) -> FiniteDistribution:
    """The point mass at x: the unit of the distribution monad."""
    if x not in space:
        raise DomainMismatchError(f"{x!r} is not a point of the space")
    return FiniteDistribution(space, {x: ONE})


def pushforward(
    p: FiniteDistribution, f: Mapping[str, str], target: FiniteSpace
) -> FiniteDistribution:
    """The image distribution of p along the point map f."""
    out: dict[str, Fraction] = {y: ZERO for y in target}
    for x in p.space:
        if x not in f:
            raise DomainMismatchError(f"map undefined at point {x!r}")
        y = f[x]
        if y not in target:
            raise DomainMismatchError(f"map sends {x!r} to {y!r}, outside the target space")
        out[y] += p(x)
    return FiniteDistribution(target, out)


def flatten(
    weights: Mapping[int, object] | list, inner: list[FiniteDistribution] | None = None
) -> FiniteDistribution:
    """Monad multiplication: mix finitely many distributions on one space.

    Accepts either flatten(weights, inner) with parallel sequences or
    flatten(pairs) with a list of (weight, distribution) pairs.
    """
    if inner is None:
        pairs = list(weights)
    else:
        pairs = list(zip(weights, inner))
    if not pairs:
        raise DomainMismatchError("cannot flatten an empty mixture")
    space = pairs[0][1].space
    total = sum(_as_fraction(w) for w, _ in pairs)
    if total != ONE:
        raise DomainMismatchError(f"outer weights sum to {total}, not 1")
    out = {x: ZERO for x in space}
    for w, d in pairs:
        if d.space != space:
            raise DomainMismatchError("mixture components live on different spaces")
        w = _as_fraction(w)
        for x in space:
            out[x] += w * d(x)
    return FiniteDistribution(space, out)


@dataclass(frozen=True)
class StochasticKernel:
    """A source-indexed family of distributions on a common target space."""

    source: FiniteSpace
    target: FiniteSpace
    rows: Mapping[str, FiniteDistribution]

    def __init__(
        self,
        source: FiniteSpace,
        target: FiniteSpace,
        rows: Mapping[str, FiniteDistribution],
    ):
        fixed: dict[str, FiniteDistribution] = {}
        for y in source:
            if y not in rows:
                raise DomainMismatchError(f"kernel has no row for source point {y!r}")
            row = rows[y]
            if row.space != target:
                raise DomainMismatchError(f"row at {y!r} lives on the wrong space")
            fixed[y] = row
        if len(rows) != len(source):
            extra = set(rows) - set(source.points)
            raise DomainMismatchError(f"rows given for unknown points {sorted(extra)}")
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "rows", fixed)

    def __call__(self, y: str) -> FiniteDistribution:
        if y not in self.source:
            raise DomainMismatchError(f"{y!r} is not a source point")
        return self.rows[y]

    def __eq__(self, other) -> bool:
        if not isinstance(other, StochasticKernel):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and all(self.rows[y] == other.rows[y] for y in self.source)
        )

    def __hash__(self):
        return hash((self.source, self.target, tuple(self.rows[y] for y in self.source)))


def deterministic_kernel(
    f: Mapping[str, str], source: FiniteSpace, target: FiniteSpace
) -> StochasticKernel:
    return StochasticKernel(source, target, {y: dirac(f[y], target) for y in source})


def kernel_apply(s: StochasticKernel, q: FiniteDistribution) -> FiniteDistribution:
    """q viewed as a kernel from a one-point space, composed with s."""
    if q.space != s.source:
        raise DomainMismatchError("distribution space does not match kernel source")
    out = {x: ZERO for x in s.target}
    for y in s.source:
        qy = q(y)
        if qy == 0:
            continue
        row = s(y)
        for x in s.target:
            out[x] += qy * row(x)
    return FiniteDistribution(s.target, out)


def kleisli_compose(s: StochasticKernel, t: StochasticKernel) -> StochasticKernel:
    """(s . t)_z(x) = sum_y t_z(y) s_y(x), exactly."""
    if s.source != t.target:
        raise DomainMismatchError("kernel spaces do not compose")
    rows = {z: kernel_apply(s, t(z)) for z in t.source}
    return StochasticKernel(t.source, s.target, rows)


@dataclass(frozen=True)
class Disintegration:
    """A conditional kernel together with the rows that were chosen freely.

    Rows at points of the target with zero pushforward mass are not pinned
    down by the data; they are filled deterministically (uniform on the
    fiber, or uniform on the whole source space when the fiber is empty)
    and listed in null_fiber_rows.
    """

    kernel: StochasticKernel
    null_fiber_rows: tuple[str, ...]


def disintegrate(
    p: FiniteDistribution, f: Mapping[str, str], target: FiniteSpace
) -> Disintegration:
    """Conditional distributions of p given the value of f.

    For y with positive pushforward mass q(y), the row is p restricted to
    the fiber and renormalized; kernel_apply(kernel, q) reconstructs p
    exactly.
    """
    q = pushforward(p, f, target)
    fibers: dict[str, list[str]] = {y: [] for y in target}
    for x in p.space:
        fibers[f[x]].append(x)
    rows: dict[str, FiniteDistribution] = {}
    null_rows: list[str] = []
    for y in target:
        qy = q(y)
        if qy > 0:
            rows[y] = FiniteDistribution(
                p.space, {x: p(x) / qy for x in fibers[y]}
            )
        else:
            null_rows.append(y)
            if fibers[y]:
                w = Fraction(1, len(fibers[y]))
                rows[y] = FiniteDistribution(p.space, {x: w for x in fibers[y]})
            else:
                rows[y] = uniform(p.space)
    kernel = StochasticKernel(target, p.space, rows)
    return Disintegration(kernel, tuple(null_rows))
