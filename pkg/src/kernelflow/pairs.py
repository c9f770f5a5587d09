"""Coherent pairs: measure-preserving maps bundled with hypothesis kernels.

A pair (f, s) from (X, p) to (Y, q) is coherent when q is the pushforward
of p along f and every row s_y is supported inside the fiber f^{-1}(y) --
equivalently, pushing s back along f returns each point mass, the diagram
characterization of coherence.  The fiber condition is checked at every y,
not just q-almost everywhere: a kernel row escaping a q-null fiber is
invisible to the pair's own entropy but can corrupt composites, and the
composition and additivity laws are exact only under the pointwise
reading.  In particular a point of Y with an empty fiber admits no
coherent hypothesis at all, so f must hit every point of Y.

Validation happens eagerly at construction and the report is cached on
the pair.  Two pairs are equal as morphisms when they agree q-almost
everywhere; rows over q-null fibers are witnesses, not data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import DomainMismatchError, IncoherentPairError
from .finite import (
    FiniteDistribution,
    FiniteSpace,
    StochasticKernel,
    deterministic_kernel,
    dirac,
    disintegrate,
    kernel_apply,
    kleisli_compose,
    pushforward,
)


@dataclass(frozen=True)
class CoherenceReport:
    is_coherent: bool
    violations: tuple[str, ...]


def validate_coherent(
    f: Mapping[str, str],
    s: StochasticKernel,
    p: FiniteDistribution,
    q: FiniteDistribution,
) -> CoherenceReport:
    """Check coherence of (f, s, p, q).  Never raises on well-shaped input."""
    violations: list[str] = []
    pushed = pushforward(p, f, q.space)
    for y in q.space:
        if pushed(y) != q(y):
            violations.append(
                f"pushforward mismatch at {y!r}: expected {q(y)}, got {pushed(y)}"
            )
    fibers = {y: [] for y in q.space}
    for x, y in f.items():
        fibers[y].append(x)
    for y in q.space:
        if not fibers[y]:
            violations.append(
                f"the fiber over {y!r} is empty; no hypothesis row can be coherent"
            )
            continue
        row = s(y)
        for x in row.support():
            if f[x] != y:
                violations.append(
                    f"hypothesis row at {y!r} puts mass on {x!r} outside the fiber"
                )
    return CoherenceReport(not violations, tuple(violations))


@dataclass(frozen=True)
class CoherentPair:
    """A validated morphism (f, s): (X, p) -> (Y, q)."""

    f: Mapping[str, str]
    s: StochasticKernel
    p: FiniteDistribution
    q: FiniteDistribution
    report: CoherenceReport

    def __init__(
        self,
        f: Mapping[str, str],
        s: StochasticKernel,
        p: FiniteDistribution,
        q: FiniteDistribution | None = None,
    ):
        if q is None:
            q = pushforward(p, f, s.source)
        if p.space != s.target or q.space != s.source:
            raise DomainMismatchError("pair shapes do not align with the kernel")
        report = validate_coherent(f, s, p, q)
        if not report.is_coherent:
            raise IncoherentPairError(
                "pair is not coherent: " + "; ".join(report.violations),
                report.violations,
            )
        object.__setattr__(self, "f", dict(f))
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "report", report)

    def __eq__(self, other) -> bool:
        # morphism equality: hypothesis rows only matter q-almost everywhere
        if not isinstance(other, CoherentPair):
            return NotImplemented
        return (
            self.p == other.p
            and self.q == other.q
            and all(self.f[x] == other.f[x] for x in self.p.space)
            and all(self.s(y) == other.s(y) for y in self.q.space if self.q(y) > 0)
        )

    def __hash__(self):
        rows = tuple(self.s(y) for y in self.q.space if self.q(y) > 0)
        return hash((self.p, self.q, rows, tuple(sorted(self.f.items()))))

    def hypothesis_pushforward(self) -> FiniteDistribution:
        """s applied to q; the pair's reconstruction of p."""
        return kernel_apply(self.s, self.q)


def is_absolutely_coherent(pair: CoherentPair) -> bool:
    """Whether p is dominated by the reconstruction s applied to q."""
    reconstructed = pair.hypothesis_pushforward()
    return all(reconstructed(x) > 0 for x in pair.p.support())


def is_optimal(pair: CoherentPair) -> bool:
    """Whether the hypothesis reconstructs p exactly."""
    return pair.hypothesis_pushforward() == pair.p


def compose_pairs(first: CoherentPair, second: CoherentPair) -> CoherentPair:
    """Compose (X,p)->(Y,q) with (Y,q)->(Z,m) to (g.f, s after t).

    Every hypothesis row is fiber-supported, so every composite row lands
    inside its composite fiber: coherence is closed under composition, and
    so is absolute coherence.
    """
    if first.q != second.p:
        raise DomainMismatchError("middle objects do not match")
    gf = {x: second.f[first.f[x]] for x in first.p.space}
    st = kleisli_compose(first.s, second.s)
    return CoherentPair(gf, st, first.p, second.q)


def identity_pair(p: FiniteDistribution) -> CoherentPair:
    ident = {x: x for x in p.space}
    s = deterministic_kernel(ident, p.space, p.space)
    return CoherentPair(ident, s, p, p)


def singleton_pair(
    p: FiniteDistribution,
    hypothesis: FiniteDistribution,
    label: str = "*",
) -> CoherentPair:
    """The morphism (X, p) -> ({label}, dirac) with the given hypothesis row.

    This is how a plain forecast about X enters the category: every fiber
    condition is vacuous, so any hypothesis distribution on X is allowed.
    """
    if hypothesis.space != p.space:
        raise DomainMismatchError("hypothesis lives on the wrong space")
    point = FiniteSpace((label,))
    s = StochasticKernel(point, p.space, {label: hypothesis})
    f = {x: label for x in p.space}
    return CoherentPair(f, s, p, dirac(label, point))


def disintegration_pair(
    p: FiniteDistribution, f: Mapping[str, str], target: FiniteSpace
) -> CoherentPair:
    """The optimal pair whose hypothesis is the exact disintegration of p."""
    dis = disintegrate(p, f, target)
    return CoherentPair(f, dis.kernel, p, pushforward(p, f, target))
