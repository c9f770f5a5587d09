"""Shared random-instance generators and independent oracles.

The oracles here deliberately avoid the library's own code paths: KL sums
are plain float arithmetic over mass dicts, and bin-mass references use a
dense midpoint grid.
"""

from __future__ import annotations

import math
import random
import string
from fractions import Fraction

from kernelflow.finite import (
    FiniteDistribution,
    FiniteSpace,
    StochasticKernel,
    pushforward,
)
from kernelflow.pairs import CoherentPair

INF = math.inf


def labels(count: int, prefix: str) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(count))


def rand_space(rng: random.Random, max_size: int, prefix: str) -> FiniteSpace:
    return FiniteSpace(labels(rng.randint(1, max_size), prefix))


def rand_masses(rng: random.Random, count: int, max_den: int = 64, full: bool = False):
    """Random exact masses with a common denominator <= max_den."""
    lo = count if full else 1
    d = rng.randint(max(lo, 2), max(max_den, lo + 1))
    if full:
        # one unit everywhere, spread the rest
        parts = [1] * count
        for _ in range(d - count):
            parts[rng.randrange(count)] += 1
    else:
        parts = [0] * count
        for _ in range(d):
            parts[rng.randrange(count)] += 1
    return [Fraction(k, d) for k in parts]


def rand_distribution(
    space: FiniteSpace, rng: random.Random, max_den: int = 64, full: bool = False
) -> FiniteDistribution:
    masses = rand_masses(rng, len(space), max_den, full)
    return FiniteDistribution(space, dict(zip(space.points, masses)))


def rand_map(
    rng: random.Random, source: FiniteSpace, target: FiniteSpace, onto: bool = False
) -> dict:
    if not onto:
        return {x: rng.choice(target.points) for x in source}
    # surjective: seed one source point per target point, then fill randomly
    if len(source) < len(target):
        raise ValueError("source too small for a surjection")
    xs = list(source.points)
    rng.shuffle(xs)
    f = dict(zip(xs, target.points))
    for x in xs[len(target):]:
        f[x] = rng.choice(target.points)
    return f


def rand_coherent_pair(
    rng: random.Random,
    max_x: int = 8,
    max_y: int = 4,
    absolutely: bool | None = None,
    optimal: bool = False,
    x_space: FiniteSpace | None = None,
    p: FiniteDistribution | None = None,
    prefix: str = "x",
    y_prefix: str = "y",
) -> CoherentPair:
    """A random coherent pair; absolutely=True forces full fiber support,
    absolutely=False forces a genuine support violation (needs a fiber with
    two p-positive points, retried until found)."""
    while True:
        xs = x_space if x_space is not None else rand_space(rng, max_x, prefix)
        ys = rand_space(rng, min(max_y, len(xs)), y_prefix)
        f = rand_map(rng, xs, ys, onto=True)
        pp = p if p is not None else rand_distribution(xs, rng, full=True)
        q = pushforward(pp, f, ys)
        fibers = {y: [x for x in xs if f[x] == y] for y in ys}
        if absolutely is False:
            rich = [
                y
                for y in ys
                if len([x for x in fibers[y] if pp(x) > 0]) >= 2
            ]
            if not rich:
                if x_space is not None:
                    raise ValueError("given space cannot host a support violation")
                continue
        rows = {}
        broken = False
        for y in ys:
            fiber = fibers[y]
            if q(y) == 0:
                rows[y] = FiniteDistribution(xs, {fiber[0]: 1})
                continue
            if optimal:
                rows[y] = FiniteDistribution(xs, {x: pp(x) / q(y) for x in fiber})
                continue
            support = list(fiber)
            if absolutely is False and not broken and y in rich:
                drop = rng.choice([x for x in fiber if pp(x) > 0])
                support = [x for x in fiber if x != drop]
                broken = True
            masses = rand_masses(rng, len(support), full=absolutely is True)
            rows[y] = FiniteDistribution(xs, dict(zip(support, masses)))
        if absolutely is False and not broken:
            continue
        s = StochasticKernel(ys, xs, rows)
        return CoherentPair(f, s, pp, q)


def rand_composable_pairs(
    rng: random.Random,
    absolutely: bool | None = None,
    optimal: bool = False,
    second_absolutely: bool | None = None,
):
    """Two composable coherent pairs (X,p)->(Y,q)->(Z,m)."""
    if second_absolutely is None:
        second_absolutely = absolutely
    while True:
        first = rand_coherent_pair(rng, absolutely=absolutely, optimal=optimal)
        try:
            second = rand_coherent_pair(
                rng,
                max_y=3,
                absolutely=second_absolutely,
                optimal=optimal,
                x_space=first.q.space,
                p=first.q,
                y_prefix="z",
            )
        except ValueError:
            continue  # first.q cannot host the requested violation; redraw
        return first, second


def direct_kl(p_mass: dict, q_mass: dict) -> float:
    """Independent KL oracle: plain float sum over a mass dict."""
    total = 0.0
    for x, px in p_mass.items():
        px = float(px)
        if px == 0:
            continue
        qx = float(q_mass.get(x, 0))
        if qx == 0:
            return INF
        total += px * math.log(px / qx)
    return total


def direct_re(pair: CoherentPair) -> float:
    """Independent relative-entropy oracle: rebuild s applied to q by hand."""
    mix = {x: 0.0 for x in pair.p.space}
    for y in pair.q.space:
        qy = float(pair.q(y))
        if qy == 0:
            continue
        row = pair.s(y)
        for x in pair.p.space:
            mix[x] += qy * float(row(x))
    total = 0.0
    for x in pair.p.space:
        px = float(pair.p(x))
        if px == 0:
            continue
        if mix[x] == 0:
            return INF
        total += px * math.log(px / mix[x])
    return total
