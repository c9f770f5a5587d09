"""Line-oriented text documents for morphisms, distributions and forecast logs.

All numbers are exact fraction strings ("num/den"); no floats ever appear
in input documents.  Serialization is canonical: fixed section order,
canonical point order, every fraction written with an explicit
denominator.  Parsing a canonicalized document and serializing it again is
byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DocumentParseError, DomainMismatchError, IncoherentPairError
from .finite import FiniteDistribution, FiniteSpace, StochasticKernel
from .pairs import CoherentPair, validate_coherent
from .scoring import ForecastRecord

MORPHISM_TAG = "morphism v1"
DISTRIBUTION_TAG = "distribution v1"
FORECAST_LOG_TAG = "forecast-log v1"
PIECEWISE_TAG = "piecewise v1"


def _fraction(token: str, lineno: int) -> Fraction:
    try:
        f = Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise DocumentParseError(f"not a fraction: {token!r}", lineno)
    if f < 0:
        raise DocumentParseError(f"negative mass {token!r}", lineno)
    return f


def _format_fraction(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _space(points, lineno: int) -> FiniteSpace:
    try:
        return FiniteSpace(tuple(points))
    except DomainMismatchError as exc:
        raise DocumentParseError(str(exc), lineno)


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


@dataclass(frozen=True)
class MorphismDocument:
    """Parsed morphism data, before coherence validation."""

    x_name: str
    y_name: str
    x_space: FiniteSpace
    y_space: FiniteSpace
    p: FiniteDistribution
    f: dict[str, str]
    s: StochasticKernel
    q: FiniteDistribution | None  # declared, optional; always recomputed

    def to_pair(self) -> CoherentPair:
        """Build the validated pair; raises IncoherentPairError on failure."""
        from .finite import pushforward

        pushed = pushforward(self.p, self.f, self.y_space)
        if self.q is not None and self.q != pushed:
            bad = [y for y in self.y_space if self.q(y) != pushed(y)]
            raise IncoherentPairError(
                "declared q does not match the pushforward of p at "
                + ", ".join(repr(y) for y in bad),
                tuple(f"declared q mismatch at {y!r}" for y in bad),
            )
        return CoherentPair(self.f, self.s, self.p, pushed)

    def validate(self):
        from .finite import pushforward

        q = self.q if self.q is not None else pushforward(self.p, self.f, self.y_space)
        return validate_coherent(self.f, self.s, self.p, q)


def parse_morphism(text: str) -> MorphismDocument:
    lines = list(_content_lines(text))
    if not lines or lines[0][1] != MORPHISM_TAG.split():
        lineno = lines[0][0] if lines else 1
        raise DocumentParseError(f"expected header {MORPHISM_TAG!r}", lineno)

    spaces: dict[str, tuple[int, FiniteSpace]] = {}
    space_order: list[str] = []
    p_raw: dict[str, Fraction] = {}
    q_raw: dict[str, Fraction] = {}
    f_map: dict[str, str] = {}
    s_raw: dict[str, dict[str, Fraction]] = {}
    last_line = lines[0][0]

    for lineno, tokens in lines[1:]:
        last_line = lineno
        kind = tokens[0]
        if kind == "space":
            if len(tokens) < 3:
                raise DocumentParseError("space needs a name and at least one point", lineno)
            name = tokens[1]
            if name in spaces:
                raise DocumentParseError(f"space {name!r} declared twice", lineno)
            spaces[name] = (lineno, _space(tokens[2:], lineno))
            space_order.append(name)
        elif kind == "map":
            if len(tokens) != 3:
                raise DocumentParseError("map needs: map <x> <y>", lineno)
            if tokens[1] in f_map:
                raise DocumentParseError(f"map defined twice at {tokens[1]!r}", lineno)
            f_map[tokens[1]] = tokens[2]
        elif kind in ("p", "q"):
            if len(tokens) != 3:
                raise DocumentParseError(f"{kind} needs: {kind} <point> <fraction>", lineno)
            target = p_raw if kind == "p" else q_raw
            if tokens[1] in target:
                raise DocumentParseError(f"{kind}({tokens[1]!r}) given twice", lineno)
            target[tokens[1]] = _fraction(tokens[2], lineno)
        elif kind == "s":
            if len(tokens) != 4:
                raise DocumentParseError("s needs: s <y> <x> <fraction>", lineno)
            row = s_raw.setdefault(tokens[1], {})
            if tokens[2] in row:
                raise DocumentParseError(f"s({tokens[1]!r}, {tokens[2]!r}) given twice", lineno)
            row[tokens[2]] = _fraction(tokens[3], lineno)
        else:
            raise DocumentParseError(f"unknown directive {kind!r}", lineno)

    if len(space_order) != 2:
        raise DocumentParseError(
            f"expected exactly two spaces, found {len(space_order)}", last_line
        )
    x_name, y_name = space_order
    x_space = spaces[x_name][1]
    y_space = spaces[y_name][1]

    def build_dist(raw, space, what, lineno):
        for label in raw:
            if label not in space:
                raise DocumentParseError(f"{what} names unknown point {label!r}", lineno)
        total = sum(raw.values())
        if total != 1:
            raise DocumentParseError(f"{what} masses sum to {total}, not 1", lineno)
        return FiniteDistribution(space, raw)

    if not p_raw:
        raise DocumentParseError("missing p masses", last_line)
    p = build_dist(p_raw, x_space, "p", last_line)
    for x in x_space:
        if x not in f_map:
            raise DocumentParseError(f"map undefined at point {x!r}", last_line)
        if f_map[x] not in y_space:
            raise DocumentParseError(
                f"map sends {x!r} to unknown point {f_map[x]!r}", last_line
            )
    rows = {}
    for y in y_space:
        raw = s_raw.get(y)
        if raw is None:
            raise DocumentParseError(f"missing hypothesis row for {y!r}", last_line)
        rows[y] = build_dist(raw, x_space, f"s row {y!r}", last_line)
    for y in s_raw:
        if y not in y_space:
            raise DocumentParseError(f"hypothesis row for unknown point {y!r}", last_line)
    s = StochasticKernel(y_space, x_space, rows)
    q = build_dist(q_raw, y_space, "q", last_line) if q_raw else None
    return MorphismDocument(x_name, y_name, x_space, y_space, p, f_map, s, q)


def serialize_morphism(doc: MorphismDocument, include_q: bool = False) -> str:
    out = [MORPHISM_TAG]
    out.append(f"space {doc.x_name} " + " ".join(doc.x_space))
    out.append(f"space {doc.y_name} " + " ".join(doc.y_space))
    for x in doc.x_space:
        out.append(f"map {x} {doc.f[x]}")
    for x in doc.x_space:
        out.append(f"p {x} {_format_fraction(doc.p(x))}")
    for y in doc.y_space:
        row = doc.s(y)
        for x in doc.x_space:
            if row(x) > 0:
                out.append(f"s {y} {x} {_format_fraction(row(x))}")
    if include_q and doc.q is not None:
        for y in doc.y_space:
            out.append(f"q {y} {_format_fraction(doc.q(y))}")
    return "\n".join(out) + "\n"


def parse_distribution(text: str) -> FiniteDistribution:
    lines = list(_content_lines(text))
    if not lines or lines[0][1] != DISTRIBUTION_TAG.split():
        raise DocumentParseError(f"expected header {DISTRIBUTION_TAG!r}", lines[0][0] if lines else 1)
    space = None
    raw: dict[str, Fraction] = {}
    last = lines[0][0]
    for lineno, tokens in lines[1:]:
        last = lineno
        if tokens[0] == "space":
            if space is not None:
                raise DocumentParseError("space declared twice", lineno)
            space = _space(tokens[1:], lineno)
        elif tokens[0] == "mass":
            if len(tokens) != 3:
                raise DocumentParseError("mass needs: mass <point> <fraction>", lineno)
            if tokens[1] in raw:
                raise DocumentParseError(f"mass({tokens[1]!r}) given twice", lineno)
            raw[tokens[1]] = _fraction(tokens[2], lineno)
        else:
            raise DocumentParseError(f"unknown directive {tokens[0]!r}", lineno)
    if space is None:
        raise DocumentParseError("missing space declaration", last)
    for label in raw:
        if label not in space:
            raise DocumentParseError(f"mass names unknown point {label!r}", last)
    if sum(raw.values()) != 1:
        raise DocumentParseError(f"masses sum to {sum(raw.values())}, not 1", last)
    return FiniteDistribution(space, raw)


@dataclass(frozen=True)
class ForecastLog:
    space: FiniteSpace
    records: tuple[ForecastRecord, ...]

    def forecasters(self) -> tuple[str, ...]:
        return tuple(sorted({r.forecaster for r in self.records}))

    def for_forecaster(self, name: str) -> tuple[ForecastRecord, ...]:
        return tuple(r for r in self.records if r.forecaster == name)


def parse_forecast_log(text: str) -> ForecastLog:
    lines = list(_content_lines(text))
    if not lines or lines[0][1] != FORECAST_LOG_TAG.split():
        raise DocumentParseError(f"expected header {FORECAST_LOG_TAG!r}", lines[0][0] if lines else 1)
    space = None
    records: list[ForecastRecord] = []
    seen: set[tuple[int, str]] = set()
    for lineno, tokens in lines[1:]:
        if tokens[0] == "outcomes":
            if space is not None:
                raise DocumentParseError("outcomes declared twice", lineno)
            space = _space(tokens[1:], lineno)
        elif tokens[0] == "forecast":
            if space is None:
                raise DocumentParseError("forecast before outcomes declaration", lineno)
            expected = 4 + len(space)
            if len(tokens) != expected:
                raise DocumentParseError(
                    f"forecast needs: forecast <round> <forecaster> <outcome> "
                    f"and {len(space)} fractions",
                    lineno,
                )
            try:
                rnd = int(tokens[1])
            except ValueError:
                raise DocumentParseError(f"bad round number {tokens[1]!r}", lineno)
            forecaster, outcome = tokens[2], tokens[3]
            if outcome not in space:
                raise DocumentParseError(f"outcome {outcome!r} is not a declared point", lineno)
            if (rnd, forecaster) in seen:
                raise DocumentParseError(
                    f"duplicate record for round {rnd}, forecaster {forecaster!r}", lineno
                )
            seen.add((rnd, forecaster))
            masses = {x: _fraction(t, lineno) for x, t in zip(space, tokens[4:])}
            if sum(masses.values()) != 1:
                raise DocumentParseError("forecast fractions do not sum to 1", lineno)
            records.append(
                ForecastRecord(rnd, forecaster, FiniteDistribution(space, masses), outcome)
            )
        else:
            raise DocumentParseError(f"unknown directive {tokens[0]!r}", lineno)
    if space is None:
        raise DocumentParseError("missing outcomes declaration", lines[-1][0])
    return ForecastLog(space, tuple(records))


def parse_piecewise(text: str) -> list[tuple[float, float, float, float]]:
    lines = list(_content_lines(text))
    if not lines or lines[0][1] != PIECEWISE_TAG.split():
        raise DocumentParseError(f"expected header {PIECEWISE_TAG!r}", lines[0][0] if lines else 1)
    pieces = []
    for lineno, tokens in lines[1:]:
        if tokens[0] != "piece" or len(tokens) != 5:
            raise DocumentParseError("piece needs: piece <lo> <hi> <q-density> <ratio>", lineno)
        try:
            lo, hi, qd, r = (float(Fraction(t)) for t in tokens[1:])
        except (ValueError, ZeroDivisionError):
            raise DocumentParseError("piece values must be numbers", lineno)
        if hi <= lo or qd < 0 or r < 0:
            raise DocumentParseError("piece values out of range", lineno)
        pieces.append((lo, hi, qd, r))
    if not pieces:
        raise DocumentParseError("no pieces given", lines[-1][0])
    return pieces
