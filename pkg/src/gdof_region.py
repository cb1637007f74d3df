"""
GDoF region of the (5, 5, 2, 3) MIMO interference channel and exact-rational
certificates.

A certificate is a non-negative weighted sum of premise inequalities over
opaque entropy symbols. It proves its target when every symbol coefficient of
the sum equals the target's and the summed bound does not exceed the target's.
Nothing here evaluates an entropy numerically.
"""

from fractions import Fraction
from functools import cmp_to_key
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.data_models import Rational
from src.exceptions import CertificateError
from src.utils.logger import app_logger

Point = Tuple[Fraction, Fraction]


class HalfPlane(BaseModel):
    """a₁·d₁ + a₂·d₂ ≤ b."""

    model_config = ConfigDict(frozen=True)

    a1: Rational
    a2: Rational
    b: Rational
    label: str = ""

    @model_validator(mode="after")
    def validate_normal(self):
        if self.a1 == 0 and self.a2 == 0:
            raise ValueError("a half-plane needs a non-zero coefficient")
        return self

    def value(self, point: Point) -> Fraction:
        return self.a1 * point[0] + self.a2 * point[1]

    def contains(self, point: Point) -> bool:
        return self.value(point) <= self.b

    def is_tight(self, point: Point) -> bool:
        return self.value(point) == self.b

    def normalized(self) -> Tuple[Fraction, Fraction, Fraction]:
        scale = abs(self.a1) if self.a1 != 0 else abs(self.a2)
        return self.a1 / scale, self.a2 / scale, self.b / scale


def theorem5_region() -> List[HalfPlane]:
    F = Fraction
    return [
        HalfPlane(a1=F(-1), a2=F(0), b=F(0), label="d1 >= 0"),
        HalfPlane(a1=F(0), a2=F(-1), b=F(0), label="d2 >= 0"),
        HalfPlane(a1=F(1), a2=F(0), b=F(2), label="d1 <= 2"),
        HalfPlane(a1=F(0), a2=F(1), b=F(3), label="d2 <= 3"),
        HalfPlane(a1=F(1, 2), a2=F(1, 3), b=F(3, 2), label="d1/2 + d2/3 <= 3/2"),
        HalfPlane(a1=F(1), a2=F(1), b=F(34, 9), label="d1 + d2 <= 34/9"),
    ]


def contains(halfplanes: Sequence[HalfPlane], point: Point) -> bool:
    return all(h.contains(point) for h in halfplanes)


def _intersection(h: HalfPlane, k: HalfPlane) -> Optional[Point]:
    det = h.a1 * k.a2 - h.a2 * k.a1
    if det == 0:
        return None
    return ((h.b * k.a2 - h.a2 * k.b) / det, (h.a1 * k.b - h.b * k.a1) / det)


def is_bounded(halfplanes: Sequence[HalfPlane]) -> bool:
    """No non-zero direction d with a·d ≤ 0 for every half-plane; extreme rays lie on some boundary."""
    if not halfplanes:
        return False
    for h in halfplanes:
        for d in ((h.a2, -h.a1), (-h.a2, h.a1)):
            if all(k.a1 * d[0] + k.a2 * d[1] <= 0 for k in halfplanes):
                return False
    return True


def _counterclockwise(points: List[Point]) -> List[Point]:
    """Angular order around the centroid, exact; starts at the lexicographically smallest vertex."""
    if len(points) < 3:
        return sorted(points)
    cx = sum((p[0] for p in points), Fraction(0)) / len(points)
    cy = sum((p[1] for p in points), Fraction(0)) / len(points)

    def half(p: Point) -> int:
        return 0 if (p[1] > cy or (p[1] == cy and p[0] > cx)) else 1

    def compare(p: Point, q: Point) -> int:
        if half(p) != half(q):
            return half(p) - half(q)
        cross = (p[0] - cx) * (q[1] - cy) - (p[1] - cy) * (q[0] - cx)
        return -1 if cross > 0 else (1 if cross < 0 else 0)

    ordered = sorted(points, key=cmp_to_key(compare))
    start = ordered.index(min(points))
    return ordered[start:] + ordered[:start]


def vertices(halfplanes: Sequence[HalfPlane]) -> List[Point]:
    """Extreme points by pairwise intersection plus feasibility, deduplicated, counterclockwise."""
    if not is_bounded(halfplanes):
        raise ValueError("region is unbounded")
    found = set()
    for h, k in combinations(halfplanes, 2):
        point = _intersection(h, k)
        if point is not None and contains(halfplanes, point):
            found.add(point)
    return _counterclockwise(list(found))


def redundant_constraints(halfplanes: Sequence[HalfPlane], points: Optional[Sequence[Point]] = None) -> List[HalfPlane]:
    points = points if points is not None else vertices(halfplanes)
    return [h for h in halfplanes if not any(h.is_tight(p) for p in points)]


def in_hull(points: Sequence[Point], point: Point) -> bool:
    """Membership in the convex polygon with counterclockwise vertices, by exact cross products."""
    n = len(points)
    if n == 0:
        return False
    if n == 1:
        return tuple(point) == tuple(points[0])
    for i in range(n):
        (x1, y1), (x2, y2) = points[i], points[(i + 1) % n]
        if (x2 - x1) * (point[1] - y1) - (y2 - y1) * (point[0] - x1) < 0:
            return False
    return True


# Ledgers and certificates

R1, R2 = "R1", "R2"


class TermDictionary:
    """Interned entropy symbols; one canonical string per expression."""

    def __init__(self, names: Iterable[str] = ()):
        self._symbols: Dict[str, str] = {}
        for name in names:
            self.intern(name)

    @staticmethod
    def _key(name: str) -> str:
        return "".join(name.split())

    def intern(self, name: str) -> str:
        return self._symbols.setdefault(self._key(name), self._key(name))

    def __contains__(self, name: str) -> bool:
        return self._key(name) in self._symbols

    def __iter__(self):
        return iter(self._symbols.values())


class EntropyLedger(BaseModel):
    """Σ wᵢ·termᵢ + constant·(n log P̄)."""

    terms: Dict[str, Rational] = Field(default_factory=dict)
    constant: Rational = Fraction(0)

    def __add__(self, other: "EntropyLedger") -> "EntropyLedger":
        terms = dict(self.terms)
        for name, w in other.terms.items():
            terms[name] = terms.get(name, Fraction(0)) + w
        return EntropyLedger(terms={k: v for k, v in terms.items() if v != 0}, constant=self.constant + other.constant)

    def scaled(self, weight: Fraction) -> "EntropyLedger":
        return EntropyLedger(terms={k: v * weight for k, v in self.terms.items() if v * weight != 0},
                             constant=self.constant * weight)

    def is_zero(self) -> bool:
        return not self.terms


class LedgerInequality(BaseModel):
    """Σ wᵢ·termᵢ ≤ bound·(n log P̄), plus an o(log P̄) term when slack is set."""

    terms: Dict[str, Rational] = Field(default_factory=dict)
    bound: Rational = Fraction(0)
    slack: bool = False
    label: str = ""

    def as_ledger(self) -> EntropyLedger:
        """The inequality as 'ledger ≤ 0'."""
        return EntropyLedger(terms={k: v for k, v in self.terms.items() if v != 0}, constant=-self.bound)


class Certificate(BaseModel):
    name: str = "certificate"
    premises: List[Tuple[LedgerInequality, Rational]] = Field(default_factory=list)
    target: LedgerInequality
    dictionary: Optional[List[str]] = None

    @model_validator(mode="after")
    def validate_weights(self):
        if any(w < 0 for _, w in self.premises):
            raise ValueError("certificate weights must be non-negative")
        return self


def _interned(ledger: EntropyLedger, dictionary: TermDictionary) -> EntropyLedger:
    total = EntropyLedger(constant=ledger.constant)
    for name, w in ledger.terms.items():
        total = total + EntropyLedger(terms={dictionary.intern(name): w})
    return total


def check_certificate(cert: Certificate) -> Tuple[bool, EntropyLedger]:
    """Verify the weighted premises dominate the target; returns (verified, residual = Σ w·premise − target)."""
    used = [name for ineq, _ in cert.premises for name in ineq.terms] + list(cert.target.terms)
    if cert.dictionary is not None:
        known = TermDictionary(cert.dictionary)
        missing = sorted({name for name in used if name not in known})
        if missing:
            raise CertificateError(f"{cert.name}: terms outside the dictionary: {missing}")
    else:
        known = TermDictionary(used)

    combined = EntropyLedger()
    needs_slack = False
    for inequality, weight in cert.premises:
        combined = combined + _interned(inequality.as_ledger(), known).scaled(weight)
        needs_slack = needs_slack or (inequality.slack and weight > 0)

    residual = combined + _interned(cert.target.as_ledger(), known).scaled(Fraction(-1))
    # residual.constant = target bound − combined bound
    verified = residual.is_zero() and residual.constant >= 0 and (cert.target.slack or not needs_slack)
    app_logger.debug(f"Certificate {cert.name}: {'verified' if verified else 'rejected'}, residual {residual.terms}, "
                     f"bound margin {residual.constant}")
    return verified, residual


# Built-in premises. T = (Y1)^1_{2/3}, Lo = (Y1)_{2/3}, X2c^ = (X2c)^1_{1/2}, X2c_low = (X2c)_{1/2}.
H_Y1_G = "H(Y1|G)"
H_Y1_X1 = "H(Y1|X1,G)"
H_T_G = "H(T|G)"
H_Lo_TG = "H(Lo|T,G)"
H_T_X1 = "H(T|X1,G)"
H_Lo_TX1 = "H(Lo|T,X1,G)"
H_T_X2 = "H(T|X2,G)"
H_X2C_TOP = "H(X2c^)"
H_X2C = "H(X2c)"
H_X2C_LOW = "H(X2c_low|X2c^)"
H_Y2_G = "H(Y2|G)"
H_Y2_X1 = "H(Y2|X1,G)"
H_Y2_X2 = "H(Y2|X2,G)"
H_PAIR = {pair: f"H(Y2{pair[0]},Y2{pair[1]}|X1,G)" for pair in ("12", "13", "23")}


def _premise(label: str, terms: Dict[str, object], bound=0, slack: bool = False) -> LedgerInequality:
    return LedgerInequality(terms={k: Fraction(v) for k, v in terms.items()}, bound=Fraction(bound), slack=slack, label=label)


PREMISES: Dict[str, LedgerInequality] = {
    "fano1": _premise("Fano at receiver 1", {R1: 1, H_Y1_G: -1, H_Y1_X1: 1}, slack=True),
    "fano2": _premise("Fano at receiver 2 given X1", {R2: 1, H_Y2_X1: -1}, slack=True),
    "fano2_full": _premise("Fano at receiver 2", {R2: 1, H_Y2_G: -1, H_Y2_X2: 1}, slack=True),
    "chain_g": _premise("chain rule on Y1 = (T, Lo)", {H_Y1_G: 1, H_T_G: -1, H_Lo_TG: -1}),
    "chain_x1": _premise("chain rule on Y1 given X1", {H_T_X1: 1, H_Lo_TX1: 1, H_Y1_X1: -1}),
    "card_y1": _premise("two antennas at level 1", {H_Y1_G: 1}, bound=2),
    "card_lo": _premise("two antennas below level 2/3", {H_Lo_TG: 1}, bound=Fraction(4, 3)),
    "card_y2": _premise("three antennas at level 1", {H_Y2_G: 1}, bound=3),
    "card_x2c_low": _premise("three antennas below level 1/2", {H_X2C_LOW: 1}, bound=Fraction(3, 2)),
    "mi_conditioning": _premise("I(T;X1) <= I(T;X1|X2)", {H_T_G: 1, H_T_X1: -1, H_T_X2: -1}),
    "lemma1": _premise("receiver 1 sees the top half of X2c", {H_X2C_TOP: 2, H_Y1_X1: -2, H_Lo_TX1: -1}, slack=True),
    "y2_given_x1": _premise("Y2 given X1 is a function of X2c", {H_Y2_X1: 1, H_X2C: -1}, slack=True),
    "t_given_x2": _premise("T given X2 is a degraded Y2 given X2", {H_T_X2: 1, H_Y2_X2: -1}, slack=True),
    "x2c_split": _premise("X2c splits into top and bottom halves", {H_X2C: 1, H_X2C_TOP: -1, H_X2C_LOW: -1}),
    "han_y2": _premise("Han split of Y2 given X1", {H_Y2_X1: 2, H_PAIR["12"]: -1, H_PAIR["13"]: -1, H_PAIR["23"]: -1}),
    "pair_12": _premise("antenna pair 1,2 of Y2 vs Y1", {H_PAIR["12"]: 1, H_Y1_X1: -1}, bound=1, slack=True),
    "pair_13": _premise("antenna pair 1,3 of Y2 vs Y1", {H_PAIR["13"]: 1, H_Y1_X1: -1}, bound=1, slack=True),
    "pair_23": _premise("antenna pair 2,3 of Y2 vs Y1", {H_PAIR["23"]: 1, H_Y1_X1: -1}, bound=1, slack=True),
    "single_user_1": _premise("single-user bound d1 <= 2", {R1: 1}, bound=2, slack=True),
    "single_user_2": _premise("single-user bound d2 <= 3", {R2: 1}, bound=3, slack=True),
}

R1_CHAIN_TARGET = _premise("3nR1 chain", {R1: 3, H_X2C_TOP: 2, H_T_X2: -1}, bound=Fraction(16, 3), slack=True)
R2_CHAIN_TARGET = _premise("3nR2 chain", {R2: 3, H_X2C_TOP: -2, H_T_X2: 1}, bound=6, slack=True)


def _weighted(*pairs) -> List[Tuple[LedgerInequality, Fraction]]:
    return [(PREMISES[name] if isinstance(name, str) else name, Fraction(w)) for name, w in pairs]


def builtin_certificates() -> Dict[str, Certificate]:
    dictionary = sorted({t for p in PREMISES.values() for t in p.terms})
    return {
        "r1_chain": Certificate(
            name="r1_chain", dictionary=dictionary, target=R1_CHAIN_TARGET,
            premises=_weighted(("fano1", 3), ("chain_g", 1), ("chain_x1", 1), ("card_y1", 2), ("card_lo", 1),
                               ("mi_conditioning", 1), ("lemma1", 1))),
        "r2_chain": Certificate(
            name="r2_chain", dictionary=dictionary, target=R2_CHAIN_TARGET,
            premises=_weighted(("fano2", 2), ("fano2_full", 1), ("card_y2", 1), ("y2_given_x1", 2),
                               ("t_given_x2", 1), ("x2c_split", 2), ("card_x2c_low", 2))),
        "sum_rate": Certificate(
            name="sum_rate", dictionary=dictionary,
            target=_premise("3nR1 + 3nR2", {R1: 3, R2: 3}, bound=Fraction(34, 3), slack=True),
            premises=_weighted((R1_CHAIN_TARGET, 1), (R2_CHAIN_TARGET, 1))),
        "weighted": Certificate(
            name="weighted", dictionary=dictionary,
            target=_premise("3nR1 + 2nR2", {R1: 3, R2: 2}, bound=9, slack=True),
            premises=_weighted(("fano1", 3), ("card_y1", 3), ("fano2", 2), ("han_y2", 1),
                               ("pair_12", 1), ("pair_13", 1), ("pair_23", 1))),
        "single_user_1": Certificate(
            name="single_user_1", dictionary=dictionary, target=PREMISES["single_user_1"],
            premises=_weighted(("single_user_1", 1))),
        "single_user_2": Certificate(
            name="single_user_2", dictionary=dictionary, target=PREMISES["single_user_2"],
            premises=_weighted(("single_user_2", 1))),
        "trivial": Certificate(name="trivial", target=LedgerInequality(), premises=[]),
    }


def to_halfplane(target: LedgerInequality) -> HalfPlane:
    """A rate-only target Σ cᵣ·nRᵣ ≤ b·n log P̄ read as the GDoF half-plane c₁d₁ + c₂d₂ ≤ b."""
    extra = set(target.terms) - {R1, R2}
    if extra:
        raise ValueError(f"target involves non-rate terms {sorted(extra)}")
    return HalfPlane(a1=target.terms.get(R1, Fraction(0)), a2=target.terms.get(R2, Fraction(0)), b=target.bound,
                     label=target.label)


def matches_region(halfplane: HalfPlane, region: Sequence[HalfPlane]) -> bool:
    """True when the half-plane equals one of the region's constraints up to positive scaling."""
    return any(halfplane.normalized() == h.normalized() for h in region)
