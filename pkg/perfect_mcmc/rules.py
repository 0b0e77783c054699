"""
Transition rules (phi, mu): a finite driver law and a deterministic update table.

A rule turns a kernel into a stochastic recursive sequence
`X_s = phi(X_{s-1}, U_s)` with `U_s ~ mu` i.i.d.
"""
import itertools
import logging
from fractions import Fraction
from math import prod
from typing import Dict, Hashable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .chain import Dist, Kernel, Rational
from .config import resolve_cap
from .exceptions import StateSpaceTooLarge, ValidationError
from .rng import RngStream


logger = logging.getLogger(__name__)

Label = Hashable
ImageLaw = List[Tuple[Tuple[int, ...], Fraction]]


class TransitionRule():
    """Finite transition rule given by an explicit table.

    :param n: number of states
    :param table: label -> map tuple, `table[u][x]` is phi(x, u)
    :param mu: label -> weight; labels with weight 0 are dropped
    """
    def __init__(self, n: int, table: Mapping[Label, Sequence[int]], mu: Mapping[Label, Rational]) -> None:
        if n <= 0:
            raise ValidationError("a rule needs at least one state", path="rule")
        if set(table) != set(mu):
            raise ValidationError("rule table and mu must name the same labels", path="rule")
        try:
            Dist(tuple(Fraction(mu[u]) for u in table))
        except ValidationError as e:
            raise ValidationError(e.message, path="rule.mu") from None
        maps: Dict[Label, Tuple[int, ...]] = {}
        weights: Dict[Label, Fraction] = {}
        for u, images in table.items():
            images = tuple(int(y) for y in images)
            if len(images) != n:
                raise ValidationError(f"label {u!r} maps {len(images)} states, expected {n}", path=f"rule.table.{u}")
            if any(not 0 <= y < n for y in images):
                raise ValidationError(f"label {u!r} maps outside the state space", path=f"rule.table.{u}")
            w = Fraction(mu[u])
            if w == 0:
                continue
            maps[u] = images
            weights[u] = w
        self.n = n
        self._maps = maps
        self._weights = weights
        self._kernel: Optional[Kernel] = None

    @classmethod
    def identity(cls, n: int) -> "TransitionRule":
        """Single-label rule with phi(x, u) = x"""
        return cls(n, {"id": tuple(range(n))}, {"id": 1})

    @property
    def labels(self) -> Tuple[Label, ...]:
        return tuple(self._maps)

    @property
    def label_count(self) -> int:
        return len(self._maps)

    def __len__(self) -> int:
        return self.label_count

    def weight(self, u: Label) -> Fraction:
        return self._weights[u]

    def apply(self, x: int, u: Label) -> int:
        return self._maps[u][x]

    def map_of(self, u: Label) -> Tuple[int, ...]:
        return self._maps[u]

    def items(self) -> Iterator[Tuple[Label, Fraction]]:
        return iter(self._weights.items())

    def sample(self, rng: RngStream) -> Label:
        labels = self.labels
        return labels[rng.index([self._weights[u] for u in labels])]

    def preimage(self, x: int, y: int) -> List[Tuple[Label, Fraction]]:
        """Labels u with phi(x, u) = y, with their weights"""
        return [(u, self._weights[u]) for u, images in self._maps.items() if images[x] == y]

    def image_law(self, coords: Sequence[int]) -> ImageLaw:
        """Joint law of (phi(c, U))_c for c in `coords`, U ~ mu"""
        law: Dict[Tuple[int, ...], Fraction] = {}
        for u, w in self._weights.items():
            images = self._maps[u]
            key = tuple(images[c] for c in coords)
            law[key] = law.get(key, Fraction(0)) + w
        return list(law.items())

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n}, labels={self.label_count})"


class IndependentTransitionsRule(TransitionRule):
    """Rule whose labels are all maps u: X -> X with mu(u) = prod_x K(x, u(x)).

    Labels are materialized only on demand; sampling and image laws work
    coordinate by coordinate.
    """
    def __init__(self, kernel: Kernel, cap: Optional[int] = None) -> None:
        cap = resolve_cap(cap, "label_cap")
        self.n = kernel.size
        self.kernel = kernel
        self.supports = tuple(kernel.support(x) for x in range(kernel.size))
        count = prod(len(s) for s in self.supports)
        if count > cap:
            raise StateSpaceTooLarge("independent-transitions labels", count, cap)
        self._count = count
        self._kernel = kernel
        self._labels: Optional[Tuple[Tuple[int, ...], ...]] = None

    @property
    def labels(self) -> Tuple[Tuple[int, ...], ...]:
        if self._labels is None:
            self._labels = tuple(itertools.product(*self.supports))
        return self._labels

    @property
    def label_count(self) -> int:
        return self._count

    def weight(self, u: Tuple[int, ...]) -> Fraction:
        return prod((self.kernel.prob(x, y) for x, y in enumerate(u)), start=Fraction(1))

    def apply(self, x: int, u: Tuple[int, ...]) -> int:
        return u[x]

    def map_of(self, u: Tuple[int, ...]) -> Tuple[int, ...]:
        return tuple(u)

    def items(self) -> Iterator[Tuple[Tuple[int, ...], Fraction]]:
        return ((u, self.weight(u)) for u in self.labels)

    def sample(self, rng: RngStream) -> Tuple[int, ...]:
        return tuple(rng.index(self.kernel[x].weights) for x in range(self.n))

    def preimage(self, x: int, y: int) -> List[Tuple[Tuple[int, ...], Fraction]]:
        return [(u, w) for u, w in self.items() if u[x] == y]

    def image_law(self, coords: Sequence[int]) -> ImageLaw:
        rows = [[(y, self.kernel.prob(c, y)) for y in self.supports[c]] for c in coords]
        return [
            (tuple(y for y, _ in combo), prod((w for _, w in combo), start=Fraction(1)))
            for combo in itertools.product(*rows)
        ]


def kernel_from_rule(rule: TransitionRule) -> Kernel:
    """K(x, B) = mu{u : phi(x, u) in B}"""
    if rule._kernel is None:
        n = rule.n
        rows = [[Fraction(0)] * n for _ in range(n)]
        for u, w in rule.items():
            images = rule.map_of(u)
            for x in range(n):
                rows[x][images[x]] += w
        rule._kernel = Kernel.from_rows(rows)
    return rule._kernel


def independent_transitions_rule(k: Kernel, cap: Optional[int] = None) -> IndependentTransitionsRule:
    return IndependentTransitionsRule(k, cap=cap)


def _interval_label(a: Fraction, b: Fraction) -> str:
    return f"[{a},{b})"


def _cdf_segments(k: Kernel, order: Tuple[int, ...]) -> List[List[Tuple[Fraction, Fraction, int]]]:
    segments = []
    for x in range(k.size):
        lo = Fraction(0)
        row = []
        for y in order:
            hi = lo + k.prob(x, y)
            row.append((lo, hi, y))
            lo = hi
        segments.append(row)
    return segments


def _checked_order(n: int, order: Optional[Sequence[int]]) -> Tuple[int, ...]:
    order = tuple(range(n)) if order is None else tuple(order)
    if sorted(order) != list(range(n)):
        raise ValidationError("order must list every state exactly once", path="order")
    return order


def _rule_on_cuts(segments: List[List[Tuple[Fraction, Fraction, int]]], cuts: Sequence[Fraction]) -> TransitionRule:
    n = len(segments)
    table: Dict[str, Tuple[int, ...]] = {}
    mu: Dict[str, Fraction] = {}
    for a, b in zip(cuts, cuts[1:]):
        if b == a:
            continue
        images = []
        for x in range(n):
            images.append(next(y for lo, hi, y in segments[x] if lo <= a and b <= hi))
        label = _interval_label(a, b)
        table[label] = tuple(images)
        mu[label] = b - a
    return TransitionRule(n, table, mu)


def _cuts(*segment_tables: List[List[Tuple[Fraction, Fraction, int]]]) -> List[Fraction]:
    cuts = {Fraction(0), Fraction(1)}
    for segments in segment_tables:
        cuts.update(hi for row in segments for _, hi, _ in row)
    return sorted(cuts)


def inverse_transform_rule(k: Kernel, order: Optional[Sequence[int]] = None) -> TransitionRule:
    """Discretized inverse-CDF rule.

    The unit interval is cut at every breakpoint of every row CDF (states
    taken in `order`); each piece is a label whose weight is its length and
    which sends x to the state whose CDF segment of row x contains it.

    :param k: kernel to realize
    :param order: total order of the states, natural order if omitted
    """
    segments = _cdf_segments(k, _checked_order(k.size, order))
    rule = _rule_on_cuts(segments, _cuts(segments))
    logger.debug("inverse transform rule with %d intervals", rule.label_count)
    return rule


def coupled_inverse_transform_rules(
    k: Kernel,
    l: Kernel,
    order: Optional[Sequence[int]] = None,
) -> Tuple[TransitionRule, TransitionRule]:
    """Inverse-CDF rules of K and L on the same pieces of the unit interval.

    Both rules have the same labels and weights, so one label drives both
    chains. If K(x, .) is stochastically below L(y, .) whenever x <= y in
    `order`, the pair is cross-monotone.
    """
    if k.size != l.size:
        raise ValidationError(f"K has {k.size} states, L has {l.size}", path="l")
    order = _checked_order(k.size, order)
    seg_k, seg_l = _cdf_segments(k, order), _cdf_segments(l, order)
    cuts = _cuts(seg_k, seg_l)
    return _rule_on_cuts(seg_k, cuts), _rule_on_cuts(seg_l, cuts)


def iterate_rule(rule: TransitionRule, m: int, cap: Optional[int] = None) -> TransitionRule:
    """m-step rule: labels are m-tuples of labels, maps are compositions.

    The resulting rule realizes `kernel_from_rule(rule).power(m)`.
    """
    if m < 1:
        raise ValidationError("an iterated rule needs m >= 1", path="m")
    cap = resolve_cap(cap, "label_cap")
    count = rule.label_count ** m
    if count > cap:
        raise StateSpaceTooLarge(f"{m}-step rule labels", count, cap)
    table: Dict[Tuple[Label, ...], Tuple[int, ...]] = {}
    mu: Dict[Tuple[Label, ...], Fraction] = {}
    items = list(rule.items())
    for combo in itertools.product(items, repeat=m):
        labels = tuple(u for u, _ in combo)
        images = tuple(range(rule.n))
        for u in labels:
            images = tuple(rule.apply(y, u) for y in images)
        table[labels] = images
        mu[labels] = prod((w for _, w in combo), start=Fraction(1))
    return TransitionRule(rule.n, table, mu)
