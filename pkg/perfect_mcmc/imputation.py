"""
Conditional law of the driving label given an observed transition,
L(U_s | X_{s-1} = x, X_s = y).
"""
import itertools
from fractions import Fraction
from functools import lru_cache
from math import prod
from typing import Iterator, List, Optional, Sequence, Tuple, Union

from .chain import Dist
from .config import resolve_cap
from .detection import DrivingSequence, Trajectory
from .exceptions import EnumerationTooLarge, ImpossibleTransition
from .rng import RngStream
from .rules import ImageLaw, IndependentTransitionsRule, Label, TransitionRule


class ImputedDist():
    """Explicit conditional label law, restricted to labels with phi(x, u) = y.

    :param rule: rule the labels belong to
    :param support: labels with positive conditional weight
    :param weights: conditional weights, summing to 1
    """
    def __init__(self, rule: TransitionRule, support: Sequence[Label], weights: Sequence[Fraction]) -> None:
        self.rule = rule
        self.support = tuple(support)
        self.weights = tuple(weights)

    def __len__(self) -> int:
        return len(self.support)

    def prob(self, u: Label) -> Fraction:
        for label, w in zip(self.support, self.weights):
            if label == u:
                return w
        return Fraction(0)

    def items(self) -> Iterator[Tuple[Label, Fraction]]:
        return zip(self.support, self.weights)

    def sample(self, rng: RngStream) -> Label:
        return self.support[rng.index(self.weights)]

    def image_law(self, coords: Sequence[int]) -> ImageLaw:
        law = {}
        for u, w in self.items():
            key = tuple(self.rule.apply(c, u) for c in coords)
            law[key] = law.get(key, Fraction(0)) + w
        return list(law.items())


class FactoredImputedDist():
    """Imputed law of an independent-transitions label, one marginal per coordinate.

    Coordinate `x_prev` is the point mass at `x_next`; every other coordinate x
    keeps its unconditional marginal K(x, .).
    """
    def __init__(self, rule: IndependentTransitionsRule, x_prev: int, x_next: int) -> None:
        self.rule = rule
        self.x_prev = x_prev
        self.x_next = x_next
        n = rule.n
        self.marginals = tuple(
            Dist.point(n, x_next) if x == x_prev else rule.kernel[x]
            for x in range(n)
        )

    def marginal(self, x: int) -> Dist:
        return self.marginals[x]

    def prob(self, u: Sequence[int]) -> Fraction:
        return prod((m[y] for m, y in zip(self.marginals, u)), start=Fraction(1))

    def __len__(self) -> int:
        return prod(len(m.support()) for m in self.marginals)

    def items(self, cap: Optional[int] = None) -> Iterator[Tuple[Tuple[int, ...], Fraction]]:
        cap = resolve_cap(cap, "enum_cap")
        if len(self) > cap:
            raise EnumerationTooLarge("imputed labels", len(self), cap)
        for u in itertools.product(*(m.support() for m in self.marginals)):
            yield u, self.prob(u)

    def sample(self, rng: RngStream) -> Tuple[int, ...]:
        return tuple(rng.index(m.weights) for m in self.marginals)

    def image_law(self, coords: Sequence[int]) -> ImageLaw:
        rows = [[(y, self.marginals[c][y]) for y in self.marginals[c].support()] for c in coords]
        return [
            (tuple(y for y, _ in combo), prod((w for _, w in combo), start=Fraction(1)))
            for combo in itertools.product(*rows)
        ]


AnyImputedDist = Union[ImputedDist, FactoredImputedDist]


@lru_cache(maxsize=4096)
def impute_dist(rule: TransitionRule, x_prev: int, x_next: int) -> AnyImputedDist:
    """Conditional law of U given phi(x_prev, U) = x_next.

    weights(u) = mu(u) / K(x_prev, x_next) on the labels that realize the step.
    """
    if isinstance(rule, IndependentTransitionsRule):
        if rule.kernel.prob(x_prev, x_next) == 0:
            raise ImpossibleTransition(f"K({x_prev}, {x_next}) = 0")
        return FactoredImputedDist(rule, x_prev, x_next)
    matches = rule.preimage(x_prev, x_next)
    total = sum((w for _, w in matches), Fraction(0))
    if total == 0:
        raise ImpossibleTransition(f"K({x_prev}, {x_next}) = 0")
    return ImputedDist(rule, [u for u, _ in matches], [w / total for _, w in matches])


def impute_sequence(rule: TransitionRule, traj: Trajectory, rng: RngStream) -> DrivingSequence:
    """Draw u_s ~ impute_dist(rule, x_{s-1}, x_s) independently for s = 1..t"""
    labels: List[Label] = []
    for s in range(1, len(traj)):
        labels.append(impute_dist(rule, traj[s - 1], traj[s]).sample(rng))
    return DrivingSequence(tuple(labels))
