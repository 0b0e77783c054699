"""
Partial orders with bottom and top, and the monotonicity machinery built on them.
"""
import logging
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from .chain import Dist, Kernel, solve_stationary
from .config import resolve_cap
from .exceptions import NotMonotone, PosetTooLarge, UndefinedUpwardRow, UnreachableConditioning, ValidationError, ZeroBottomMass
from .rules import TransitionRule


logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


class CheckResult(NamedTuple):
    """Outcome of a property check; `witness` names the first violation"""
    holds: bool
    witness: Any = None

    def __bool__(self) -> bool:
        return self.holds


class Poset():
    """Finite partial order with a bottom and a top element.

    :param leq: `leq[x][y]` is True iff x <= y
    """
    def __init__(self, leq: Sequence[Sequence[bool]]) -> None:
        n = len(leq)
        if n == 0 or any(len(row) != n for row in leq):
            raise ValidationError("order relation must be a nonempty square matrix", path="poset")
        self.n = n
        self._leq = tuple(tuple(bool(v) for v in row) for row in leq)
        for x in range(n):
            if not self._leq[x][x]:
                raise ValidationError(f"order is not reflexive at {x}", path="poset")
            for y in range(n):
                if x != y and self._leq[x][y] and self._leq[y][x]:
                    raise ValidationError(f"order is not antisymmetric at ({x}, {y})", path="poset")
                for z in range(n):
                    if self._leq[x][y] and self._leq[y][z] and not self._leq[x][z]:
                        raise ValidationError(f"order is not transitive at ({x}, {y}, {z})", path="poset")
        bottoms = [x for x in range(n) if all(self._leq[x][y] for y in range(n))]
        tops = [y for y in range(n) if all(self._leq[x][y] for x in range(n))]
        if not bottoms:
            raise ValidationError("order has no bottom element", path="poset.bottom")
        if not tops:
            raise ValidationError("order has no top element", path="poset.top")
        self.bottom = bottoms[0]
        self.top = tops[0]

    @classmethod
    def chain(cls, n: int, order: Optional[Sequence[int]] = None) -> "Poset":
        """Total order, listed from bottom to top"""
        order = list(range(n)) if order is None else list(order)
        rank = {x: i for i, x in enumerate(order)}
        return cls([[rank[x] <= rank[y] for y in range(n)] for x in range(n)])

    @classmethod
    def from_relations(cls, n: int, relations: Iterable[Pair]) -> "Poset":
        """Reflexive-transitive closure of the given (lower, upper) pairs"""
        leq = [[x == y for y in range(n)] for x in range(n)]
        for x, y in relations:
            leq[x][y] = True
        for z in range(n):
            for x in range(n):
                if leq[x][z]:
                    for y in range(n):
                        if leq[z][y]:
                            leq[x][y] = True
        return cls(leq)

    def leq(self, x: int, y: int) -> bool:
        return self._leq[x][y]

    def comparable_pairs(self, strict: bool = False) -> List[Pair]:
        return [(x, y) for x in range(self.n) for y in range(self.n) if self._leq[x][y] and not (strict and x == y)]

    def topological_order(self) -> List[int]:
        return sorted(range(self.n), key=lambda x: sum(self._leq[y][x] for y in range(self.n)))

    def down_sets(self, cap: Optional[int] = None) -> List[FrozenSet[int]]:
        """Every down-set, the empty one and the whole space included"""
        cap = resolve_cap(cap, "downset_cap")
        order = self.topological_order()
        below = {x: [y for y in range(self.n) if y != x and self._leq[y][x]] for x in order}
        found: List[FrozenSet[int]] = []

        def extend(i: int, chosen: FrozenSet[int]) -> None:
            if i == len(order):
                found.append(chosen)
                if len(found) > cap:
                    raise PosetTooLarge("down-sets", len(found), cap)
                return
            x = order[i]
            extend(i + 1, chosen)
            if all(y in chosen for y in below[x]):
                extend(i + 1, chosen | {x})

        extend(0, frozenset())
        return found

    def __repr__(self) -> str:
        return f"Poset(n={self.n}, bottom={self.bottom}, top={self.top})"


def _dominated(k: Kernel, l: Kernel, pairs: Iterable[Pair], p: Poset, cap: Optional[int]) -> CheckResult:
    """K(x, .) <= L(y, .) stochastically for every (x, y) in `pairs`"""
    down_sets = p.down_sets(cap)
    for x, y in pairs:
        for b in down_sets:
            if k.mass(x, b) < l.mass(y, b):
                return CheckResult(False, (x, y, b))
    return CheckResult(True)


def is_stochastically_monotone(k: Kernel, p: Poset, cap: Optional[int] = None) -> CheckResult:
    """K(x, B) >= K(y, B) for every x <= y and every down-set B; witness (x, y, B)"""
    return _dominated(k, k, p.comparable_pairs(strict=True), p, cap)


def is_cross_monotone(k: Kernel, l: Kernel, p: Poset, cap: Optional[int] = None) -> CheckResult:
    """K(x, .) <= L(y, .) whenever x <= y"""
    return _dominated(k, l, p.comparable_pairs(), p, cap)


def is_stochastically_dominated(k: Kernel, l: Kernel, p: Poset, cap: Optional[int] = None) -> CheckResult:
    """K(x, .) <= L(x, .) for every state x"""
    return _dominated(k, l, [(x, x) for x in range(p.n)], p, cap)


def is_realizably_monotone(rule: TransitionRule, p: Poset) -> CheckResult:
    """phi(x, u) <= phi(y, u) for every label u and every x <= y; witness (x, y, u)"""
    return is_cross_realizably_monotone(rule, rule, p)


def is_cross_realizably_monotone(rule_k: TransitionRule, rule_l: TransitionRule, p: Poset) -> CheckResult:
    """phi_K(x, u) <= phi_L(y, u) for every label u and every x <= y"""
    if rule_k is not rule_l and dict(rule_k.items()) != dict(rule_l.items()):
        raise ValidationError("cross rules must share labels and weights", path="rule_l")
    pairs = p.comparable_pairs(strict=rule_k is rule_l)
    for u in rule_k.labels:
        for x, y in pairs:
            if not p.leq(rule_k.apply(x, u), rule_l.apply(y, u)):
                return CheckResult(False, (x, y, u))
    return CheckResult(True)


class UpwardKernelFamily():
    """Kernels M_xy, one per comparable pair, moving mass only upward.

    `rows[(x, y)][x']` is M_xy(x', .) or None when K(x, x') = 0; such a row
    belongs to a zero-probability backward step and is never consulted.

    :param poset: order the family lives on
    :param rows: (x, y) -> one optional `Dist` per state x'
    """
    def __init__(self, poset: Poset, rows: Mapping[Pair, Sequence[Optional[Dist]]]) -> None:
        self.poset = poset
        self.rows: Dict[Pair, Tuple[Optional[Dist], ...]] = {}
        for (x, y), family in rows.items():
            if not poset.leq(x, y):
                raise ValidationError(f"upward kernel given for incomparable pair ({x}, {y})", path="upward")
            if len(family) != poset.n:
                raise ValidationError(f"M_({x},{y}) has {len(family)} rows, expected {poset.n}", path="upward")
            self.rows[(x, y)] = tuple(family)
        missing = [pair for pair in poset.comparable_pairs() if pair not in self.rows]
        if missing:
            raise ValidationError(f"upward kernels missing for pairs {missing}", path="upward")

    def row(self, x: int, y: int, x_next: int) -> Dist:
        dist = self.rows[(x, y)][x_next]
        if dist is None:
            raise UndefinedUpwardRow(f"M_({x},{y})({x_next}, .) is undefined")
        return dist

    def check(self, k: Kernel, l: Optional[Kernel] = None) -> CheckResult:
        """Upwardness and sum_x' K(x, x') M_xy(x', z) = L(y, z) for every x <= y.

        With `l` omitted this is the single-kernel identity with L = K.
        Witnesses are ("upward", x, y, x', z) or ("consistency", x, y, z).
        """
        l = k if l is None else l
        n = self.poset.n
        for (x, y), family in self.rows.items():
            for x_next, dist in enumerate(family):
                if dist is None:
                    if k.prob(x, x_next) > 0:
                        return CheckResult(False, ("undefined", x, y, x_next))
                    continue
                for z in dist.support():
                    if not self.poset.leq(x_next, z):
                        return CheckResult(False, ("upward", x, y, x_next, z))
            for z in range(n):
                mixed = sum(
                    (k.prob(x, x_next) * family[x_next][z] for x_next in range(n) if family[x_next] is not None),
                    Fraction(0),
                )
                if mixed != l.prob(y, z):
                    return CheckResult(False, ("consistency", x, y, z))
        return CheckResult(True)


def upward_row(
    rule: TransitionRule,
    x: int,
    y: int,
    x_next: int,
    rule_l: Optional[TransitionRule] = None,
) -> Dist:
    """Law of phi_L(y, U) given phi_K(x, U) = x', by restricting mu"""
    rule_l = rule if rule_l is None else rule_l
    matches = rule.preimage(x, x_next)
    total = sum((w for _, w in matches), Fraction(0))
    if total == 0:
        raise UnreachableConditioning(f"K({x}, {x_next}) = 0, cannot condition on it")
    masses = [Fraction(0)] * rule.n
    for u, w in matches:
        masses[rule_l.apply(y, u)] += w
    return Dist(tuple(m / total for m in masses))


def upward_family_from_rule(
    rule: TransitionRule,
    p: Poset,
    rule_l: Optional[TransitionRule] = None,
) -> UpwardKernelFamily:
    """M_xy(x', .) = L(phi_L(y, U) | phi_K(x, U) = x') for a (cross-)monotone rule pair"""
    rule_l = rule if rule_l is None else rule_l
    check = is_cross_realizably_monotone(rule, rule_l, p)
    if not check:
        raise NotMonotone(f"rule is not realizably monotone, witness {check.witness}", witness=check.witness)
    rows = {}
    for x, y in p.comparable_pairs():
        family = []
        for x_next in range(p.n):
            try:
                family.append(upward_row(rule, x, y, x_next, rule_l))
            except UnreachableConditioning:
                family.append(None)
        rows[(x, y)] = family
    return UpwardKernelFamily(p, rows)


class CrossSmConfig():
    """Kernels K (target) and L (driving the upper chain) for the monotone sampler.

    :param k: kernel with stationary law `pi`
    :param l: cross-monotone partner of `k`
    :param poset: order with bottom 0 and top 1
    :param pi: stationary law of `k`, solved if omitted
    :param sigma: stationary law of `l`, solved if omitted
    """
    def __init__(
        self,
        k: Kernel,
        l: Kernel,
        poset: Poset,
        pi: Optional[Dist] = None,
        sigma: Optional[Dist] = None,
        cap: Optional[int] = None,
    ) -> None:
        self.k = k
        self.l = l
        self.poset = poset
        self.pi = solve_stationary(k) if pi is None else pi
        self.sigma = solve_stationary(l) if sigma is None else sigma
        if l.left(self.sigma) != self.sigma:
            raise ValidationError("sigma is not stationary for L", path="sigma")
        if self.pi[poset.bottom] == 0:
            raise ZeroBottomMass("pi puts no mass on the bottom state")
        check = is_cross_monotone(k, l, poset, cap)
        if not check:
            raise NotMonotone(f"K is not cross-monotone with respect to L, witness {check.witness}", witness=check.witness)
        self.rho = self.sigma[poset.bottom] / self.pi[poset.bottom]

    @classmethod
    def single(cls, k: Kernel, poset: Poset, pi: Optional[Dist] = None, cap: Optional[int] = None) -> "CrossSmConfig":
        """Plain stochastically monotone case, L = K"""
        return cls(k, k, poset, pi=pi, sigma=pi, cap=cap)

    @property
    def is_single(self) -> bool:
        return self.k == self.l

    def __repr__(self) -> str:
        return f"CrossSmConfig(n={self.k.size}, rho={self.rho})"

