"""
Forward phase: coupled trajectories, coalescence, detection processes and the
move-to-front example.
"""
import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Hashable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from .chain import Dist, Kernel, StateSpace
from .config import resolve_cap
from .exceptions import EnumerationTooLarge, NotMonotone, TooManyRecords, ValidationError
from .poset import CheckResult, Poset, is_realizably_monotone
from .rules import Label, TransitionRule, kernel_from_rule


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Trajectory:
    """States X_0, ..., X_t"""
    states: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.states:
            raise ValidationError("a trajectory holds at least X_0")
        object.__setattr__(self, "states", tuple(self.states))

    def __getitem__(self, s: int) -> int:
        return self.states[s]

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[int]:
        return iter(self.states)

    @property
    def final(self) -> int:
        return self.states[-1]


@dataclass(frozen=True)
class DrivingSequence:
    """Labels u_1, ..., u_t"""
    labels: Tuple[Label, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[Label]:
        return iter(self.labels)

    def __getitem__(self, s: int) -> Label:
        return self.labels[s]


class DetectionProcess(ABC):
    """Process computed from the driving labels alone whose entry into the
    target set certifies coalescence.

    Subclasses whose step only depends on finitely many images phi(x, u) can
    also implement `watched` and `advance`; the oracle then never needs to
    materialize full labels of factored rules.
    """
    @abstractmethod
    def initial(self) -> Hashable:
        raise NotImplementedError

    @abstractmethod
    def step(self, state: Hashable, u: Label) -> Hashable:
        raise NotImplementedError

    @abstractmethod
    def in_target(self, state: Hashable) -> bool:
        raise NotImplementedError

    def watched(self, state: Hashable) -> Optional[Tuple[int, ...]]:
        """States whose images under phi(., u) determine `step(state, u)`"""
        return None

    def advance(self, state: Hashable, images: Mapping[int, int]) -> Hashable:
        raise NotImplementedError

    def first_hit(self, u: DrivingSequence) -> Optional[int]:
        return first_hit(self, u)

    def fires(self, u: DrivingSequence) -> bool:
        return first_hit(self, u) is not None


def first_hit(det: DetectionProcess, u: DrivingSequence) -> Optional[int]:
    """First s <= len(u) with the detection state in the target, else None"""
    state = det.initial()
    if det.in_target(state):
        return 0
    for s, label in enumerate(u, start=1):
        state = det.step(state, label)
        if det.in_target(state):
            return s
    return None


class FullTrackingDetector(DetectionProcess):
    """Tracks Y_s(x) for every start x; fires exactly on coalescence"""
    def __init__(self, rule: TransitionRule) -> None:
        self.rule = rule

    def initial(self) -> Tuple[int, ...]:
        return tuple(range(self.rule.n))

    def step(self, state: Tuple[int, ...], u: Label) -> Tuple[int, ...]:
        return tuple(self.rule.apply(y, u) for y in state)

    def in_target(self, state: Tuple[int, ...]) -> bool:
        return len(set(state)) == 1

    def watched(self, state: Tuple[int, ...]) -> Tuple[int, ...]:
        return tuple(sorted(set(state)))

    def advance(self, state: Tuple[int, ...], images: Mapping[int, int]) -> Tuple[int, ...]:
        return tuple(images[y] for y in state)


class BoundingInterval(NamedTuple):
    """D_s = [Y_s(bottom), Y_s(top)]"""
    lo: int
    hi: int

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi


class BoundingIntervalDetector(DetectionProcess):
    """Follows the bottom and top trajectories of a monotone rule; fires when they meet"""
    def __init__(self, rule: TransitionRule, poset: Poset) -> None:
        check = is_realizably_monotone(rule, poset)
        if not check:
            raise NotMonotone(f"bounding detector needs a monotone rule, witness {check.witness}", witness=check.witness)
        self.rule = rule
        self.poset = poset

    def initial(self) -> BoundingInterval:
        return BoundingInterval(self.poset.bottom, self.poset.top)

    def step(self, state: BoundingInterval, u: Label) -> BoundingInterval:
        return BoundingInterval(self.rule.apply(state.lo, u), self.rule.apply(state.hi, u))

    def in_target(self, state: BoundingInterval) -> bool:
        return state.is_singleton

    def watched(self, state: BoundingInterval) -> Tuple[int, ...]:
        return tuple(sorted({state.lo, state.hi}))

    def advance(self, state: BoundingInterval, images: Mapping[int, int]) -> BoundingInterval:
        return BoundingInterval(images[state.lo], images[state.hi])


class RequestedSetDetector(DetectionProcess):
    """Move-to-front detector: the set of records requested so far.

    Fires once at least n - 1 distinct records were requested; the rule labels
    are the record indices.
    """
    def __init__(self, n: int) -> None:
        self.n = n

    def initial(self) -> FrozenSet[int]:
        return frozenset()

    def step(self, state: FrozenSet[int], u: int) -> FrozenSet[int]:
        return state | {u}

    def in_target(self, state: FrozenSet[int]) -> bool:
        return len(state) >= self.n - 1


def coupled_forward(rule: TransitionRule, u: DrivingSequence) -> Dict[int, Trajectory]:
    """Y_0(x) = x, Y_s(x) = phi(Y_{s-1}(x), u_s) for every start x"""
    trajs = {}
    for x in range(rule.n):
        states = [x]
        for label in u:
            states.append(rule.apply(states[-1], label))
        trajs[x] = Trajectory(tuple(states))
    return trajs


def is_coalesced(trajs: Mapping[int, Trajectory]) -> bool:
    lengths = {len(traj) for traj in trajs.values()}
    if len(lengths) > 1:
        raise ValidationError("trajectories have different lengths")
    return len({traj.final for traj in trajs.values()}) == 1


def bounding_forward(rule: TransitionRule, p: Poset, u: DrivingSequence) -> List[BoundingInterval]:
    """D_0, ..., D_t for a realizably monotone rule"""
    det = BoundingIntervalDetector(rule, p)
    intervals = [det.initial()]
    for label in u:
        intervals.append(det.step(intervals[-1], label))
    return intervals


def detection_soundness_check(
    rule: TransitionRule,
    det: DetectionProcess,
    t: int,
    cap: Optional[int] = None,
) -> CheckResult:
    """Exhaustively verify that firing by time s <= t implies coalescence at s.

    On failure the witness is the shortest violating `DrivingSequence`.
    """
    cap = resolve_cap(cap, "soundness_cap")
    count = rule.label_count ** t
    if count > cap:
        raise EnumerationTooLarge("driving sequences", count, cap)
    labels = rule.labels

    def search(prefix: Tuple[Label, ...], state: Hashable, positions: Tuple[int, ...]) -> Optional[Tuple[Label, ...]]:
        if det.in_target(state):
            return None if len(set(positions)) == 1 else prefix
        if len(prefix) == t:
            return None
        for u in labels:
            found = search(
                prefix + (u,),
                det.step(state, u),
                tuple(rule.apply(y, u) for y in positions),
            )
            if found is not None:
                return found
        return None

    violation = search((), det.initial(), tuple(range(rule.n)))
    if violation is not None:
        return CheckResult(False, DrivingSequence(violation))
    return CheckResult(True)


class MtfChain(NamedTuple):
    space: StateSpace
    kernel: Kernel
    rule: TransitionRule
    detector: RequestedSetDetector
    permutations: Tuple[Tuple[int, ...], ...]


def mtf_chain(weights: Sequence[Any], cap: Optional[int] = None) -> MtfChain:
    """Move-to-front self-organizing list on n records.

    States are the n! orderings, label r requests record r with probability
    proportional to `weights[r]` and moves it to the front.
    """
    cap = resolve_cap(cap, "mtf_max_records")
    n = len(weights)
    if n == 0:
        raise ValidationError("move-to-front needs at least one record", path="mtf.weights")
    if n > cap:
        raise TooManyRecords(f"{n} records exceed the limit of {cap}", path="mtf.weights")
    weights = [Fraction(w) for w in weights]
    if any(w <= 0 for w in weights):
        raise ValidationError("record weights must be positive", path="mtf.weights")
    mu = Dist.normalized(weights)
    perms = tuple(itertools.permutations(range(n)))
    index = {perm: i for i, perm in enumerate(perms)}
    table = {}
    for r in range(n):
        table[r] = tuple(index[(r,) + tuple(y for y in perm if y != r)] for perm in perms)
    rule = TransitionRule(len(perms), table, {r: mu[r] for r in range(n)})
    space = StateSpace(tuple("".join(str(y) for y in perm) for perm in perms))
    logger.debug("move-to-front chain on %d records, %d states", n, len(perms))
    return MtfChain(space, kernel_from_rule(rule), rule, RequestedSetDetector(n), perms)
