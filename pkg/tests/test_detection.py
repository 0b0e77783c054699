import itertools
from fractions import Fraction

import pytest

from perfect_mcmc.chain import Dist, solve_stationary
from perfect_mcmc.detection import (
    BoundingInterval,
    BoundingIntervalDetector,
    DrivingSequence,
    FullTrackingDetector,
    RequestedSetDetector,
    Trajectory,
    bounding_forward,
    coupled_forward,
    detection_soundness_check,
    first_hit,
    is_coalesced,
    mtf_chain,
)
from perfect_mcmc.exceptions import EnumerationTooLarge, NotMonotone, TooManyRecords, ValidationError


def test_full_tracking_fires_on_coalescence(two_map_rule) -> None:
    det = FullTrackingDetector(two_map_rule)
    assert first_hit(det, DrivingSequence(("down", "down"))) == 2
    assert det.first_hit(DrivingSequence(("up", "down"))) is None
    assert det.fires(DrivingSequence(("up", "up", "down")))


def test_bounding_interval(two_map_rule, line3) -> None:
    det = BoundingIntervalDetector(two_map_rule, line3)
    intervals = bounding_forward(two_map_rule, line3, DrivingSequence(("up", "down", "down")))
    assert intervals == [BoundingInterval(0, 2), BoundingInterval(1, 2), BoundingInterval(0, 1), BoundingInterval(0, 0)]
    assert intervals[-1].is_singleton
    assert det.first_hit(DrivingSequence(("up", "down", "down"))) == 3


def test_bounding_detector_needs_monotone_rule(toy_independent, line3) -> None:
    with pytest.raises(NotMonotone):
        BoundingIntervalDetector(toy_independent, line3)


def test_coupled_forward(two_map_rule) -> None:
    trajs = coupled_forward(two_map_rule, DrivingSequence(("up", "up")))
    assert trajs[0] == Trajectory((0, 1, 2))
    assert is_coalesced(trajs)
    assert not is_coalesced(coupled_forward(two_map_rule, DrivingSequence(("down",))))


def test_trajectory_needs_a_state() -> None:
    with pytest.raises(ValidationError):
        Trajectory(())


@pytest.mark.parametrize("make_detector", [
    lambda rule, poset: FullTrackingDetector(rule),
    lambda rule, poset: BoundingIntervalDetector(rule, poset),
])
def test_sound_detectors(two_map_rule, line3, make_detector) -> None:
    assert detection_soundness_check(two_map_rule, make_detector(two_map_rule, line3), t=5)


def test_unsound_detector_gives_shortest_counterexample(two_map_rule) -> None:
    check = detection_soundness_check(two_map_rule, RequestedSetDetector(2), t=3)
    assert not check
    assert check.witness == DrivingSequence(("down",))


def test_soundness_check_cap(two_map_rule) -> None:
    with pytest.raises(EnumerationTooLarge):
        detection_soundness_check(two_map_rule, FullTrackingDetector(two_map_rule), t=10, cap=100)


def test_mtf_chain() -> None:
    mtf = mtf_chain([1, 1, 1])
    assert len(mtf.space) == 6
    assert mtf.space.labels[0] == "012"
    assert solve_stationary(mtf.kernel) == Dist.uniform(6)
    assert detection_soundness_check(mtf.rule, mtf.detector, t=3)


def test_mtf_stationary_law_of_the_front() -> None:
    mtf = mtf_chain([3, 2, 1])
    pi = solve_stationary(mtf.kernel)
    front = [sum(pi[i] for i, perm in enumerate(mtf.permutations) if perm[0] == r) for r in range(3)]
    assert front == [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]


def test_mtf_limits() -> None:
    with pytest.raises(TooManyRecords):
        mtf_chain([1] * 6)
    with pytest.raises(ValidationError, match="positive"):
        mtf_chain([1, 0])


@pytest.mark.parametrize("t", [0, 1, 2, 3])
def test_bounding_interval_contains_every_trajectory(two_map_rule, line3, t) -> None:
    for labels in itertools.product(two_map_rule.labels, repeat=t):
        u = DrivingSequence(labels)
        intervals = bounding_forward(two_map_rule, line3, u)
        for traj in coupled_forward(two_map_rule, u).values():
            for s, interval in enumerate(intervals):
                assert line3.leq(interval.lo, traj[s])
                assert line3.leq(traj[s], interval.hi)
