"""
Perfect samplers: Fill's rejection algorithm and its backward-search,
monotone and cross-monotone variants, CFTP, read-once CFTP and tours.

Every sampler owns the `RngStream` it is handed; runs with independent
streams share no mutable state.
"""
import enum
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .chain import Dist, Kernel, reverse_kernel
from .config import resolve_cap
from .detection import DetectionProcess, Trajectory
from .exceptions import HorizonExceeded, MaxAttemptsExceeded, ValidationError, ZeroMassSeed
from .imputation import impute_dist, impute_sequence
from .poset import CrossSmConfig, Poset, UpwardKernelFamily
from .rng import RngStream
from .rules import TransitionRule, kernel_from_rule


logger = logging.getLogger(__name__)


class Search(str, enum.Enum):
    """When the backward search checks for coalescence"""
    EVERY = "every"
    POW2 = "pow2"
    GUARANTEE = "guarantee"


class RunOutcome(BaseModel):
    """Result of one sampler run.

    :param accepted: whether the run produced an observation
    :param output: the observation, present iff accepted
    :param t_used: Markov steps simulated, backward and forward
    :param attempts: number of independent attempts behind this outcome
    :param seed_state: state the backward phase started from
    :param rng_seed: root seed of the stream that drove the run
    :param rng_key: split path of that stream
    :param horizon: window length t, or the stopping time T' of a backward search
    :param coalescence_time: first time detection fired, if it did
    """
    model_config = ConfigDict(frozen=True)

    accepted: bool
    output: Optional[int] = None
    t_used: int = Field(ge=0)
    attempts: int = Field(1, ge=1)
    seed_state: int
    rng_seed: int
    rng_key: Tuple[int, ...] = ()
    horizon: Optional[int] = None
    coalescence_time: Optional[int] = None

    @model_validator(mode="after")
    def _output_iff_accepted(self) -> "RunOutcome":
        if self.accepted and self.output is None:
            raise ValueError("an accepted run must carry an output")
        if not self.accepted and self.output is not None:
            raise ValueError("a rejected run carries no output")
        return self


class CftpOutcome(NamedTuple):
    output: int
    backward_time: int


class ReadOnceOutcome(NamedTuple):
    output: int
    blocks_used: int


@dataclass(frozen=True)
class TourBatch:
    """Consecutive tours, each a stationary trajectory of length t0.

    `approximate` is set when the first seed was not an exact draw from pi.
    """
    tours: Tuple[Trajectory, ...]
    t0: int
    approximate: bool = False

    def __post_init__(self) -> None:
        for tour in self.tours:
            if len(tour) != self.t0:
                raise ValidationError(f"tour of length {len(tour)} in a batch with t0={self.t0}")

    def __len__(self) -> int:
        return len(self.tours)


def check_rule(k: Kernel, rule: TransitionRule) -> None:
    if kernel_from_rule(rule) != k:
        raise ValidationError("transition rule does not realize the kernel", path="rule")


def backward_path(k_rev: Kernel, x_t: int, t: int, rng: RngStream) -> Trajectory:
    """X_t = x_t, then X_{s-1} ~ K~(X_s, .); returned in time order X_0..X_t"""
    states = [x_t]
    for _ in range(t):
        states.append(rng.index(k_rev[states[-1]].weights))
    return Trajectory(tuple(reversed(states)))


def _fill_prepare(k: Kernel, pi: Dist, rule: TransitionRule, x_t: int) -> Kernel:
    """Checks shared by every attempt; returns K~"""
    if pi[x_t] == 0:
        raise ZeroMassSeed(f"pi puts no mass on the seed state {x_t}", path="seed_state")
    check_rule(k, rule)
    return reverse_kernel(k, pi)


def _fill_attempt(
    k_rev: Kernel,
    rule: TransitionRule,
    det: DetectionProcess,
    t: int,
    x_t: int,
    rng: RngStream,
) -> Tuple[Trajectory, Optional[int]]:
    traj = backward_path(k_rev, x_t, t, rng)
    u = impute_sequence(rule, traj, rng)
    return traj, det.first_hit(u)


def fill_run(
    k: Kernel,
    pi: Dist,
    rule: TransitionRule,
    det: DetectionProcess,
    t: int,
    x_t: int,
    rng: RngStream,
) -> RunOutcome:
    """One attempt of Fill's algorithm with window t and seed X_t = x_t"""
    if t < 0:
        raise ValidationError("t must be non-negative", path="t")
    k_rev = _fill_prepare(k, pi, rule, x_t)
    traj, hit = _fill_attempt(k_rev, rule, det, t, x_t, rng)
    accepted = hit is not None
    logger.debug("fill t=%d seed=%d accepted=%s", t, x_t, accepted)
    return RunOutcome(
        accepted=accepted,
        output=traj[0] if accepted else None,
        t_used=2 * t,
        seed_state=x_t,
        rng_seed=rng.seed,
        rng_key=rng.key,
        horizon=t,
        coalescence_time=hit,
    )


def fill_sample(
    k: Kernel,
    pi: Dist,
    rule: TransitionRule,
    det: DetectionProcess,
    t0: int,
    x_t: int,
    rng: RngStream,
    max_attempts: int = 32,
    doubling: bool = True,
) -> RunOutcome:
    """Repeat Fill's attempts until the first acceptance.

    Attempt i (from 0) has window t0 * 2**i, or t0 when `doubling` is off.
    Attempts draw one after another from `rng`.
    """
    if t0 < 1:
        raise ValidationError("t0 must be at least 1", path="t0")
    if max_attempts < 1:
        raise ValidationError("max_attempts must be at least 1", path="max_attempts")
    k_rev = _fill_prepare(k, pi, rule, x_t)
    total = 0
    for attempt in range(max_attempts):
        t = t0 * 2 ** attempt if doubling else t0
        traj, hit = _fill_attempt(k_rev, rule, det, t, x_t, rng)
        total += 2 * t
        if hit is not None:
            logger.debug("fill accepted after %d attempts, last t=%d", attempt + 1, t)
            return RunOutcome(
                accepted=True,
                output=traj[0],
                t_used=total,
                attempts=attempt + 1,
                seed_state=x_t,
                rng_seed=rng.seed,
                rng_key=rng.key,
                horizon=t,
                coalescence_time=hit,
            )
    raise MaxAttemptsExceeded(f"no acceptance in {max_attempts} attempts (last t={t})")


def search_stops(search: Search, j: int, t0: int) -> bool:
    if search is Search.EVERY:
        return True
    if search is Search.POW2:
        return j >= 1 and j & (j - 1) == 0
    return j >= t0 - 1


def _search_path(
    k_rev: Kernel,
    rule: TransitionRule,
    x0: int,
    t_max: int,
    search: Search,
    t0: int,
    rng: RngStream,
) -> Tuple[List[int], int, int]:
    """Backward search from X_0 = x0.

    Returns the states [X_0, X_{-1}, ..., X_{-T'}], the first coalescence time
    T and the stopping time T'.
    """
    n = rule.n
    path = [x0]
    composite = tuple(range(n))
    coalesced_at: Optional[int] = 0 if n == 1 else None
    j = 0
    while not (coalesced_at is not None and search_stops(search, j, t0)):
        if j >= t_max:
            raise HorizonExceeded(f"no {search.value} stop within t_max={t_max}")
        x_prev = rng.index(k_rev[path[-1]].weights)
        if coalesced_at is None:
            u = impute_dist(rule, x_prev, path[-1]).sample(rng)
            composite = tuple(composite[rule.apply(x, u)] for x in range(n))
            if len(set(composite)) == 1:
                coalesced_at = j + 1
        path.append(x_prev)
        j += 1
    return path, coalesced_at, j


def check_search(search: Union[Search, str], t0: Optional[int], t_max: int) -> Tuple[Search, int]:
    search = Search(search)
    if search is Search.GUARANTEE:
        if t0 is None or t0 < 1:
            raise ValidationError("the guarantee search needs t0 >= 1", path="t0")
        if t0 - 1 > t_max:
            raise ValidationError(f"guarantee length t0-1={t0 - 1} exceeds t_max={t_max}", path="t0")
    return search, t0 or 1


def altalg_run(
    k: Kernel,
    pi: Dist,
    rule: TransitionRule,
    pi_hat: Dist,
    t_max: int,
    rng: RngStream,
    search: Union[Search, str] = Search.EVERY,
    t0: Optional[int] = None,
) -> RunOutcome:
    """Backward search: X_0 ~ pi_hat, extend backward until the composite map
    from time -t to 0 is constant, then report X_{-T'}"""
    search, t0 = check_search(search, t0, t_max)
    outside = [x for x in pi_hat.support() if pi[x] == 0]
    if outside:
        raise ValidationError(f"pi_hat charges states {outside} that pi does not", path="pi_hat")
    check_rule(k, rule)
    k_rev = reverse_kernel(k, pi)
    x0 = rng.index(pi_hat.weights)
    path, coalesced_at, stop = _search_path(k_rev, rule, x0, t_max, search, t0, rng)
    logger.debug("backward search %s: T=%d T'=%d", search.value, coalesced_at, stop)
    return RunOutcome(
        accepted=True,
        output=path[stop],
        t_used=stop + coalesced_at,
        seed_state=x0,
        rng_seed=rng.seed,
        rng_key=rng.key,
        horizon=stop,
        coalescence_time=coalesced_at,
    )


def sm_config(
    cfg_or_k: Union[CrossSmConfig, Kernel],
    pi: Optional[Dist],
    poset: Optional[Poset],
) -> CrossSmConfig:
    if isinstance(cfg_or_k, CrossSmConfig):
        return cfg_or_k
    if poset is None:
        raise ValidationError("a poset is required with a single kernel", path="poset")
    return CrossSmConfig.single(cfg_or_k, poset, pi)


def sm_fill_run(
    cfg_or_k: Union[CrossSmConfig, Kernel],
    pi: Optional[Dist],
    m: UpwardKernelFamily,
    t: int,
    rng: RngStream,
    poset: Optional[Poset] = None,
    validate: bool = True,
) -> RunOutcome:
    """Monotone sampler: X_t = bottom, backward via K~, then Y_0 = top and
    Y_s ~ M_{x_{s-1}, y_{s-1}}(x_s, .); accept iff Y_t = bottom.

    :param cfg_or_k: cross-monotone configuration, or a monotone kernel with `poset`
    :param validate: check the upward family against the kernels first
    """
    cfg = sm_config(cfg_or_k, pi, poset)
    if t < 0:
        raise ValidationError("t must be non-negative", path="t")
    if validate:
        check = m.check(cfg.k, cfg.l)
        if not check:
            raise ValidationError(f"upward kernel family is inconsistent, witness {check.witness}", path="upward")
    bottom, top = cfg.poset.bottom, cfg.poset.top
    k_rev = reverse_kernel(cfg.k, cfg.pi)
    traj = backward_path(k_rev, bottom, t, rng)
    y = top
    for s in range(1, t + 1):
        y = rng.index(m.row(traj[s - 1], y, traj[s]).weights)
    accepted = y == bottom
    return RunOutcome(
        accepted=accepted,
        output=traj[0] if accepted else None,
        t_used=2 * t,
        seed_state=bottom,
        rng_seed=rng.seed,
        rng_key=rng.key,
        horizon=t,
    )


def _compose(rule: TransitionRule, labels: List, n: int) -> Tuple[int, ...]:
    images = tuple(range(n))
    for u in labels:
        images = tuple(rule.apply(y, u) for y in images)
    return images


def cftp_run(rule: TransitionRule, rng: RngStream, t0: int = 1, t_max: int = 2 ** 16) -> CftpOutcome:
    """Coupling from the past with windows T = t0, 2 t0, 4 t0, ...

    Labels already drawn for times -1, ..., -T are reused when the window doubles.
    """
    if t0 < 1:
        raise ValidationError("t0 must be at least 1", path="t0")
    n = rule.n
    past: List = []
    window = t0
    while window <= t_max:
        while len(past) < window:
            past.append(rule.sample(rng))
        images = _compose(rule, past[::-1], n)
        if len(set(images)) == 1:
            logger.debug("cftp coalesced within window %d", window)
            return CftpOutcome(images[0], window)
        window *= 2
    raise HorizonExceeded(f"no coalescence within t_max={t_max}")


def read_once_cftp_run(rule: TransitionRule, t: int, rng: RngStream, max_blocks: Optional[int] = None) -> ReadOnceOutcome:
    """Read-once CFTP with forward blocks of width t.

    The output is the state at the start of the first coalescing block that
    follows an earlier coalescing block; `blocks_used` counts every block drawn.
    """
    if t < 0:
        raise ValidationError("t must be non-negative", path="t")
    cap = resolve_cap(max_blocks, "read_once_max_blocks")
    n = rule.n
    state: Optional[int] = None
    for block in range(1, cap + 1):
        images = _compose(rule, [rule.sample(rng) for _ in range(t)], n)
        coalesced = len(set(images)) == 1
        if coalesced and state is not None:
            return ReadOnceOutcome(state, block)
        if coalesced:
            state = images[0]
        elif state is not None:
            state = images[state]
    raise HorizonExceeded(f"read-once CFTP did not finish within {cap} blocks")


def tours_generate(
    k: Kernel,
    pi: Dist,
    rule: TransitionRule,
    t0: int,
    nu: int,
    rng: RngStream,
    seed_state: Optional[int] = None,
    seed_is_exact: bool = False,
    t_max: int = 2 ** 16,
) -> TourBatch:
    """Chain guarantee-time backward searches into nu tours of length t0.

    Tour i is (X_{-(t0-1)}, ..., X_0) of search i, and X_{-T'} of search i
    seeds search i + 1. Without `seed_state` the first seed comes from an
    exact backward search on `rng.split(0)`.
    """
    if t0 < 1:
        raise ValidationError("t0 must be at least 1", path="t0")
    if nu < 0:
        raise ValidationError("nu must be non-negative", path="nu")
    search, t0 = check_search(Search.GUARANTEE, t0, t_max)
    check_rule(k, rule)
    k_rev = reverse_kernel(k, pi)
    if seed_state is None:
        seed = altalg_run(k, pi, rule, pi, t_max, rng.split(0)).output
        approximate = False
    else:
        if pi[seed_state] == 0:
            raise ZeroMassSeed(f"pi puts no mass on the seed state {seed_state}", path="seed_state")
        seed = seed_state
        approximate = not seed_is_exact
        if approximate:
            logger.warning("tours seeded with a fixed state; marginals are only approximately stationary")
    tours = []
    for i in range(nu):
        path, _, stop = _search_path(k_rev, rule, seed, t_max, search, t0, rng.split(i + 1))
        tours.append(Trajectory(tuple(reversed(path[:t0]))))
        seed = path[stop]
    return TourBatch(tuple(tours), t0, approximate)
