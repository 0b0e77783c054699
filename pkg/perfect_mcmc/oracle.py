"""
Exact enumeration of every sampler's randomness.

Backward paths are enumerated explicitly and weighted by products of K~ and
seed probabilities; the forward phase is a dynamic program over detection
states fed by exact image laws of the imputed labels. Everything is a
`Fraction`, so the identities the samplers rest on can be asserted with `==`.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import sympy

from .chain import Dist, Kernel, reverse_kernel
from .config import resolve_cap
from .detection import DetectionProcess
from .exceptions import EnumerationTooLarge, ValidationError, ZeroMassSeed
from .imputation import impute_dist
from .poset import CrossSmConfig, Poset, UpwardKernelFamily
from .rules import TransitionRule
from .samplers import Search, check_rule, check_search, search_stops, sm_config


logger = logging.getLogger(__name__)

FIRED = "fired"


class _Budget():
    def __init__(self, cap: Optional[int], what: str) -> None:
        self.cap = resolve_cap(cap, "enum_cap")
        self.what = what
        self.count = 0

    def spend(self, n: int = 1) -> None:
        self.count += n
        if self.count > self.cap:
            raise EnumerationTooLarge(self.what, self.count, self.cap)


@dataclass(frozen=True)
class AcceptanceReport:
    """Exact acceptance statistics of one sampler configuration.

    :param p_accept: probability of acceptance in the simulated space
    :param cond_law: s -> law of X_s given acceptance (empty if p_accept is 0)
    :param rnd_density: z -> D(z), density of the seed law w.r.t. pi
    :param p_first_space: P(C and X' in the seed support) with X_0 ~ pi and i.i.d. labels
    :param first_space_joint: z -> P(C and X' = z) in that same space
    :param terms: number of enumerated terms
    """
    p_accept: Fraction
    cond_law: Dict[int, Dist]
    rnd_density: Dict[int, Fraction]
    p_first_space: Fraction
    first_space_joint: Dict[int, Fraction] = field(default_factory=dict)
    terms: int = 0

    def density_identity(self) -> Fraction:
        """sum_z D(z) P(C and X' = z); equals `p_accept`"""
        return sum(
            (d * self.first_space_joint.get(z, Fraction(0)) for z, d in self.rnd_density.items()),
            Fraction(0),
        )


@dataclass(frozen=True)
class AltalgReport:
    """Backward-search enumeration: acceptance report plus the law of (T', W)
    given T' <= t_max"""
    report: AcceptanceReport
    joint: Dict[Tuple[int, int], Fraction]

    def time_law(self) -> Dict[int, Fraction]:
        law: Dict[int, Fraction] = {}
        for (time, _), p in self.joint.items():
            law[time] = law.get(time, Fraction(0)) + p
        return law

    def output_law(self) -> Dict[int, Fraction]:
        law: Dict[int, Fraction] = {}
        for (_, w), p in self.joint.items():
            law[w] = law.get(w, Fraction(0)) + p
        return law

    def factorizes(self) -> bool:
        """P(T' = a, W = w) = P(T' = a) P(W = w) for every a, w"""
        times, outputs = self.time_law(), self.output_law()
        return all(
            self.joint.get((a, w), Fraction(0)) == pa * pw
            for a, pa in times.items()
            for w, pw in outputs.items()
        )


@dataclass(frozen=True)
class ReadOnceReport:
    """Exact block structure of read-once CFTP.

    :param q: probability that a single block coalesces
    :param coalesced_law: law of the common value of a coalescing block
    :param joint: (blocks_used, output) -> probability, for blocks_used <= max_blocks
    :param output_law: unconditional law of the output
    """
    q: Fraction
    coalesced_law: Dist
    joint: Dict[Tuple[int, int], Fraction]
    output_law: Dist
    max_blocks: int

    def blocks_law(self) -> Dict[int, Fraction]:
        law: Dict[int, Fraction] = {}
        for (b, _), p in self.joint.items():
            law[b] = law.get(b, Fraction(0)) + p
        return law

    def conditional(self, blocks_used: int) -> Dist:
        """Law of the output given `blocks_used`"""
        n = len(self.output_law)
        masses = [self.joint.get((blocks_used, w), Fraction(0)) for w in range(n)]
        return Dist.normalized(masses)


class PerformanceIdentity(NamedTuple):
    """Three exact expressions of the monotone sampler's acceptance probability"""
    direct: Fraction
    infimum: Fraction
    reversed: Fraction


def _moves(
    rule: TransitionRule,
    driver,
    det: Optional[DetectionProcess],
    positions: Optional[Tuple[int, ...]],
    dstate: Hashable,
) -> Iterator[Tuple[Optional[Tuple[int, ...]], Hashable, Fraction]]:
    """Joint law of (positions, detection state) after one label drawn from `driver`"""
    fired = det is None or dstate == FIRED
    watched = () if fired else det.watched(dstate)
    if watched is not None:
        coords = sorted(set(positions or ()) | set(watched))
        for images, w in driver.image_law(coords):
            lookup = dict(zip(coords, images))
            moved = None if positions is None else tuple(lookup[y] for y in positions)
            yield moved, dstate if fired else det.advance(dstate, lookup), w
        return
    for u, w in driver.items():
        moved = None if positions is None else tuple(rule.apply(y, u) for y in positions)
        yield moved, det.step(dstate, u), w


def _settle(det: DetectionProcess, dstate: Hashable) -> Hashable:
    return FIRED if dstate != FIRED and det.in_target(dstate) else dstate


def _add(table: Dict, key, p: Fraction) -> None:
    table[key] = table.get(key, Fraction(0)) + p


def _backward_paths(k_rev: Kernel, seed: Dist, t: int, budget: _Budget) -> Iterator[Tuple[Tuple[int, ...], Fraction]]:
    """Every X_0..X_t with X_t ~ seed and X_{s-1} ~ K~(X_s, .), with its probability"""
    def walk(states: List[int], p: Fraction) -> Iterator[Tuple[Tuple[int, ...], Fraction]]:
        if len(states) == t + 1:
            budget.spend()
            yield tuple(reversed(states)), p
            return
        row = k_rev[states[-1]]
        for x in row.support():
            yield from walk(states + [x], p * row[x])

    for z in seed.support():
        yield from walk([z], seed[z])


def _fire_probability(rule: TransitionRule, det: DetectionProcess, path: Sequence[int], budget: _Budget) -> Fraction:
    states: Dict[Hashable, Fraction] = {_settle(det, det.initial()): Fraction(1)}
    for s in range(1, len(path)):
        imputed = impute_dist(rule, path[s - 1], path[s])
        nxt: Dict[Hashable, Fraction] = {}
        for dstate, p in states.items():
            if dstate == FIRED:
                _add(nxt, FIRED, p)
                continue
            for _, dstate_next, w in _moves(rule, imputed, det, None, dstate):
                budget.spend()
                _add(nxt, _settle(det, dstate_next), p * w)
        states = nxt
    return states.get(FIRED, Fraction(0))


def _first_space_joint(
    rule: TransitionRule,
    det: DetectionProcess,
    pi: Dist,
    t: int,
    budget: _Budget,
) -> Dict[int, Fraction]:
    """z -> P(detection by t and X_t = z) with X_0 ~ pi and i.i.d. labels"""
    n = rule.n
    states = {(tuple(range(n)), _settle(det, det.initial())): Fraction(1)}
    for _ in range(t):
        nxt: Dict = {}
        for (positions, dstate), p in states.items():
            for moved, dstate_next, w in _moves(rule, rule, det, positions, dstate):
                budget.spend()
                _add(nxt, (moved, _settle(det, dstate_next)), p * w)
        states = nxt
    joint: Dict[int, Fraction] = {}
    for (positions, dstate), p in states.items():
        if dstate == FIRED:
            for x in range(n):
                if pi[x]:
                    _add(joint, positions[x], p * pi[x])
    return joint


def _seed_law(n: int, seed: Union[int, Dist], pi: Dist) -> Dist:
    law = seed if isinstance(seed, Dist) else Dist.point(n, seed)
    outside = [z for z in law.support() if pi[z] == 0]
    if outside:
        raise ZeroMassSeed(f"seed law charges states {outside} of pi-mass 0", path="seed_state")
    return law


def _normalize_laws(masses: List[List[Fraction]], total: Fraction) -> Dict[int, Dist]:
    if total == 0:
        return {}
    return {s: Dist(tuple(m / total for m in row)) for s, row in enumerate(masses)}


def enumerate_fill(
    k: Kernel,
    pi: Dist,
    rule: TransitionRule,
    det: DetectionProcess,
    t: int,
    seed: Union[int, Dist],
    cap: Optional[int] = None,
) -> AcceptanceReport:
    """Exact acceptance probability and laws of X_0..X_t given acceptance for
    Fill's algorithm with window t and seed X_t ~ `seed` (a state or a law)"""
    check_rule(k, rule)
    n = k.size
    nu = _seed_law(n, seed, pi)
    k_rev = reverse_kernel(k, pi)
    budget = _Budget(cap, "fill enumeration terms")
    p_accept = Fraction(0)
    masses = [[Fraction(0)] * n for _ in range(t + 1)]
    for path, w in _backward_paths(k_rev, nu, t, budget):
        p = _fire_probability(rule, det, path, budget)
        if p == 0:
            continue
        p_accept += w * p
        for s, x in enumerate(path):
            masses[s][x] += w * p
    joint = _first_space_joint(rule, det, pi, t, budget)
    logger.debug("fill enumeration: P(C)=%s over %d terms", p_accept, budget.count)
    return AcceptanceReport(
        p_accept=p_accept,
        cond_law=_normalize_laws(masses, p_accept),
        rnd_density={z: nu[z] / pi[z] for z in nu.support()},
        p_first_space=sum((joint.get(z, Fraction(0)) for z in nu.support()), Fraction(0)),
        first_space_joint=joint,
        terms=budget.count,
    )


def acceptance_profile(
    k: Kernel,
    pi: Dist,
    rule: TransitionRule,
    det: DetectionProcess,
    ts: Sequence[int],
    seed: Union[int, Dist],
    cap: Optional[int] = None,
) -> Dict[int, Fraction]:
    """t -> exact acceptance probability of `enumerate_fill` for each t in `ts`"""
    return {t: enumerate_fill(k, pi, rule, det, t, seed, cap).p_accept for t in ts}


def enumerate_fill_sample(
    k: Kernel,
    pi: Dist,
    rule: TransitionRule,
    det: DetectionProcess,
    t0: int,
    seed: Union[int, Dist],
    max_attempts: int,
    doubling: bool = True,
    cap: Optional[int] = None,
) -> Dict[Tuple[int, int], Fraction]:
    """(attempts, output) -> probability, given acceptance within `max_attempts`"""
    joint: Dict[Tuple[int, int], Fraction] = {}
    survive = Fraction(1)
    for attempt in range(max_attempts):
        t = t0 * 2 ** attempt if doubling else t0
        report = enumerate_fill(k, pi, rule, det, t, seed, cap)
        if report.p_accept:
            for w, p in enumerate(report.cond_law[0]):
                if p:
                    _add(joint, (attempt + 1, w), survive * report.p_accept * p)
        survive *= 1 - report.p_accept
    total = sum(joint.values(), Fraction(0))
    if total == 0:
        return {}
    return {key: p / total for key, p in joint.items()}


def enumerate_altalg(
    k: Kernel,
    pi: Dist,
    rule: TransitionRule,
    pi_hat: Dist,
    t_max: int,
    search: Union[Search, str] = Search.EVERY,
    t0: Optional[int] = None,
    cap: Optional[int] = None,
) -> AltalgReport:
    """Exact law of the backward search's stopping time T' and output X_{-T'}"""
    search, t0 = check_search(search, t0, t_max)
    check_rule(k, rule)
    n = k.size
    outside = [x for x in pi_hat.support() if pi[x] == 0]
    if outside:
        raise ValidationError(f"pi_hat charges states {outside} that pi does not", path="pi_hat")
    k_rev = reverse_kernel(k, pi)
    budget = _Budget(cap, "backward search enumeration terms")
    identity = tuple(range(n))
    everything = tuple(range(n))

    def settle(composite: Optional[Tuple[int, ...]]) -> Optional[Tuple[int, ...]]:
        return None if composite is None or len(set(composite)) == 1 else composite

    # second space: (X_{-j}, composite map or None once constant)
    states: Dict[Tuple[int, Optional[Tuple[int, ...]]], Fraction] = {
        (x, settle(identity)): pi_hat[x] for x in pi_hat.support()
    }
    joint: Dict[Tuple[int, int], Fraction] = {}
    for j in range(t_max + 1):
        for key in [key for key in states if key[1] is None and search_stops(search, j, t0)]:
            _add(joint, (j, key[0]), states.pop(key))
        if j == t_max or not states:
            break
        nxt: Dict = {}
        for (x, composite), p in states.items():
            row = k_rev[x]
            for x_prev in row.support():
                q = p * row[x_prev]
                if composite is None:
                    budget.spend()
                    _add(nxt, (x_prev, None), q)
                    continue
                for images, w in impute_dist(rule, x_prev, x).image_law(everything):
                    budget.spend()
                    _add(nxt, (x_prev, settle(tuple(composite[y] for y in images))), q * w)
        states = nxt

    # first space: composite maps under i.i.d. labels, recording the common value
    first: Dict[int, Fraction] = {}
    maps: Dict[Tuple[int, ...], Fraction] = {identity: Fraction(1)}
    for j in range(t_max + 1):
        for composite in [c for c in maps if len(set(c)) == 1 and search_stops(search, j, t0)]:
            _add(first, composite[0], maps.pop(composite))
        if j == t_max or not maps:
            break
        nxt = {}
        for composite, p in maps.items():
            if len(set(composite)) == 1:
                budget.spend()
                _add(nxt, composite, p)
                continue
            for images, w in rule.image_law(everything):
                budget.spend()
                _add(nxt, tuple(composite[y] for y in images), p * w)
        maps = nxt

    p_accept = sum(joint.values(), Fraction(0))
    outputs = [Fraction(0)] * n
    for (_, w), p in joint.items():
        outputs[w] += p
    report = AcceptanceReport(
        p_accept=p_accept,
        cond_law=_normalize_laws([outputs], p_accept),
        rnd_density={z: pi_hat[z] / pi[z] for z in pi_hat.support()},
        p_first_space=sum((first.get(z, Fraction(0)) for z in pi_hat.support()), Fraction(0)),
        first_space_joint=first,
        terms=budget.count,
    )
    conditional = {key: p / p_accept for key, p in joint.items()} if p_accept else {}
    logger.debug("backward search enumeration: P(T'<=%d)=%s", t_max, p_accept)
    return AltalgReport(report, conditional)


def enumerate_sm(
    cfg_or_k: Union[CrossSmConfig, Kernel],
    pi: Optional[Dist],
    m: UpwardKernelFamily,
    t: int,
    poset: Optional[Poset] = None,
    cap: Optional[int] = None,
) -> AcceptanceReport:
    """Exact acceptance of the monotone sampler; `p_first_space` is L^t(top, bottom)"""
    cfg = sm_config(cfg_or_k, pi, poset)
    n = cfg.k.size
    bottom, top = cfg.poset.bottom, cfg.poset.top
    k_rev = reverse_kernel(cfg.k, cfg.pi)
    budget = _Budget(cap, "monotone enumeration terms")
    p_accept = Fraction(0)
    masses = [[Fraction(0)] * n for _ in range(t + 1)]
    for path, w in _backward_paths(k_rev, Dist.point(n, bottom), t, budget):
        uppers = {top: Fraction(1)}
        for s in range(1, t + 1):
            nxt: Dict[int, Fraction] = {}
            for y, p in uppers.items():
                row = m.row(path[s - 1], y, path[s])
                for z in row.support():
                    budget.spend()
                    _add(nxt, z, p * row[z])
            uppers = nxt
        p = uppers.get(bottom, Fraction(0))
        if p == 0:
            continue
        p_accept += w * p
        for s, x in enumerate(path):
            masses[s][x] += w * p
    p_first = cfg.l.power(t).prob(top, bottom)
    return AcceptanceReport(
        p_accept=p_accept,
        cond_law=_normalize_laws(masses, p_accept),
        rnd_density={bottom: 1 / cfg.pi[bottom]},
        p_first_space=p_first,
        first_space_joint={bottom: p_first},
        terms=budget.count,
    )


def performance_identity(cfg: CrossSmConfig, t: int) -> PerformanceIdentity:
    """L^t(top, bottom)/pi(bottom), its infimum form over starts y, and
    rho * inf_y L~^t(bottom, y)/sigma(y) over the support of sigma.

    L~^t(bottom, y)/sigma(y) = L^t(y, bottom)/sigma(bottom), so the reversed
    form needs no reversal of L and stays defined when L has transient states.
    """
    bottom, top = cfg.poset.bottom, cfg.poset.top
    pi_bottom = cfg.pi[bottom]
    power = cfg.l.power(t)
    n = cfg.l.size
    # rho / sigma(bottom) = 1 / pi(bottom)
    reversed_inf = min(power.prob(y, bottom) for y in cfg.sigma.support())
    return PerformanceIdentity(
        direct=power.prob(top, bottom) / pi_bottom,
        infimum=min(power.prob(y, bottom) for y in range(n)) / pi_bottom,
        reversed=reversed_inf / pi_bottom,
    )


def _map_law(rule: TransitionRule, t: int, budget: _Budget) -> Dict[Tuple[int, ...], Fraction]:
    """Law of the t-step composite map x -> Y_t(x)"""
    everything = tuple(range(rule.n))
    maps: Dict[Tuple[int, ...], Fraction] = {everything: Fraction(1)}
    for _ in range(t):
        nxt: Dict[Tuple[int, ...], Fraction] = {}
        for composite, p in maps.items():
            coords = tuple(sorted(set(composite)))
            for images, w in rule.image_law(coords):
                budget.spend()
                lookup = dict(zip(coords, images))
                _add(nxt, tuple(lookup[y] for y in composite), p * w)
        maps = nxt
    return maps


def enumerate_cftp_window(rule: TransitionRule, t: int, cap: Optional[int] = None) -> Fraction:
    """P(all starts coalesce within a window of t steps)"""
    maps = _map_law(rule, t, _Budget(cap, "coupling window terms"))
    return sum((p for composite, p in maps.items() if len(set(composite)) == 1), Fraction(0))


def enumerate_read_once(
    rule: TransitionRule,
    t: int,
    max_blocks: int = 64,
    cap: Optional[int] = None,
) -> ReadOnceReport:
    """Exact law of (blocks_used, output) of read-once CFTP with block width t.

    With q the block coalescence probability, nu_c the law of a coalescing
    block's value and N the map law of a non-coalescing block,
    P(blocks_used = b, W = .) = q^2 (1 - q)^(b - 2) sum_{k < b - 1} nu_c N^k,
    and the output law solves x (I - (1 - q) N) = q nu_c.
    """
    if max_blocks < 2:
        raise ValidationError("max_blocks must be at least 2", path="max_blocks")
    n = rule.n
    maps = _map_law(rule, t, _Budget(cap, "read-once block terms"))
    q = Fraction(0)
    values = [Fraction(0)] * n
    stay = [[Fraction(0)] * n for _ in range(n)]
    for composite, p in maps.items():
        if len(set(composite)) == 1:
            q += p
            values[composite[0]] += p
        else:
            for x in range(n):
                stay[x][composite[x]] += p
    if q == 0:
        raise ValidationError(f"blocks of width {t} never coalesce", path="t")
    nu_c = Dist.normalized(values)
    joint: Dict[Tuple[int, int], Fraction] = {}
    if q == 1:
        output = nu_c
        for w in nu_c.support():
            joint[(2, w)] = nu_c[w]
    else:
        step = Kernel.from_rows([[m / (1 - q) for m in row] for row in stay])
        running = list(nu_c.weights)
        partial = list(nu_c.weights)
        for b in range(2, max_blocks + 1):
            scale = q * q * (1 - q) ** (b - 2)
            for w in range(n):
                if partial[w]:
                    joint[(b, w)] = scale * partial[w]
            running = list(step.left(Dist(tuple(running))).weights)
            partial = [a + r for a, r in zip(partial, running)]
        system = sympy.eye(n) - sympy.Rational((1 - q).numerator, (1 - q).denominator) * sympy.Matrix(
            [[sympy.Rational(v.numerator, v.denominator) for v in row] for row in step.matrix()]
        )
        rhs = sympy.Matrix([sympy.Rational((q * v).numerator, (q * v).denominator) for v in nu_c.weights])
        solution = system.T.LUsolve(rhs)
        output = Dist(tuple(Fraction(int(v.p), int(v.q)) for v in solution))
    return ReadOnceReport(q=q, coalesced_law=nu_c, joint=joint, output_law=output, max_blocks=max_blocks)
