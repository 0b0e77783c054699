"""
Subcommands of the `perfect-mcmc` command line.

Replication i of a run seeded with `--rng-seed s` is driven by
`RngStream(s).split(i)`; rows are written in replication order.
"""
import enum
import logging
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Tuple

from .chain import Dist
from .detection import BoundingIntervalDetector, DetectionProcess, FullTrackingDetector
from .exceptions import NotMonotone, ValidationError
from .fields import Flag
from .oracle import (
    AcceptanceReport,
    enumerate_altalg,
    enumerate_cftp_window,
    enumerate_fill,
    enumerate_read_once,
    enumerate_sm,
    performance_identity,
)
from .poset import CrossSmConfig, UpwardKernelFamily, is_realizably_monotone, upward_family_from_rule
from .responses import CSVResult, JSONResult
from .rng import BIT_GENERATOR, RngStream
from .routing import CommandRouter
from .rules import inverse_transform_rule
from .samplers import (
    RunOutcome,
    Search,
    altalg_run,
    cftp_run,
    fill_run,
    fill_sample,
    read_once_cftp_run,
    sm_fill_run,
    tours_generate,
)
from .schemas import Chain, load_chain_spec
from .stats import EmpiricalLaw, chi_square_gof, tv_distance


logger = logging.getLogger(__name__)

router = CommandRouter(prog="perfect-mcmc", description="Perfect sampling for finite Markov chains")


class Detector(str, enum.Enum):
    FULL = "full"
    BOUNDING = "bounding"
    MTF = "mtf"


class OutputFormat(str, enum.Enum):
    JSON = "json"
    CSV = "csv"


class Variant(str, enum.Enum):
    FILL = "fill"
    ALTALG = "altalg"
    SM = "sm"
    CFTP = "cftp"
    READ_ONCE = "read-once"


RUN_COLUMNS = [
    "replication", "accepted", "output", "t_used", "attempts", "seed_state",
    "horizon", "coalescence_time", "rng_seed", "rng_key", "bit_generator",
]


def spec_flag() -> Flag:
    return Flag(..., description="chain spec JSON file", metavar="PATH")


def rng_seed_flag() -> Flag:
    return Flag(0, ge=0, description="root seed; replication i uses split(i)", metavar="U64")


def out_flag() -> Flag:
    return Flag(None, description="write the result here instead of stdout", metavar="PATH")


def format_flag() -> Flag:
    return Flag(OutputFormat.JSON, alias="--format", description="result format")


def load_chain(spec: str) -> Chain:
    return load_chain_spec(spec).chain


def make_detector(chain: Chain, detector: Detector) -> DetectionProcess:
    if detector is Detector.FULL:
        return FullTrackingDetector(chain.rule)
    if detector is Detector.BOUNDING:
        if chain.poset is None:
            raise ValidationError("the bounding detector needs a poset in the chain spec", path="--detector")
        return BoundingIntervalDetector(chain.rule, chain.poset)
    if chain.mtf is None:
        raise ValidationError("the mtf detector needs an mtf chain spec", path="--detector")
    return chain.mtf.detector


def upward_family(chain: Chain) -> UpwardKernelFamily:
    """From the spec's rule when it is monotone, else from the inverse-CDF rule of a total order"""
    if chain.poset is None:
        raise ValidationError("the monotone sampler needs a poset in the chain spec", path="poset")
    poset = chain.poset
    if is_realizably_monotone(chain.rule, poset):
        return upward_family_from_rule(chain.rule, poset)
    order = poset.topological_order()
    if all(poset.leq(a, b) for a, b in zip(order, order[1:])):
        return upward_family_from_rule(inverse_transform_rule(chain.kernel, order), poset)
    raise NotMonotone("the chain spec's rule is not monotone and the order is not total")


def replications(rng_seed: int, reps: int) -> Iterator[Tuple[int, RngStream]]:
    root = RngStream(rng_seed)
    for i in range(reps):
        yield i, root.split(i)


def outcome_row(chain: Chain, i: int, outcome: RunOutcome) -> Dict[str, Any]:
    row = outcome.model_dump()
    row.update(
        replication=i,
        output=None if outcome.output is None else chain.space.label(outcome.output),
        seed_state=chain.space.label(outcome.seed_state),
        rng_key=list(outcome.rng_key),
        bit_generator=BIT_GENERATOR,
    )
    return row


def runs_result(rows: List[Dict[str, Any]], fmt: OutputFormat, columns: List[str], **meta: Any):
    if fmt is OutputFormat.CSV:
        return CSVResult(columns, rows)
    return JSONResult({"runs": rows, **meta})


def labelled(chain: Chain, values: Dict[int, Fraction]) -> Dict[str, Fraction]:
    return {chain.space.label(x): p for x, p in sorted(values.items())}


def dist_labelled(chain: Chain, dist: Dist) -> Dict[str, Fraction]:
    return dist.as_dict(chain.space)


def seed_law(chain: Chain, seed_state: Optional[str]) -> Dist:
    if seed_state is None:
        return chain.pi
    return Dist.point(len(chain.space), chain.state(seed_state))


@router.command("fill")
def fill(
    spec: str = spec_flag(),
    t: int = Flag(2, ge=0, description="window length"),
    seed_state: Optional[str] = Flag(None, description="X_t; drawn from pi for each replication when omitted", metavar="LABEL"),
    detector: Detector = Flag(Detector.FULL, description="detection process"),
    max_attempts: int = Flag(1, ge=1, description="above 1, retry with doubled windows until acceptance"),
    reps: int = Flag(1, ge=0, description="number of replications"),
    rng_seed: int = rng_seed_flag(),
    out: Optional[str] = out_flag(),
    fmt: OutputFormat = format_flag(),
):
    """Fill's rejection sampler, one row per replication"""
    chain = load_chain(spec)
    det = make_detector(chain, detector)
    x_t = None if seed_state is None else chain.state(seed_state)
    rows = []
    for i, rng in replications(rng_seed, reps):
        seed = rng.index(chain.pi.weights) if x_t is None else x_t
        if max_attempts == 1:
            outcome = fill_run(chain.kernel, chain.pi, chain.rule, det, t, seed, rng)
        else:
            outcome = fill_sample(chain.kernel, chain.pi, chain.rule, det, t, seed, rng, max_attempts=max_attempts)
        rows.append(outcome_row(chain, i, outcome))
    return runs_result(rows, fmt, RUN_COLUMNS, sampler="fill", bit_generator=BIT_GENERATOR)


@router.command("altalg")
def altalg(
    spec: str = spec_flag(),
    t_max: int = Flag(1024, ge=0, description="longest backward search"),
    search: Search = Flag(Search.EVERY, description="when to test for coalescence"),
    t0: Optional[int] = Flag(None, ge=1, description="guarantee length of the guarantee search"),
    seed_state: Optional[str] = Flag(None, description="X_0; drawn from pi when omitted", metavar="LABEL"),
    reps: int = Flag(1, ge=0, description="number of replications"),
    rng_seed: int = rng_seed_flag(),
    out: Optional[str] = out_flag(),
    fmt: OutputFormat = format_flag(),
):
    """Backward-search sampler: extend the past until the composite map is constant"""
    chain = load_chain(spec)
    pi_hat = seed_law(chain, seed_state)
    rows = [
        outcome_row(chain, i, altalg_run(chain.kernel, chain.pi, chain.rule, pi_hat, t_max, rng, search, t0))
        for i, rng in replications(rng_seed, reps)
    ]
    return runs_result(rows, fmt, RUN_COLUMNS, sampler="altalg", bit_generator=BIT_GENERATOR)


@router.command("sm")
def sm(
    spec: str = spec_flag(),
    t: int = Flag(2, ge=0, description="window length"),
    reps: int = Flag(1, ge=0, description="number of replications"),
    rng_seed: int = rng_seed_flag(),
    out: Optional[str] = out_flag(),
    fmt: OutputFormat = format_flag(),
):
    """Monotone sampler seeded at the bottom state"""
    chain = load_chain(spec)
    m = upward_family(chain)
    rows = []
    for i, rng in replications(rng_seed, reps):
        outcome = sm_fill_run(chain.kernel, chain.pi, m, t, rng, poset=chain.poset, validate=i == 0)
        rows.append(outcome_row(chain, i, outcome))
    return runs_result(rows, fmt, RUN_COLUMNS, sampler="sm", bit_generator=BIT_GENERATOR)


@router.command("cftp")
def cftp(
    spec: str = spec_flag(),
    t0: int = Flag(1, ge=1, description="first window, doubled until coalescence"),
    t_max: int = Flag(2 ** 16, ge=1, description="largest window"),
    reps: int = Flag(1, ge=0, description="number of replications"),
    rng_seed: int = rng_seed_flag(),
    out: Optional[str] = out_flag(),
    fmt: OutputFormat = format_flag(),
):
    """Coupling from the past with doubling windows"""
    chain = load_chain(spec)
    rows = []
    for i, rng in replications(rng_seed, reps):
        outcome = cftp_run(chain.rule, rng, t0=t0, t_max=t_max)
        rows.append({
            "replication": i,
            "output": chain.space.label(outcome.output),
            "backward_time": outcome.backward_time,
            "rng_seed": rng.seed,
            "rng_key": list(rng.key),
            "bit_generator": BIT_GENERATOR,
        })
    columns = ["replication", "output", "backward_time", "rng_seed", "rng_key", "bit_generator"]
    return runs_result(rows, fmt, columns, sampler="cftp", bit_generator=BIT_GENERATOR)


@router.command("read-once")
def read_once(
    spec: str = spec_flag(),
    t: int = Flag(2, ge=1, description="block width"),
    reps: int = Flag(1, ge=0, description="number of replications"),
    rng_seed: int = rng_seed_flag(),
    out: Optional[str] = out_flag(),
    fmt: OutputFormat = format_flag(),
):
    """Read-once coupling from the past with forward blocks"""
    chain = load_chain(spec)
    rows = []
    for i, rng in replications(rng_seed, reps):
        outcome = read_once_cftp_run(chain.rule, t, rng)
        rows.append({
            "replication": i,
            "output": chain.space.label(outcome.output),
            "blocks_used": outcome.blocks_used,
            "rng_seed": rng.seed,
            "rng_key": list(rng.key),
            "bit_generator": BIT_GENERATOR,
        })
    columns = ["replication", "output", "blocks_used", "rng_seed", "rng_key", "bit_generator"]
    return runs_result(rows, fmt, columns, sampler="read-once", bit_generator=BIT_GENERATOR)


@router.command("tours")
def tours(
    spec: str = spec_flag(),
    t0: int = Flag(4, ge=1, description="tour length"),
    nu: int = Flag(10, ge=0, description="number of tours"),
    seed_state: Optional[str] = Flag(None, description="first seed; an exact draw when omitted", metavar="LABEL"),
    t_max: int = Flag(2 ** 16, ge=1, description="longest backward search"),
    rng_seed: int = rng_seed_flag(),
    out: Optional[str] = out_flag(),
    fmt: OutputFormat = format_flag(),
):
    """Chained guarantee-time searches, one stationary tour per search"""
    chain = load_chain(spec)
    seed = None if seed_state is None else chain.state(seed_state)
    batch = tours_generate(chain.kernel, chain.pi, chain.rule, t0, nu, RngStream(rng_seed), seed_state=seed, t_max=t_max)
    labels = [[chain.space.label(x) for x in tour] for tour in batch.tours]
    if fmt is OutputFormat.CSV:
        return CSVResult(["tour", "states"], [{"tour": i, "states": tour} for i, tour in enumerate(labels)])
    return JSONResult({
        "t0": batch.t0,
        "approximate": batch.approximate,
        "tours": labels,
        "rng_seed": rng_seed,
        "bit_generator": BIT_GENERATOR,
    })


def report_payload(chain: Chain, report: AcceptanceReport) -> Dict[str, Any]:
    return {
        "p_accept": report.p_accept,
        "cond_law": {str(s): dist_labelled(chain, law) for s, law in report.cond_law.items()},
        "rnd_density": labelled(chain, report.rnd_density),
        "p_first_space": report.p_first_space,
        "first_space_joint": labelled(chain, report.first_space_joint),
        "terms": report.terms,
    }


@router.command("oracle")
def oracle(
    spec: str = spec_flag(),
    variant: Variant = Flag(Variant.FILL, description="sampler to enumerate"),
    t: int = Flag(2, ge=0, description="window or block length"),
    seed_state: Optional[str] = Flag(None, description="seed state; pi when omitted", metavar="LABEL"),
    detector: Detector = Flag(Detector.FULL, description="detection process of fill"),
    search: Search = Flag(Search.EVERY, description="search schedule of altalg"),
    t_max: int = Flag(16, ge=0, description="longest backward search of altalg"),
    t0: Optional[int] = Flag(None, ge=1, description="guarantee length of the guarantee search"),
    max_blocks: int = Flag(16, ge=2, description="blocks tabulated for read-once"),
    out: Optional[str] = out_flag(),
):
    """Exact acceptance probabilities and output laws, as "p/q" rationals"""
    chain = load_chain(spec)
    payload: Dict[str, Any] = {"variant": variant}
    if variant is Variant.FILL:
        report = enumerate_fill(chain.kernel, chain.pi, chain.rule, make_detector(chain, detector), t, seed_law(chain, seed_state))
        payload.update(report_payload(chain, report), t=t, density_identity=report.density_identity())
    elif variant is Variant.ALTALG:
        result = enumerate_altalg(chain.kernel, chain.pi, chain.rule, seed_law(chain, seed_state), t_max, search, t0)
        payload.update(
            report_payload(chain, result.report),
            t_max=t_max,
            time_law={str(a): p for a, p in sorted(result.time_law().items())},
            output_law=labelled(chain, result.output_law()),
            factorizes=result.factorizes(),
        )
    elif variant is Variant.SM:
        report = enumerate_sm(chain.kernel, chain.pi, upward_family(chain), t, poset=chain.poset)
        identity = performance_identity(CrossSmConfig.single(chain.kernel, chain.poset, chain.pi), t)
        payload.update(report_payload(chain, report), t=t, performance=identity._asdict())
    elif variant is Variant.CFTP:
        payload.update(t=t, p_coalesce=enumerate_cftp_window(chain.rule, t))
    else:
        result = enumerate_read_once(chain.rule, t, max_blocks=max_blocks)
        payload.update(
            t=t,
            q=result.q,
            coalesced_law=dist_labelled(chain, result.coalesced_law),
            output_law=dist_labelled(chain, result.output_law),
            blocks_law={str(b): p for b, p in sorted(result.blocks_law().items())},
        )
    return JSONResult(payload)


def draw_outputs(chain: Chain, variant: Variant, reps: int, rng_seed: int, options: Dict[str, Any]) -> List[int]:
    """Outputs of the accepted runs among `reps` replications"""
    outputs = []
    if variant is Variant.FILL:
        det = make_detector(chain, options["detector"])
        for _, rng in replications(rng_seed, reps):
            seed = rng.index(chain.pi.weights) if options["seed"] is None else options["seed"]
            outcome = fill_run(chain.kernel, chain.pi, chain.rule, det, options["t"], seed, rng)
            if outcome.accepted:
                outputs.append(outcome.output)
    elif variant is Variant.ALTALG:
        for _, rng in replications(rng_seed, reps):
            outputs.append(altalg_run(
                chain.kernel, chain.pi, chain.rule, chain.pi, options["t_max"], rng, options["search"], options["t0"],
            ).output)
    elif variant is Variant.SM:
        m = upward_family(chain)
        for i, rng in replications(rng_seed, reps):
            outcome = sm_fill_run(chain.kernel, chain.pi, m, options["t"], rng, poset=chain.poset, validate=i == 0)
            if outcome.accepted:
                outputs.append(outcome.output)
    elif variant is Variant.CFTP:
        for _, rng in replications(rng_seed, reps):
            outputs.append(cftp_run(chain.rule, rng, t0=options["t0"] or 1).output)
    else:
        for _, rng in replications(rng_seed, reps):
            outputs.append(read_once_cftp_run(chain.rule, max(options["t"], 1), rng).output)
    return outputs


@router.command("validate")
def validate(
    spec: str = spec_flag(),
    variant: Variant = Flag(Variant.FILL, description="sampler to validate"),
    reps: int = Flag(10000, ge=1, description="number of replications"),
    rng_seed: int = rng_seed_flag(),
    t: int = Flag(2, ge=0, description="window or block length"),
    seed_state: Optional[str] = Flag(None, description="seed state of fill; drawn from pi when omitted", metavar="LABEL"),
    detector: Detector = Flag(Detector.FULL, description="detection process of fill"),
    search: Search = Flag(Search.EVERY, description="search schedule of altalg"),
    t_max: int = Flag(1024, ge=0, description="longest backward search of altalg"),
    t0: Optional[int] = Flag(None, ge=1, description="first cftp window or guarantee length"),
    out: Optional[str] = out_flag(),
):
    """Total variation and chi-square of sampled outputs against pi"""
    chain = load_chain(spec)
    options = {
        "t": t,
        "seed": None if seed_state is None else chain.state(seed_state),
        "detector": detector,
        "search": search,
        "t_max": t_max,
        "t0": t0,
    }
    outputs = draw_outputs(chain, variant, reps, rng_seed, options)
    law = EmpiricalLaw.from_samples(outputs, len(chain.space))
    chi = chi_square_gof(law, chain.pi)
    logger.info("validated %s: %d of %d replications produced an output", variant.value, law.n, reps)
    return JSONResult({
        "variant": variant,
        "reps": reps,
        "accepted": law.n,
        "acceptance_rate": law.n / reps,
        "tv": tv_distance(law, chain.pi),
        "chi_square": chi._asdict(),
        "empirical": {chain.space.label(x): float(f) for x, f in enumerate(law.frequencies)},
        "target": {chain.space.label(x): float(w) for x, w in enumerate(chain.pi.weights)},
        "rng_seed": rng_seed,
        "bit_generator": BIT_GENERATOR,
    })
