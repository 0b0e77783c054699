"""
Chain spec files: the JSON document every command reads with `--spec`.

    {
      "states": ["0", "1", "2"],
      "kernel": [["1/2", "1/2", "0"], ...],
      "rule": {"labels": ["a", "b"], "mu": ["1/2", "1/2"], "table": [["0", "0", "1"], ["1", "2", "2"]]},
      "pi": ["1/3", "1/3", "1/3"],
      "poset": {"relations": [["0", "1"], ["1", "2"]], "bottom": "0", "top": "2"}
    }

`table[i][x]` is the image of state x under label `labels[i]`. A spec may give
`{"mtf": {"weights": [...]}}` instead of states, kernel and rule.
"""
import json
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Annotated, Any, List, Optional, Tuple

import pydantic
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PrivateAttr

from .chain import Dist, Kernel, StateSpace, is_stationary, solve_stationary
from .detection import MtfChain, mtf_chain
from .exceptions import NotStationary, ParseError, ValidationError
from .poset import Poset
from .rules import TransitionRule, independent_transitions_rule, kernel_from_rule


logger = logging.getLogger(__name__)

RATIONAL_PATTERN = re.compile(r"^-?\d+(/\d+)?$")


def parse_rational(value: Any) -> Fraction:
    """Integers and "p/q" strings only; decimals are rejected"""
    if isinstance(value, bool):
        raise ValueError("expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str) and RATIONAL_PATTERN.match(value.strip()):
        try:
            return Fraction(value.strip())
        except ZeroDivisionError:
            raise ValueError(f"zero denominator in {value!r}") from None
    raise ValueError(f"rationals are written 'p/q', got {value!r}")


Rational = Annotated[Any, BeforeValidator(parse_rational)]


def error_path(loc: Tuple[Any, ...]) -> str:
    return ".".join(str(part) for part in loc)


def from_pydantic_error(e: pydantic.ValidationError, names: Optional[dict] = None) -> ValidationError:
    """First pydantic error as a `ValidationError`; `names` renames the top-level field"""
    first = e.errors()[0]
    loc = tuple(first["loc"])
    if names and loc and loc[0] in names:
        loc = (names[loc[0]],) + loc[1:]
    return ValidationError(first["msg"], path=error_path(loc) or None)


class BaseSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RuleSpec(BaseSchema):
    labels: List[str] = Field(min_length=1)
    mu: List[Rational]
    table: List[List[str]]


class PosetSpec(BaseSchema):
    relations: List[Tuple[str, str]] = []
    bottom: Optional[str] = None
    top: Optional[str] = None


class MtfSpec(BaseSchema):
    weights: List[Rational] = Field(min_length=1)


@dataclass(frozen=True)
class Chain:
    """Everything a command needs, with states as indices"""
    space: StateSpace
    kernel: Kernel
    pi: Dist
    rule: TransitionRule
    poset: Optional[Poset] = None
    mtf: Optional[MtfChain] = None

    def state(self, label: str, path: str = "seed_state") -> int:
        try:
            return self.space.index(label)
        except ValidationError as e:
            raise ValidationError(e.message, path=path) from None


class ChainSpec(BaseSchema):
    states: List[str] = []
    pi: Optional[List[Rational]] = None
    kernel: Optional[List[List[Rational]]] = None
    rule: Optional[RuleSpec] = None
    poset: Optional[PosetSpec] = None
    mtf: Optional[MtfSpec] = None

    _chain: Optional[Chain] = PrivateAttr(default=None)

    @property
    def chain(self) -> Chain:
        if self._chain is None:
            self._chain = self.build()
        return self._chain

    def build(self) -> Chain:
        """Check the cross-field invariants and assemble the runtime objects"""
        if self.mtf is not None:
            return self._build_mtf()
        space = StateSpace(tuple(self.states))
        n = len(space)
        if self.kernel is None and self.rule is None:
            raise ValidationError("one of kernel or rule is required", path="kernel")

        def index(label: str, path: str) -> int:
            try:
                return space.index(label)
            except ValidationError as e:
                raise ValidationError(e.message, path=path) from None

        rule = None
        if self.rule is not None:
            labels, mu, table = self.rule.labels, self.rule.mu, self.rule.table
            if len(set(labels)) != len(labels):
                raise ValidationError("rule labels must be distinct", path="rule.labels")
            if len(mu) != len(labels):
                raise ValidationError(f"{len(mu)} weights for {len(labels)} labels", path="rule.mu")
            if len(table) != len(labels):
                raise ValidationError(f"{len(table)} table rows for {len(labels)} labels", path="rule.table")
            maps = {}
            for i, (u, row) in enumerate(zip(labels, table)):
                if len(row) != n:
                    raise ValidationError(f"row maps {len(row)} states, expected {n}", path=f"rule.table.{i}")
                maps[u] = tuple(index(y, f"rule.table.{i}.{x}") for x, y in enumerate(row))
            rule = TransitionRule(n, maps, dict(zip(labels, mu)))

        if self.kernel is not None:
            if len(self.kernel) != n:
                raise ValidationError(f"kernel has {len(self.kernel)} rows, expected {n}", path="kernel")
            kernel = Kernel.from_rows(self.kernel)
            if rule is not None and kernel_from_rule(rule) != kernel:
                raise ValidationError("rule does not realize the kernel", path="rule")
        else:
            kernel = kernel_from_rule(rule)
        if rule is None:
            rule = independent_transitions_rule(kernel)

        pi = self._stationary(kernel, n)
        poset = self._build_poset(space, index)
        logger.debug("chain spec: %d states, %d labels", n, rule.label_count)
        return Chain(space, kernel, pi, rule, poset)

    def _stationary(self, kernel: Kernel, n: int) -> Dist:
        if self.pi is None:
            return solve_stationary(kernel)
        if len(self.pi) != n:
            raise ValidationError(f"pi has {len(self.pi)} entries, expected {n}", path="pi")
        try:
            pi = Dist(tuple(self.pi))
        except ValidationError as e:
            raise ValidationError(e.message, path="pi") from None
        if not is_stationary(kernel, pi):
            raise NotStationary("pi is not stationary for the kernel", path="pi")
        return pi

    def _build_poset(self, space: StateSpace, index) -> Optional[Poset]:
        if self.poset is None:
            return None
        pairs = [
            (index(lo, f"poset.relations.{i}.0"), index(hi, f"poset.relations.{i}.1"))
            for i, (lo, hi) in enumerate(self.poset.relations)
        ]
        poset = Poset.from_relations(len(space), pairs)
        if self.poset.bottom is not None and index(self.poset.bottom, "poset.bottom") != poset.bottom:
            raise ValidationError(f"bottom of the order is {space.label(poset.bottom)!r}", path="poset.bottom")
        if self.poset.top is not None and index(self.poset.top, "poset.top") != poset.top:
            raise ValidationError(f"top of the order is {space.label(poset.top)!r}", path="poset.top")
        return poset

    def _build_mtf(self) -> Chain:
        for name in ("states", "kernel", "rule", "poset"):
            if getattr(self, name):
                raise ValidationError(f"{name} cannot be combined with mtf", path=name)
        mtf = mtf_chain(self.mtf.weights)
        return Chain(mtf.space, mtf.kernel, solve_stationary(mtf.kernel), mtf.rule, mtf=mtf)


def parse_chain_spec(text: str) -> ChainSpec:
    """Parse and fully validate a chain spec document"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg} at line {e.lineno} column {e.colno}") from None
    try:
        spec = ChainSpec.model_validate(data)
    except pydantic.ValidationError as e:
        raise from_pydantic_error(e) from None
    spec._chain = spec.build()
    return spec


def load_chain_spec(path: str) -> ChainSpec:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ValidationError(f"cannot read chain spec: {e.strerror}", path="spec") from None
    return parse_chain_spec(text)
