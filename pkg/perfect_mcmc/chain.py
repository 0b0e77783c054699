"""
Finite state spaces, exact rational distributions and Markov kernels.

All probabilities are `fractions.Fraction`; states are referred to by their
index in the `StateSpace`, labels only matter at the input and output edges.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
import sympy
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import NotStationary, ReducibleChain, ValidationError, ZeroMassState


logger = logging.getLogger(__name__)

Rational = Union[Fraction, int, str]


@dataclass(frozen=True)
class StateSpace:
    """Ordered, nonempty collection of distinct state labels"""
    labels: Tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise ValidationError("state space must be nonempty", path="states")
        if len(set(labels)) != len(labels):
            raise ValidationError("state labels must be pairwise distinct", path="states")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(labels)})

    @classmethod
    def range(cls, n: int) -> "StateSpace":
        return cls(tuple(str(i) for i in range(n)))

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(range(len(self.labels)))

    def index(self, label: Union[str, int]) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise ValidationError(f"unknown state {label!r}") from None

    def label(self, x: int) -> str:
        return self.labels[x]


@dataclass(frozen=True)
class Dist:
    """Probability vector with exact rational weights, indexed by state"""
    weights: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        weights = tuple(Fraction(w) for w in self.weights)
        if not weights:
            raise ValidationError("distribution must have at least one weight")
        if any(w < 0 for w in weights):
            raise ValidationError(f"negative weight in {_fmt(weights)}")
        if sum(weights) != 1:
            raise ValidationError(f"weights {_fmt(weights)} sum to {sum(weights)}, not 1")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point(cls, n: int, x: int) -> "Dist":
        return cls(tuple(Fraction(int(y == x)) for y in range(n)))

    @classmethod
    def uniform(cls, n: int) -> "Dist":
        return cls(tuple(Fraction(1, n) for _ in range(n)))

    @classmethod
    def normalized(cls, masses: Sequence[Rational]) -> "Dist":
        masses = [Fraction(m) for m in masses]
        total = sum(masses)
        if total <= 0:
            raise ValidationError("cannot normalize a vector of total mass 0")
        return cls(tuple(m / total for m in masses))

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, x: int) -> Fraction:
        return self.weights[x]

    def __iter__(self):
        return iter(self.weights)

    def support(self) -> Tuple[int, ...]:
        return tuple(x for x, w in enumerate(self.weights) if w > 0)

    def mass(self, states: Iterable[int]) -> Fraction:
        return sum((self.weights[x] for x in states), Fraction(0))

    def as_dict(self, space: StateSpace) -> Dict[str, Fraction]:
        return {space.label(x): w for x, w in enumerate(self.weights)}

    def __repr__(self) -> str:
        return f"Dist({_fmt(self.weights)})"


@dataclass(frozen=True)
class Kernel:
    """Row-stochastic matrix of exact rationals; `rows[x]` is K(x, .)"""
    rows: Tuple[Dist, ...]

    def __post_init__(self) -> None:
        rows = tuple(row if isinstance(row, Dist) else Dist(tuple(row)) for row in self.rows)
        n = len(rows)
        if n == 0:
            raise ValidationError("kernel must have at least one row")
        for x, row in enumerate(rows):
            if len(row) != n:
                raise ValidationError(f"row {x} has {len(row)} entries, expected {n}", path=f"kernel.{x}")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Rational]]) -> "Kernel":
        checked = []
        for x, row in enumerate(rows):
            try:
                checked.append(Dist(tuple(Fraction(w) for w in row)))
            except ValidationError as e:
                raise ValidationError(e.message, path=f"kernel.{x}") from None
        return cls(tuple(checked))

    @classmethod
    def identity(cls, n: int) -> "Kernel":
        return cls(tuple(Dist.point(n, x) for x in range(n)))

    @property
    def size(self) -> int:
        return len(self.rows)

    def __getitem__(self, x: int) -> Dist:
        return self.rows[x]

    def prob(self, x: int, y: int) -> Fraction:
        return self.rows[x][y]

    def mass(self, x: int, states: Iterable[int]) -> Fraction:
        return self.rows[x].mass(states)

    def support(self, x: int) -> Tuple[int, ...]:
        return self.rows[x].support()

    def matrix(self) -> List[List[Fraction]]:
        return [list(row.weights) for row in self.rows]

    def left(self, dist: Dist) -> Dist:
        """The distribution `dist . K`"""
        n = self.size
        return Dist(tuple(sum((dist[x] * self.rows[x][y] for x in range(n)), Fraction(0)) for y in range(n)))

    def __matmul__(self, other: "Kernel") -> "Kernel":
        return _from_sympy(_to_sympy(self.matrix()) * _to_sympy(other.matrix()))

    def power(self, m: int) -> "Kernel":
        """Exact m-step kernel K^m"""
        if m < 0:
            raise ValueError("kernel power must be non-negative")
        return _power(self, m)

    def __repr__(self) -> str:
        return "Kernel(" + ", ".join(_fmt(row.weights) for row in self.rows) + ")"


def _fmt(weights: Iterable[Fraction]) -> str:
    return "(" + ", ".join(str(w) for w in weights) + ")"


def _to_sympy(matrix: Sequence[Sequence[Fraction]]) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(w.numerator, w.denominator) for w in row] for row in matrix])


def _to_fraction(value: sympy.Expr) -> Fraction:
    value = sympy.nsimplify(value)
    return Fraction(int(value.p), int(value.q))


def _from_sympy(matrix: sympy.Matrix) -> Kernel:
    return Kernel.from_rows([[_to_fraction(matrix[i, j]) for j in range(matrix.cols)] for i in range(matrix.rows)])


@lru_cache(maxsize=256)
def _power(kernel: Kernel, m: int) -> Kernel:
    if m == 0:
        return Kernel.identity(kernel.size)
    return _from_sympy(_to_sympy(kernel.matrix()) ** m)


def closed_classes(k: Kernel) -> List[Tuple[int, ...]]:
    """Closed communicating classes of the transition graph of `k`"""
    n = k.size
    adjacency = np.array([[1 if k.prob(x, y) > 0 else 0 for y in range(n)] for x in range(n)])
    count, labels = connected_components(csr_matrix(adjacency), directed=True, connection="strong")
    classes = []
    for c in range(count):
        members = tuple(int(x) for x in np.flatnonzero(labels == c))
        leaves = any(labels[y] != c for x in members for y in k.support(x))
        if not leaves:
            classes.append(members)
    return classes


def is_irreducible(k: Kernel) -> bool:
    classes = closed_classes(k)
    return len(classes) == 1 and len(classes[0]) == k.size


@lru_cache(maxsize=256)
def solve_stationary(k: Kernel) -> Dist:
    """Unique stationary distribution of `k`, exact.

    Transient states are allowed and receive mass 0; more than one closed
    communicating class raises `ReducibleChain`.
    """
    classes = closed_classes(k)
    if len(classes) != 1:
        raise ReducibleChain(f"chain has {len(classes)} closed communicating classes: {classes}")
    n = k.size
    system = _to_sympy(k.matrix()).T - sympy.eye(n)
    basis = system.nullspace()
    if len(basis) != 1:
        raise ReducibleChain(f"stationary equations have a {len(basis)}-dimensional solution space")
    vector = basis[0]
    total = sum(vector)
    pi = Dist(tuple(_to_fraction(v / total) for v in vector))
    logger.debug("stationary distribution %s", pi)
    return pi


def is_stationary(k: Kernel, pi: Dist) -> bool:
    return k.left(pi) == pi


@lru_cache(maxsize=256)
def reverse_kernel(k: Kernel, pi: Dist) -> Kernel:
    """Time reversal K~(y, x) = pi(x) K(x, y) / pi(y)"""
    if len(pi) != k.size:
        raise ValidationError(f"pi has {len(pi)} entries, kernel has {k.size} states")
    zero = [x for x in range(k.size) if pi[x] == 0]
    if zero:
        raise ZeroMassState(f"pi puts no mass on states {zero}")
    if not is_stationary(k, pi):
        raise NotStationary(f"{pi} is not stationary for the kernel")
    n = k.size
    return Kernel(tuple(
        Dist(tuple(pi[x] * k.prob(x, y) / pi[y] for x in range(n)))
        for y in range(n)
    ))


def detailed_balance(k: Kernel, k_rev: Kernel, pi: Dist) -> bool:
    """pi(x) K(x, y) == pi(y) K~(y, x) for every pair"""
    n = k.size
    return all(pi[x] * k.prob(x, y) == pi[y] * k_rev.prob(y, x) for x in range(n) for y in range(n))
