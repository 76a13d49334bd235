"""Finite filtered probability spaces, measurability-tagged processes and
conditional expectations.

Every computation in the package reduces to per-atom weighted sums over a
finite outcome set. Two numeric modes are supported: exact rationals
(``gmpy2.mpq`` in numpy object arrays) and binary floats.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from gmpy2 import mpq as _exact
except ImportError:  # pragma: no cover
    _exact = Fraction

ADAPTED = "adapted"
PREDICTABLE = "predictable"
RAW = "raw"
TAGS = (ADAPTED, PREDICTABLE, RAW)

FLOAT_SUM_TOL = 1e-12
FLOAT_MARTINGALE_TOL = 1e-10


class MeasurabilityError(ValueError):
    """A process violates the measurability its tag claims."""


class InvariantError(RuntimeError):
    """An internal identity that must hold exactly did not."""


def exact(x) -> object:
    """Convert ``x`` to an exact rational.

    Strings such as ``"1/3"`` and ``"0.25"`` are accepted; floats are
    converted through their decimal repr so ``0.1`` means one tenth.
    """
    if type(x) is _EXACT_TYPE:
        return x
    if isinstance(x, str):
        return _exact(Fraction(x.strip()))
    if isinstance(x, float):
        return _exact(Fraction(repr(x)))
    if isinstance(x, (bool, np.bool_)):
        return _exact(int(x))
    if isinstance(x, (np.integer,)):
        return _exact(int(x))
    if isinstance(x, (int, Rational)) or type(x).__name__ == "mpq":
        return _exact(x)
    raise TypeError(f"cannot convert {x!r} to an exact rational")


_EXACT_TYPE = type(_exact(0))


def is_exact_scalar(x) -> bool:
    return type(x).__name__ == "mpq" or isinstance(x, Fraction)


@dataclass(frozen=True)
class Partition:
    """A partition of ``range(n)`` stored as a label per outcome."""

    labels: np.ndarray
    atoms: tuple[np.ndarray, ...]
    keys: tuple = ()

    @classmethod
    def from_keys(cls, keys: Sequence) -> "Partition":
        index: dict = {}
        labels = np.empty(len(keys), dtype=np.int64)
        for i, key in enumerate(keys):
            labels[i] = index.setdefault(key, len(index))
        atoms = tuple(np.flatnonzero(labels == a) for a in range(len(index)))
        return cls(labels, atoms, tuple(index))

    def atom_of(self, outcome: int) -> int:
        return int(self.labels[outcome])

    def __len__(self) -> int:
        return len(self.atoms)

    def refines(self, coarser: "Partition") -> bool:
        return all(len(set(coarser.labels[a].tolist())) == 1 for a in self.atoms)


class FilteredSpace:
    """Finite outcome set with positive weights and a market filtration F.

    ``outcomes`` are opaque hashable labels (the scenario builder uses
    ``(market_path, death_state)`` pairs). ``partitions[t]`` is the atom
    structure of F at time ``t``.
    """

    def __init__(self, horizon: int, outcomes: Sequence, weights: Sequence,
                 partitions: Sequence[Partition], exact_mode: bool = True,
                 check: bool = True):
        self.horizon = int(horizon)
        self.outcomes = tuple(outcomes)
        self.exact = bool(exact_mode)
        self.weights = self.array(weights)
        self.F = Filtration(self, tuple(partitions), name="F")
        if check:
            problems = validate_space(self)
            if problems:
                raise ValueError("invalid filtered space: " + "; ".join(problems))

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def times(self) -> range:
        return range(self.horizon + 1)

    # -- scalar helpers -------------------------------------------------
    def scalar(self, x):
        return exact(x) if self.exact else float(x)

    def array(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=object)
        if self.exact:
            flat = [exact(v) for v in values.ravel()]
            return np.array(flat, dtype=object).reshape(values.shape)
        return np.array([float(v) for v in values.ravel()], dtype=float).reshape(values.shape)

    def zeros(self, shape) -> np.ndarray:
        if self.exact:
            out = np.empty(shape, dtype=object)
            out.fill(_exact(0))
            return out
        return np.zeros(shape, dtype=float)

    def ones(self, shape) -> np.ndarray:
        return self.zeros(shape) + (self.scalar(1))

    def indicator(self, mask) -> np.ndarray:
        mask = np.asarray(mask, dtype=bool)
        out = self.zeros(mask.shape)
        out[mask] = self.scalar(1)
        return out

    def tolerance(self, *arrays) -> float:
        if self.exact:
            return 0
        scale = max([1.0] + [float(np.max(np.abs(a))) for a in arrays if np.size(a)])
        return FLOAT_MARTINGALE_TOL * scale

    def close(self, a, b) -> bool:
        """Equality of arrays: exact in rational mode, toleranced for floats."""
        a = np.asarray(a)
        b = np.asarray(b)
        if self.exact:
            return bool(np.all(a == b))
        return bool(np.all(np.abs(a.astype(float) - b.astype(float)) <= self.tolerance(a, b)))

    def is_zero(self, a) -> bool:
        return self.close(a, self.zeros(np.shape(a)))

    def max_abs(self, a) -> float:
        a = np.asarray(a)
        if a.size == 0:
            return 0.0
        return float(max(abs(v) for v in a.ravel()))

    def expectation(self, x) -> object:
        return (self.weights * np.asarray(x)).sum()

    def __repr__(self) -> str:
        mode = "rational" if self.exact else "float"
        return f"FilteredSpace(horizon={self.horizon}, n={self.n}, mode={mode})"


class Filtration:
    """A refining sequence of partitions over a space's outcomes."""

    def __init__(self, space: FilteredSpace, partitions: Sequence[Partition], name: str = ""):
        self.space = space
        self.partitions = tuple(partitions)
        self.name = name
        self._atom_mass = tuple(
            tuple(space.weights[a].sum() for a in p.atoms) for p in self.partitions
        )
        # index of each outcome's atom representative
        self._first = tuple(
            np.array([a[0] for a in p.atoms], dtype=np.int64)[p.labels] for p in self.partitions
        )

    def __getitem__(self, t: int) -> Partition:
        return self.partitions[t]

    def __len__(self) -> int:
        return len(self.partitions)

    def cond_exp(self, x, t: int) -> np.ndarray:
        """E[x | atoms at t], returned as an outcome-indexed array."""
        space = self.space
        x = np.asarray(x)
        out = space.zeros(x.shape)
        wx = space.weights * x if x.ndim == 1 else space.weights[:, None] * x
        for a, mass in zip(self.partitions[t].atoms, self._atom_mass[t]):
            out[a] = wx[a].sum(axis=0) / mass
        return out

    def cond_exp_prev(self, x, s: int) -> np.ndarray:
        """E[x | atoms at s-1] (atoms at 0 when s == 0)."""
        return self.cond_exp(x, max(s - 1, 0))

    def measurable(self, x, t: int) -> bool:
        x = np.asarray(x)
        rep = x[self._first[t]]
        if np.all(x == rep):
            return True
        if self.space.exact:
            return False
        return bool(np.max(np.abs(x.astype(float) - rep.astype(float))) <= self.space.tolerance(x))

    def __repr__(self) -> str:
        return f"Filtration({self.name!r}, atoms={[len(p) for p in self.partitions]})"


class Process:
    """Time-indexed outcome-valued array with a measurability tag.

    ``values`` has shape ``(horizon + 1, n)``. Adapted processes are
    constant on every atom at ``t``; predictable ones on every atom at
    ``t - 1``. Raw processes carry no constraint.
    """

    __array_priority__ = 100

    def __init__(self, values, filtration: Filtration, tag: str = ADAPTED,
                 check: bool = True, name: str = ""):
        if tag not in TAGS:
            raise ValueError(f"unknown tag {tag!r}")
        space = filtration.space
        values = np.asarray(values)
        if values.shape != (space.horizon + 1, space.n):
            raise ValueError(
                f"process shape {values.shape} != {(space.horizon + 1, space.n)}")
        if space.exact and values.dtype != object:
            values = space.array(values)
        elif not space.exact and values.dtype == object:
            values = values.astype(float)
        self.values = values
        self.filtration = filtration
        self.tag = tag
        self.name = name
        if check and tag != RAW:
            bad = measurability_violation(values, filtration, tag)
            if bad is not None:
                raise MeasurabilityError(
                    f"{name or 'process'} is not {tag} w.r.t. {filtration.name} at t={bad}")

    @property
    def space(self) -> FilteredSpace:
        return self.filtration.space

    def __getitem__(self, t):
        return self.values[t]

    def __len__(self) -> int:
        return self.values.shape[0]

    def increments(self) -> np.ndarray:
        return delta(self.values)

    def retag(self, tag: str, filtration: Filtration | None = None, check: bool = True) -> "Process":
        return Process(self.values, filtration or self.filtration, tag, check=check, name=self.name)

    def _combine(self, other, op):
        if isinstance(other, Process):
            if other.space is not self.space:
                raise ValueError("processes live on different spaces")
            same = other.filtration is self.filtration and other.tag == self.tag
            return Process(op(self.values, other.values), self.filtration,
                           self.tag if same else RAW, check=False)
        return Process(op(self.values, self.space.scalar(other)), self.filtration,
                       self.tag, check=False)

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return Process(-self.values, self.filtration, self.tag, check=False)

    def equals(self, other) -> bool:
        other_values = other.values if isinstance(other, Process) else other
        return self.space.close(self.values, other_values)

    def __repr__(self) -> str:
        return f"Process({self.name or '?'}, tag={self.tag}, filtration={self.filtration.name})"


def measurability_violation(values, filtration: Filtration, tag: str) -> int | None:
    """First time at which ``values`` breaks ``tag``, or None."""
    for t in range(values.shape[0]):
        level = t if tag == ADAPTED else max(t - 1, 0)
        if not filtration.measurable(values[t], level):
            return t
    return None


def delta(values: np.ndarray) -> np.ndarray:
    """Increments along time with a zero increment at t=0."""
    out = values.copy()
    out[1:] = values[1:] - values[:-1]
    out[0] = values[0] - values[0]
    return out


def lag(values: np.ndarray) -> np.ndarray:
    """Left limit X_{t-}: X_{t-1} for t >= 1 and X_0 at t=0."""
    out = values.copy()
    out[1:] = values[:-1]
    return out


def cumulate(increments: np.ndarray) -> np.ndarray:
    """Running sum of increments; the t=0 entry is forced to zero."""
    inc = increments.copy()
    inc[0] = inc[0] - inc[0]
    return np.cumsum(inc, axis=0) if inc.dtype != object else _object_cumsum(inc)


def _object_cumsum(inc: np.ndarray) -> np.ndarray:
    out = inc.copy()
    for t in range(1, inc.shape[0]):
        out[t] = out[t - 1] + inc[t]
    return out


def safe_divide(num, den, mask, space: FilteredSpace) -> np.ndarray:
    """num/den where ``mask`` holds, zero elsewhere (no division attempted)."""
    num = np.asarray(num)
    den = np.asarray(den)
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), np.broadcast(num, den).shape)
    num = np.broadcast_to(num, mask.shape)
    den = np.broadcast_to(den, mask.shape)
    out = space.zeros(mask.shape)
    if space.exact:
        bad = mask & (den == 0)
    else:
        bad = mask & (den == 0.0)
    if np.any(bad):
        raise ZeroDivisionError("division by zero on a required atom")
    out[mask] = num[mask] / den[mask]
    return out


def ratio(num, den, space: FilteredSpace) -> np.ndarray:
    """Atomwise num/den with the 0/0 -> 0 convention (den == 0 -> 0)."""
    den = np.asarray(den)
    if space.exact:
        mask = den != 0
    else:
        mask = np.abs(den.astype(float)) > FLOAT_MARTINGALE_TOL * max(
            1.0, float(np.max(np.abs(den.astype(float)))) if np.size(den) else 1.0)
    return safe_divide(num, den, mask, space)


# -- operations --------------------------------------------------------

def conditional_expectation(x, t: int, filtration: Filtration) -> np.ndarray:
    """Adapted slice E[x | atoms at t] as an outcome-indexed array."""
    if isinstance(filtration, FilteredSpace):
        filtration = filtration.F
    return filtration.cond_exp(np.asarray(x), t)


def project(x: Process | np.ndarray, mode: str, filtration: Filtration) -> Process:
    """Optional or predictable projection of a raw process onto ``filtration``."""
    values = x.values if isinstance(x, Process) else np.asarray(x)
    space = filtration.space
    out = space.zeros(values.shape)
    if mode == "optional":
        for t in range(values.shape[0]):
            out[t] = filtration.cond_exp(values[t], t)
        return Process(out, filtration, ADAPTED, check=False)
    if mode == "predictable":
        for t in range(values.shape[0]):
            out[t] = filtration.cond_exp_prev(values[t], t)
        return Process(out, filtration, PREDICTABLE, check=False)
    raise ValueError(f"unknown projection mode {mode!r}")


def validate_space(space: FilteredSpace) -> list[str]:
    """List every violated FilteredSpace invariant; empty on success."""
    problems: list[str] = []
    w = space.weights
    for i, wi in enumerate(w):
        if not wi > 0:
            problems.append(f"non-positive weight {wi} at outcome {space.outcomes[i]!r}")
    total = w.sum()
    if space.exact:
        if total != 1:
            problems.append(f"weights sum to {total}, not 1")
    elif abs(float(total) - 1.0) > FLOAT_SUM_TOL:
        problems.append(f"weights sum to {float(total)!r}, off by more than {FLOAT_SUM_TOL}")
    parts = space.F.partitions
    if len(parts) != space.horizon + 1:
        problems.append(f"{len(parts)} partitions for horizon {space.horizon}")
    for t, p in enumerate(parts):
        if len(p.labels) != space.n:
            problems.append(f"partition at t={t} does not cover the outcome set")
            continue
        seen = np.zeros(space.n, dtype=int)
        for a in p.atoms:
            seen[a] += 1
        if np.any(seen != 1):
            problems.append(f"partition at t={t} is not a disjoint cover")
        if t >= 1 and len(parts[t - 1].labels) == space.n and not p.refines(parts[t - 1]):
            problems.append(f"partition at t={t} does not refine t={t - 1}")
    return problems


def space_from_atoms(horizon: int, weights: Sequence, atom_keys: Sequence[Sequence],
                     outcomes: Iterable | None = None, exact_mode: bool = True,
                     check: bool = True) -> FilteredSpace:
    """Build a space from per-time atom keys (``atom_keys[t][i]``)."""
    parts = [Partition.from_keys(list(keys)) for keys in atom_keys]
    outs = list(outcomes) if outcomes is not None else list(range(len(weights)))
    return FilteredSpace(horizon, outs, weights, parts, exact_mode, check=check)


@dataclass
class Diagnostic:
    """Outcome of a check: a flag plus the worst deviation and its location."""

    ok: bool
    worst: float = 0.0
    location: tuple | None = None
    detail: str = ""
    extra: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok
