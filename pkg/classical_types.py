# classical_types.py

import math
from functools import lru_cache
from typing import Callable, Iterable, Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import entr, gammaln, xlogy

from errors import InvalidInputError, ResourceLimitError
from settings import get_settings

LN2 = math.log(2.0)
SUM_TOLERANCE = 1e-12

# "two-sided": |H(type) - h| <= eps.  "upper": H(type) <= h + eps.
TypicalityRule = Literal["two-sided", "upper"]


# --- Value types ---

class Distribution(BaseModel):
    """A probability vector over the alphabet {1, ..., d}."""
    model_config = ConfigDict(frozen=True)

    probs: Tuple[float, ...] = Field(min_length=1, description="p(1), ..., p(d); non-negative and summing to 1.")

    @field_validator("probs")
    @classmethod
    def _check_probabilities(cls, probs: Tuple[float, ...]) -> Tuple[float, ...]:
        if not all(math.isfinite(p) for p in probs):
            raise ValueError("probabilities must be finite")
        lowest = min(probs)
        if lowest < 0.0:
            raise ValueError(f"negative probability {lowest:.3g}")
        if max(probs) > 1.0 + SUM_TOLERANCE:
            raise ValueError(f"probability {max(probs):.15g} exceeds 1")
        total = math.fsum(probs)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {total:.15g} (|sum-1|={abs(total - 1.0):.3g})")
        return tuple(min(float(p), 1.0) for p in probs)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "Distribution":
        return cls(probs=tuple(float(v) for v in np.asarray(values, dtype=float).ravel()))

    @property
    def d(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)


class SymbolSequence(BaseModel):
    """A sequence x_1, ..., x_n of 1-based symbols."""
    model_config = ConfigDict(frozen=True)

    symbols: Tuple[int, ...] = Field(min_length=1, description="Symbols, each in 1..d.")

    @field_validator("symbols")
    @classmethod
    def _check_symbols(cls, symbols: Tuple[int, ...]) -> Tuple[int, ...]:
        if min(symbols) < 1:
            raise ValueError(f"symbol {min(symbols)} is below 1")
        return symbols

    def __len__(self) -> int:
        return len(self.symbols)


def multinomial(counts: Sequence[int]) -> int:
    """Exact n! / prod(counts!) as a product of binomial coefficients."""
    total, result = 0, 1
    for c in counts:
        total += int(c)
        result *= math.comb(total, int(c))
    return result


class TypeClass(BaseModel):
    """All sequences sharing one count vector, with their exact number."""
    model_config = ConfigDict(frozen=True)

    counts: Tuple[int, ...] = Field(min_length=1)
    multiplicity: int = Field(gt=0)

    @model_validator(mode="after")
    def _check_multiplicity(self) -> "TypeClass":
        if min(self.counts) < 0:
            raise ValueError("counts must be non-negative")
        if self.multiplicity != multinomial(self.counts):
            raise ValueError(f"multiplicity {self.multiplicity} is not the multinomial coefficient of {self.counts}")
        return self

    @property
    def n(self) -> int:
        return sum(self.counts)

    def distribution(self) -> Distribution:
        return Distribution(probs=tuple(c / self.n for c in self.counts))


class TypicalSetSpec(BaseModel):
    """Parameters (n, d, h, eps) of an entropy-typical set and its membership rule."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(gt=0, description="Sequence length.")
    d: int = Field(gt=0, description="Alphabet size.")
    h: float = Field(ge=0.0, description="Target entropy in bits per symbol.")
    epsilon: float = Field(gt=0.0, description="Entropy window half-width in bits.")
    rule: TypicalityRule = Field(default="two-sided", description="'two-sided' window or 'upper' ceiling.")

    @model_validator(mode="after")
    def _check_target(self) -> "TypicalSetSpec":
        ceiling = math.log2(self.d)
        if self.h > ceiling + SUM_TOLERANCE:
            raise ValueError(f"h={self.h:.12g} exceeds log2(d)={ceiling:.12g}")
        return self

    def admits(self, entropy):
        """Membership test on H(type); accepts a float or an array of entropies."""
        slack = get_settings().membership_slack
        if self.rule == "upper":
            return entropy <= self.h + self.epsilon + slack
        return np.abs(entropy - self.h) <= self.epsilon + slack


# --- Entropy and types ---

def entropy_bits(probs: np.ndarray) -> float:
    """Shannon entropy in bits of a non-negative vector summing to one (0 log 0 = 0)."""
    probs = np.asarray(probs, dtype=float)
    value = float(entr(probs).sum() / LN2)
    return min(max(value, 0.0), math.log2(probs.size))


def shannon_entropy(dist: Distribution) -> float:
    return entropy_bits(dist.as_array())


def _type_counts(seq: SymbolSequence, d: int) -> np.ndarray:
    if d < 1:
        raise InvalidInputError(f"alphabet size must be positive, got d={d}")
    symbols = np.asarray(seq.symbols, dtype=np.int64)
    if symbols.max() > d:
        raise InvalidInputError(f"symbol {int(symbols.max())} is outside the alphabet 1..{d}")
    return np.bincount(symbols - 1, minlength=d)


def empirical_type(seq: SymbolSequence, d: int) -> Distribution:
    counts = _type_counts(seq, d)
    n = len(seq)
    return Distribution(probs=tuple(int(c) / n for c in counts))


def is_strongly_typical(seq: SymbolSequence, p: Distribution, epsilon: float) -> bool:
    if epsilon <= 0:
        raise InvalidInputError(f"epsilon must be positive, got {epsilon}")
    deviation = np.abs(empirical_type(seq, p.d).as_array() - p.as_array())
    return bool(np.all(deviation <= epsilon / p.d + get_settings().membership_slack))


def is_entropy_typical(seq: SymbolSequence, spec: TypicalSetSpec) -> bool:
    if len(seq) != spec.n:
        raise InvalidInputError(f"sequence length {len(seq)} does not match n={spec.n}")
    return bool(spec.admits(shannon_entropy(empirical_type(seq, spec.d))))


# --- Type-class enumeration ---

# exp() of anything below this is exactly 0.0 in double precision.
UNDERFLOW_LOG = -746.0

CapSetting = Literal["enumeration_cap", "summation_cap"]


def type_class_count(n: int, d: int) -> int:
    return math.comb(n + d - 1, d - 1)


def _check_enumeration(n: int, d: int, cap: Optional[int], setting: CapSetting = "enumeration_cap") -> None:
    if n < 1 or d < 1:
        raise InvalidInputError(f"n and d must be positive, got n={n}, d={d}")
    cap = getattr(get_settings(), setting) if cap is None else cap
    count = type_class_count(n, d)
    if count > cap:
        raise ResourceLimitError(f"type classes for n={n}, d={d}", count, cap)


def _compositions(n: int, d: int) -> np.ndarray:
    """All count vectors of length d <= 3 summing to n, lexicographic, as one array."""
    if d == 1:
        return np.array([[n]], dtype=np.int64)
    if d == 2:
        lead = np.arange(n + 1, dtype=np.int64)
        return np.column_stack((lead, n - lead))
    sizes = np.arange(n + 1, 0, -1, dtype=np.int64)
    lead = np.repeat(np.arange(n + 1, dtype=np.int64), sizes)
    second = np.arange(lead.size, dtype=np.int64) - np.repeat(np.cumsum(sizes) - sizes, sizes)
    return np.column_stack((lead, second, n - lead - second))


def count_blocks(n: int, d: int) -> Iterator[np.ndarray]:
    """Lexicographic count vectors in blocks; inside a block the leading d - 3 counts are fixed."""
    if d <= 3:
        yield _compositions(n, d)
        return
    for lead in range(n + 1):
        for rest in count_blocks(n - lead, d - 1):
            yield np.column_stack((np.full(rest.shape[0], lead, dtype=np.int64), rest))


@lru_cache(maxsize=8)
def _count_tables(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """log k! and -(k/n) ln(k/n) for k = 0..n, indexed by count."""
    k = np.arange(n + 1, dtype=np.float64)
    log_factorial = gammaln(k + 1)
    entropy_terms = entr(k / n)
    log_factorial.flags.writeable = False
    entropy_terms.flags.writeable = False
    return log_factorial, entropy_terms


def block_entropy(counts: np.ndarray, n: int) -> np.ndarray:
    return _count_tables(n)[1][counts].sum(axis=1) / LN2


def block_log_multiplicity(counts: np.ndarray, n: int) -> np.ndarray:
    log_factorial = _count_tables(n)[0]
    return log_factorial[n] - log_factorial[counts].sum(axis=1)


def enumerate_type_classes(n: int, d: int, cap: Optional[int] = None) -> List[TypeClass]:
    _check_enumeration(n, d, cap)
    return [
        TypeClass(counts=tuple(row), multiplicity=multinomial(row))
        for block in count_blocks(n, d)
        for row in block.tolist()
    ]


def _admitted(spec: TypicalSetSpec, blocks: Iterable[np.ndarray]) -> Iterator[np.ndarray]:
    for counts in blocks:
        mask = spec.admits(block_entropy(counts, spec.n))
        if mask.any():
            yield counts[mask]


def admitted_counts(spec: TypicalSetSpec, cap: Optional[int] = None) -> Iterator[np.ndarray]:
    """Blocks of count vectors whose type entropy passes the spec's membership rule."""
    _check_enumeration(spec.n, spec.d, cap)
    return _admitted(spec, count_blocks(spec.n, spec.d))


def entropy_typical_cardinality(spec: TypicalSetSpec, cap: Optional[int] = None) -> int:
    return sum(multinomial(row) for block in admitted_counts(spec, cap) for row in block.tolist())


def log2_cardinality_bound(spec: TypicalSetSpec) -> float:
    return spec.d * math.log2(spec.n + 1) + spec.n * (spec.h + spec.epsilon)


def cardinality_bound(spec: TypicalSetSpec) -> float:
    exponent = log2_cardinality_bound(spec)
    return math.inf if exponent >= 1024 else 2.0 ** exponent


# --- Probability masses ---

def _block_log_mass(counts: np.ndarray, q: np.ndarray, n: int) -> float:
    """Log of the i.i.d. mass of every type sharing the block's fixed leading counts."""
    fixed = counts.shape[1] - 3
    if fixed <= 0:
        return 0.0
    log_factorial = _count_tables(n)[0]
    prefix = counts[0, :fixed]
    rest = n - int(prefix.sum())
    return float(
        log_factorial[n] - log_factorial[prefix].sum() - log_factorial[rest]
        + xlogy(prefix, q[:fixed]).sum() + xlogy(rest, q[fixed:].sum())
    )


def _visible_blocks(q: np.ndarray, n: int) -> Iterator[np.ndarray]:
    """count_blocks without the blocks whose every term underflows to 0.0."""
    return (counts for counts in count_blocks(n, q.size) if _block_log_mass(counts, q, n) >= UNDERFLOW_LOG)


def _mass(q: np.ndarray, blocks: Iterable[np.ndarray], n: int) -> float:
    """Sum of multiplicity * prod q_a^count_a over the given count blocks, in log domain."""
    log_factorial = _count_tables(n)[0]
    k = np.arange(n + 1, dtype=np.float64)
    # weights[c, a] = c ln q_a - ln c!
    weights = xlogy(k[:, None], q[None, :]) - log_factorial[:, None]
    columns = np.arange(q.size)
    totals = [
        float(np.exp(log_factorial[n] + weights[counts, columns].sum(axis=1)).sum())
        for counts in blocks
    ]
    return min(max(math.fsum(totals), 0.0), 1.0)


def typical_mass(q: np.ndarray, spec: TypicalSetSpec, cap: Optional[int] = None) -> float:
    """Probability of the typical set under the i.i.d. law q (any length-d probability vector)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (spec.d,):
        raise InvalidInputError(f"distribution has length {q.size}, spec expects d={spec.d}")
    _check_enumeration(spec.n, spec.d, cap, "summation_cap")
    return _mass(q, _admitted(spec, _visible_blocks(q, spec.n)), spec.n)


def set_probability(p: Distribution, spec: TypicalSetSpec, cap: Optional[int] = None) -> float:
    return typical_mass(p.as_array(), spec, cap)


def _strong_mask(p: np.ndarray, epsilon: float) -> Callable[[np.ndarray, int], np.ndarray]:
    radius = epsilon / p.size + get_settings().membership_slack
    return lambda counts, n: np.all(np.abs(counts / n - p) <= radius, axis=1)


def strong_set_probability(p: Distribution, n: int, epsilon: float, cap: Optional[int] = None) -> float:
    if epsilon <= 0:
        raise InvalidInputError(f"epsilon must be positive, got {epsilon}")
    _check_enumeration(n, p.d, cap, "summation_cap")
    q = p.as_array()
    inside = _strong_mask(q, epsilon)
    blocks = (counts[inside(counts, n)] for counts in _visible_blocks(q, n))
    return _mass(q, blocks, n)


def strong_inclusion_radius(
    p: Distribution,
    spec: TypicalSetSpec,
    grid: Optional[Sequence[float]] = None,
    cap: Optional[int] = None,
) -> Optional[float]:
    """Largest eps' on a decreasing grid with a non-empty A_eps'(p) contained in the typical set at length n."""
    if p.d != spec.d:
        raise InvalidInputError(f"distribution has length {p.d}, spec expects d={spec.d}")
    _check_enumeration(spec.n, spec.d, cap)
    if grid is None:
        grid = [spec.epsilon * 0.5 ** k for k in range(40)]
    q = p.as_array()
    for radius in sorted(grid, reverse=True):
        inside = _strong_mask(q, radius)
        found, contained = False, True
        for counts in count_blocks(spec.n, spec.d):
            members = counts[inside(counts, spec.n)]
            if members.size == 0:
                continue
            found = True
            if not np.all(spec.admits(block_entropy(members, spec.n))):
                contained = False
                break
        if found and contained:
            return float(radius)
    return None
