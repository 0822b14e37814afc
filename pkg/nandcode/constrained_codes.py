"""Constrained codes for flash memories.

Encoders, decoders and capacity computations for the modulation codes that
suppress E-PH patterns along a word line:

- the (1, 7) RLL code (basic table plus substitution table) and NRZI precoding,
- (d, k) capacities from the follower-set transfer matrix,
- the E-PH-free transition matrix of an M-bit cell and its capacity,
- enumeration and construction of fixed-length 2^M-ary block codes whose
  codewords contain no adjacent {E, PH} pair.

Bit strings are 1-D ``uint8`` numpy arrays; symbol words are rows of a 2-D
integer array. ``bits_from_str`` and ``bits_to_str`` convert the literal
``"0101"`` notation used in tests and reports.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from nandcode.exceptions import (
    CodebookCapacityError,
    CodebookFormatError,
    LengthError,
    PresetError,
    RangeError,
)
from nandcode.utils.cache import Cache

logger = logging.getLogger(__name__)

BitsLike = Union[str, Sequence[int], np.ndarray]

MAX_M_BITS = 4


def as_bits(bits: BitsLike) -> np.ndarray:
    """Coerce a string, sequence or array of 0/1 values into a uint8 array."""
    if isinstance(bits, str):
        return bits_from_str(bits)
    arr = np.asarray(bits)
    if arr.size == 0:
        return np.zeros(0, dtype=np.uint8)
    if arr.ndim != 1:
        raise RangeError(f"Bit strings must be one-dimensional, got shape {arr.shape}")
    if np.any((arr != 0) & (arr != 1)):
        raise RangeError("Bit strings may only contain 0 and 1")
    return arr.astype(np.uint8, copy=False)


def bits_from_str(text: str) -> np.ndarray:
    """Parse ``"0110"`` (whitespace ignored) into a bit array."""
    cleaned = "".join(text.split())
    if any(ch not in "01" for ch in cleaned):
        raise RangeError(f"Invalid bit string: {text!r}")
    return np.frombuffer(cleaned.encode("ascii"), dtype=np.uint8) - ord("0")


def bits_to_str(bits: BitsLike) -> str:
    """Render a bit array as a ``"0110"`` string."""
    return "".join("1" if b else "0" for b in as_bits(bits))


def _greedy_starts(flags: np.ndarray) -> np.ndarray:
    """Positions a left-to-right scanner would take as two-unit starts.

    A scanner that consumes two units whenever ``flags[i]`` holds and one unit
    otherwise starts a pair at every even offset inside each run of True flags.
    """
    idx = np.arange(flags.size)
    last_clear = np.maximum.accumulate(np.where(flags, -1, idx))
    offset = idx - last_clear - 1
    return flags & (offset % 2 == 0)


def _shifted(flags: np.ndarray) -> np.ndarray:
    out = np.zeros_like(flags)
    out[1:] = flags[:-1]
    return out


# (1, 7) RLL tables, indexed by the data pair value 2*b0 + b1.
RLL17_BASIC_TABLE: Dict[str, str] = {"00": "101", "01": "100", "10": "001", "11": "010"}
RLL17_SUBSTITUTION_TABLE: Dict[str, str] = {
    "0000": "101000",
    "0001": "100000",
    "1000": "001000",
    "1001": "010000",
}

_BASIC_WORDS = np.array([[1, 0, 1], [1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=np.uint8)
_SUBSTITUTION_FIRST = np.zeros((4, 4, 3), dtype=np.uint8)
for _data, _word in RLL17_SUBSTITUTION_TABLE.items():
    _SUBSTITUTION_FIRST[int(_data[:2], 2), int(_data[2:], 2)] = bits_from_str(_word[:3])

_GROUP_BITS = np.array([[(v >> 2) & 1, (v >> 1) & 1, v & 1] for v in range(8)], dtype=np.uint8)


def _nearest_lookup(candidates: np.ndarray, decoded: np.ndarray) -> np.ndarray:
    """Map every 3-bit group to the data of its Hamming-nearest candidate.

    Ties go to the earliest candidate in table order.
    """
    distances = (_GROUP_BITS[:, None, :] != candidates[None, :, :]).sum(axis=2)
    return decoded[np.argmin(distances, axis=1)]


_BASIC_INVERSE = _nearest_lookup(
    _BASIC_WORDS,
    np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.uint8),
)
_SUBSTITUTION_INVERSE = _nearest_lookup(
    np.array([bits_from_str(w[:3]) for w in RLL17_SUBSTITUTION_TABLE.values()]),
    np.array([bits_from_str(d) for d in RLL17_SUBSTITUTION_TABLE]),
)


def rll17_encode(data: BitsLike) -> np.ndarray:
    """Encode data with the rate 2/3 (1, 7) RLL code.

    Data is consumed two bits at a time. A pair in {00, 10} followed by a
    pair in {00, 01} would violate d = 1 at the junction, so both pairs are
    encoded together with the substitution table. The final pair always
    uses the basic table.

    Args:
        data: Even-length bit string.

    Returns:
        Coded bits, 3/2 times the input length.
    """
    bits = as_bits(data)
    if bits.size % 2:
        raise LengthError(f"RLL input length must be even, got {bits.size}", bits.size)
    if bits.size == 0:
        return np.zeros(0, dtype=np.uint8)

    pairs = bits[0::2].astype(np.intp) * 2 + bits[1::2]
    violation = np.zeros(pairs.size, dtype=bool)
    violation[:-1] = np.isin(pairs[:-1], (0, 2)) & np.isin(pairs[1:], (0, 1))
    start = _greedy_starts(violation)

    groups = _BASIC_WORDS[pairs]
    first = np.flatnonzero(start)
    groups[first] = _SUBSTITUTION_FIRST[pairs[first], pairs[first + 1]]
    groups[_shifted(start)] = 0
    return groups.ravel()


def rll17_decode(coded: BitsLike) -> np.ndarray:
    """Decode (1, 7) RLL coded bits.

    A group followed by ``000`` is the first half of a substitution word and
    is decoded together with it. Groups outside the code decode to their
    Hamming-nearest table entry, so corrupted streams propagate errors
    instead of aborting.

    Args:
        coded: Bit string whose length is a multiple of 3.

    Returns:
        Decoded data bits.
    """
    bits = as_bits(coded)
    if bits.size % 3:
        raise LengthError(f"RLL coded length must be a multiple of 3, got {bits.size}", bits.size)
    if bits.size == 0:
        return np.zeros(0, dtype=np.uint8)

    groups = bits.reshape(-1, 3).astype(np.intp)
    values = groups[:, 0] * 4 + groups[:, 1] * 2 + groups[:, 2]
    next_is_zero = np.zeros(values.size, dtype=bool)
    next_is_zero[:-1] = values[1:] == 0
    start = _greedy_starts(next_is_zero)

    out = _BASIC_INVERSE[values]
    first = np.flatnonzero(start)
    quads = _SUBSTITUTION_INVERSE[values[first]]
    out[first] = quads[:, :2]
    out[first + 1] = quads[:, 2:]
    return out.ravel()


def nrzi_encode(bits: BitsLike, init: int = 0) -> np.ndarray:
    """NRZI precoding: every 1 toggles the output level.

    ``output[i] = output[i-1] XOR bits[i]`` with ``output[-1] = init``.
    """
    if init not in (0, 1):
        raise RangeError(f"NRZI initial level must be 0 or 1, got {init}")
    b = as_bits(bits)
    return (np.bitwise_xor.accumulate(b) ^ init).astype(np.uint8)


def nrzi_decode(levels: BitsLike, init: int = 0) -> np.ndarray:
    """Invert NRZI precoding: ``output[i] = levels[i] XOR levels[i-1]``."""
    if init not in (0, 1):
        raise RangeError(f"NRZI initial level must be 0 or 1, got {init}")
    lv = as_bits(levels)
    if lv.size == 0:
        return lv.copy()
    previous = np.concatenate(([init], lv[:-1])).astype(np.uint8)
    return lv ^ previous


def level_runs(sequence: Sequence[int]) -> np.ndarray:
    """Lengths of the maximal runs of equal values in a sequence."""
    arr = np.asarray(sequence)
    if arr.size == 0:
        return np.zeros(0, dtype=np.intp)
    boundaries = np.flatnonzero(arr[1:] != arr[:-1]) + 1
    edges = np.concatenate(([0], boundaries, [arr.size]))
    return np.diff(edges)


def min_interior_run(sequence: Sequence[int]) -> Optional[int]:
    """Shortest run that touches neither end of the sequence, or None."""
    runs = level_runs(sequence)
    if runs.size < 3:
        return None
    return int(runs[1:-1].min())


@dataclass(frozen=True)
class RllConstraint:
    """A (d, k) run-length constraint; ``k=None`` means unbounded."""

    d: int
    k: Optional[int] = None

    def __post_init__(self) -> None:
        if self.d < 0:
            raise RangeError(f"d must be non-negative, got {self.d}")
        if self.k is not None and (self.k < 1 or self.d >= self.k):
            raise RangeError(f"Invalid constraint: d={self.d}, k={self.k}")

    def transfer_matrix(self) -> np.ndarray:
        """Follower-set transfer matrix; state = zeros since the last one."""
        if self.k is None:
            size = self.d + 1
            matrix = np.zeros((size, size))
            for s in range(size):
                matrix[s, min(s + 1, self.d)] += 1
                if s >= self.d:
                    matrix[s, 0] += 1
            return matrix

        size = self.k + 1
        matrix = np.zeros((size, size))
        for s in range(size):
            if s < self.k:
                matrix[s, s + 1] = 1
            if s >= self.d:
                matrix[s, 0] = 1
        return matrix

    def admits(self, bits: BitsLike) -> bool:
        """Whether a bit string satisfies the constraint.

        Zero runs between ones must be at least d long; every zero run,
        including leading and trailing ones, must be at most k long.
        """
        b = as_bits(bits)
        ones = np.flatnonzero(b)
        if ones.size == 0:
            return self.k is None or b.size <= self.k
        gaps = np.diff(ones) - 1
        if gaps.size and gaps.min() < self.d:
            return False
        if self.k is None:
            return True
        edge_runs = (int(ones[0]), int(b.size - 1 - ones[-1]))
        longest = max(int(gaps.max()) if gaps.size else 0, *edge_runs)
        return longest <= self.k


@dataclass(frozen=True)
class CapacityResult:
    """Dominant eigenvalue of a constraint graph and the normalized capacity."""

    lambda_max: float
    capacity: float
    m_bits: int = 1


@dataclass(frozen=True, eq=False)
class TransitionSpec:
    """Allowed level transitions of an M-bit cell along a word line."""

    m_bits: int
    matrix: np.ndarray = field(repr=False)


def rll_capacity(c: RllConstraint) -> CapacityResult:
    """Capacity of a (d, k) constraint in bits per coded bit.

    The transfer matrix can be periodic (e.g. d=1, k=1), so the spectral
    radius is taken from the full eigenvalue set.
    """
    eigenvalues = linalg.eigvals(c.transfer_matrix())
    lam = float(np.max(np.abs(eigenvalues)))
    return CapacityResult(lambda_max=lam, capacity=math.log2(lam), m_bits=1)


def build_transition_spec(m_bits: int) -> TransitionSpec:
    """All-ones 2^M transition matrix with the E<->PH entries removed."""
    if not 1 <= m_bits <= MAX_M_BITS:
        raise RangeError(f"m_bits must be between 1 and {MAX_M_BITS}, got {m_bits}")
    q = 1 << m_bits
    matrix = np.ones((q, q), dtype=np.int64)
    matrix[0, q - 1] = 0
    matrix[q - 1, 0] = 0
    return TransitionSpec(m_bits=m_bits, matrix=matrix)


def power_iteration(matrix: np.ndarray, tol: float = 1e-9, max_iter: int = 10_000) -> float:
    """Dominant eigenvalue of a non-negative symmetric matrix.

    Starts from the all-ones vector and stops when successive Rayleigh
    quotients agree to relative tolerance ``tol``.
    """
    a = np.asarray(matrix, dtype=float)
    x = np.ones(a.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        y = a @ x
        lam_new = float(x @ y) / float(x @ x)
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        x = y / norm
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
    logger.warning(f"Power iteration did not converge in {max_iter} steps")
    return lam


def mary_capacity(spec: TransitionSpec) -> CapacityResult:
    """Capacity of the E-PH-free constraint, normalized per stored bit."""
    lam = power_iteration(spec.matrix)
    return CapacityResult(lambda_max=lam, capacity=math.log2(lam) / spec.m_bits, m_bits=spec.m_bits)


def _check_m_bits(m_bits: int) -> int:
    if not 1 <= m_bits <= MAX_M_BITS:
        raise RangeError(f"m_bits must be between 1 and {MAX_M_BITS}, got {m_bits}")
    return (1 << m_bits) - 1


def eph_adjacent(a: np.ndarray, b: np.ndarray, ph: int) -> np.ndarray:
    """Elementwise test for an {E, PH} pair."""
    return ((a == 0) & (b == ph)) | ((a == ph) & (b == 0))


def _eph_free_mask(words: np.ndarray, ph: int) -> np.ndarray:
    if words.shape[1] < 2:
        return np.ones(words.shape[0], dtype=bool)
    return ~eph_adjacent(words[:, :-1], words[:, 1:], ph).any(axis=1)


def _word_array(q: int, length: int) -> np.ndarray:
    """All words of the given length over [0, q), in lexicographic order."""
    words = np.array(list(itertools.product(range(q), repeat=length)), dtype=np.int16)
    return words.reshape(q**length, length)


@dataclass(frozen=True)
class SymbolWord:
    """A word of cell levels for an M-bit cell."""

    m_bits: int
    symbols: Tuple[int, ...]

    def __post_init__(self) -> None:
        ph = _check_m_bits(self.m_bits)
        if any(s < 0 or s > ph for s in self.symbols):
            raise RangeError(f"Symbols must lie in [0, {ph}]: {self.symbols}")

    @property
    def ph(self) -> int:
        return (1 << self.m_bits) - 1

    @property
    def internally_eph_free(self) -> bool:
        return not any(
            {a, b} == {0, self.ph} for a, b in zip(self.symbols, self.symbols[1:])
        )

    def __str__(self) -> str:
        return " ".join(str(s) for s in self.symbols)


class BoundaryKind(str, Enum):
    """Ways of keeping codeword junctions free of E-PH pairs."""

    EXCLUDE_LEVEL_AT_ENDS = "exclude-level"
    EXCLUDE_EXTREMES_AT_BOTH_ENDS = "exclude-extremes-both-ends"


@dataclass(frozen=True)
class BoundaryPolicy:
    """Filter on the first and last symbol of codeword candidates.

    ``exclude_level_at_ends(level)`` drops words starting or ending with
    ``level`` (E or PH), which removes every junction E-PH pair.
    ``exclude_extremes_at_both_ends()`` drops words whose first and last
    symbols are both E or PH, which removes double-sided junction victims.
    """

    kind: BoundaryKind
    level: Optional[int] = None

    @classmethod
    def exclude_level_at_ends(cls, level: int) -> "BoundaryPolicy":
        return cls(BoundaryKind.EXCLUDE_LEVEL_AT_ENDS, level)

    @classmethod
    def exclude_extremes_at_both_ends(cls) -> "BoundaryPolicy":
        return cls(BoundaryKind.EXCLUDE_EXTREMES_AT_BOTH_ENDS)

    @classmethod
    def parse(cls, label: str) -> "BoundaryPolicy":
        """Inverse of ``label``."""
        if label == BoundaryKind.EXCLUDE_EXTREMES_AT_BOTH_ENDS.value:
            return cls.exclude_extremes_at_both_ends()
        prefix = BoundaryKind.EXCLUDE_LEVEL_AT_ENDS.value + "-"
        if label.startswith(prefix) and label[len(prefix):].isdigit():
            return cls.exclude_level_at_ends(int(label[len(prefix):]))
        raise CodebookFormatError(f"Unknown boundary policy: {label}")

    @property
    def label(self) -> str:
        if self.kind is BoundaryKind.EXCLUDE_LEVEL_AT_ENDS:
            return f"{self.kind.value}-{self.level}"
        return self.kind.value

    def validate(self, m_bits: int) -> None:
        ph = _check_m_bits(m_bits)
        if self.kind is BoundaryKind.EXCLUDE_LEVEL_AT_ENDS and self.level not in (0, ph):
            raise RangeError(f"Excluded level must be 0 or {ph}, got {self.level}")

    def permits(self, first: int, last: int, m_bits: int) -> bool:
        ph = (1 << m_bits) - 1
        if self.kind is BoundaryKind.EXCLUDE_LEVEL_AT_ENDS:
            return first != self.level and last != self.level
        return not (first in (0, ph) and last in (0, ph))

    def mask(self, words: np.ndarray, m_bits: int) -> np.ndarray:
        """Vectorized ``permits`` over the rows of a word array."""
        ph = (1 << m_bits) - 1
        first, last = words[:, 0], words[:, -1]
        if self.kind is BoundaryKind.EXCLUDE_LEVEL_AT_ENDS:
            return (first != self.level) & (last != self.level)
        extreme_first = (first == 0) | (first == ph)
        extreme_last = (last == 0) | (last == ph)
        return ~(extreme_first & extreme_last)


def enumerate_candidates(m_bits: int, word_len: int, first: int, last: int) -> List[SymbolWord]:
    """Internally E-PH-free words with fixed end symbols, lexicographically ordered."""
    ph = _check_m_bits(m_bits)
    if word_len < 2:
        raise RangeError(f"Word length must be at least 2, got {word_len}")
    if not (0 <= first <= ph and 0 <= last <= ph):
        raise RangeError(f"End symbols must lie in [0, {ph}]")

    interior = _word_array(ph + 1, word_len - 2)
    n = interior.shape[0]
    words = np.hstack([np.full((n, 1), first, dtype=np.int16), interior, np.full((n, 1), last, dtype=np.int16)])
    words = words[_eph_free_mask(words, ph)]
    return [SymbolWord(m_bits, tuple(int(s) for s in row)) for row in words]


def subset_counts(m_bits: int, word_len: int) -> Dict[Tuple[int, int], int]:
    """Candidate counts for every (first, last) pair, first-major order."""
    ph = _check_m_bits(m_bits)
    words = _word_array(ph + 1, word_len)
    words = words[_eph_free_mask(words, ph)]
    counts: Dict[Tuple[int, int], int] = {}
    for first in range(ph + 1):
        for last in range(ph + 1):
            counts[(first, last)] = int(np.count_nonzero((words[:, 0] == first) & (words[:, -1] == last)))
    return counts


def candidate_pool(m_bits: int, word_len: int, policy: BoundaryPolicy) -> np.ndarray:
    """All E-PH-free words of the given length permitted by the policy."""
    ph = _check_m_bits(m_bits)
    policy.validate(m_bits)
    words = _word_array(ph + 1, word_len)
    return words[_eph_free_mask(words, ph) & policy.mask(words, m_bits)]


@dataclass(frozen=True, eq=False)
class Codebook:
    """A fixed-length 2^M-ary block code.

    ``table[i]`` is the codeword for data index ``i``; data indices are
    ``data_bits`` wide and read big-endian.
    """

    m_bits: int
    word_len: int
    data_bits: int
    table: np.ndarray = field(repr=False)
    policy: BoundaryPolicy
    pool_size: Optional[int] = None
    inverse: Dict[Tuple[int, ...], int] = field(init=False, repr=False, compare=False)
    _keys: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ph = _check_m_bits(self.m_bits)
        self.policy.validate(self.m_bits)
        table = np.asarray(self.table, dtype=np.int16)
        if table.shape != (1 << self.data_bits, self.word_len):
            raise LengthError(
                f"Codebook table must have shape {(1 << self.data_bits, self.word_len)}, got {table.shape}"
            )
        if table.min() < 0 or table.max() > ph:
            raise RangeError(f"Codeword symbols must lie in [0, {ph}]")
        if not _eph_free_mask(table, ph).all():
            raise RangeError("Codewords must be internally E-PH-free")
        if not self.policy.mask(table, self.m_bits).all():
            raise RangeError(f"Codewords violate the boundary policy {self.policy.label}")

        keys = table.astype(np.int64) @ ((ph + 1) ** np.arange(self.word_len - 1, -1, -1, dtype=np.int64))
        if np.unique(keys).size != keys.size:
            raise RangeError("Codewords must be distinct")

        inverse = {tuple(int(s) for s in row): i for i, row in enumerate(table)}
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "inverse", inverse)
        object.__setattr__(self, "_keys", keys)

    @property
    def size(self) -> int:
        return 1 << self.data_bits

    @property
    def rate(self) -> float:
        """Stored data bits per physical bit (data_bits / (M * word_len))."""
        return self.data_bits / (self.m_bits * self.word_len)

    def header(self) -> str:
        return f"M={self.m_bits} L={self.word_len} B={self.data_bits} P={self.policy.label}"

    def lookup(self, words: np.ndarray) -> np.ndarray:
        """Data index of each row, falling back to the Hamming-nearest codeword."""
        q = 1 << self.m_bits
        keys = words.astype(np.int64) @ (q ** np.arange(self.word_len - 1, -1, -1, dtype=np.int64))
        order = np.argsort(self._keys, kind="stable")
        sorted_keys = self._keys[order]
        pos = np.clip(np.searchsorted(sorted_keys, keys), 0, sorted_keys.size - 1)
        found = sorted_keys[pos] == keys
        indices = np.where(found, order[pos], -1)

        missing = np.flatnonzero(~found)
        if missing.size:
            # argmin returns the first minimum, i.e. the lowest data index
            distances = cdist(words[missing], self.table, "hamming")
            indices[missing] = np.argmin(distances, axis=1)
        return indices


def build_codebook(m_bits: int, word_len: int, data_bits: int, policy: BoundaryPolicy) -> Codebook:
    """Take the first 2^data_bits words of the lexicographic candidate pool."""
    pool = candidate_pool(m_bits, word_len, policy)
    required = 1 << data_bits
    logger.debug(
        f"Candidate pool for M={m_bits} L={word_len} {policy.label}: {pool.shape[0]} words"
    )
    if pool.shape[0] < required:
        raise CodebookCapacityError(pool_size=int(pool.shape[0]), required=required)
    return Codebook(
        m_bits=m_bits,
        word_len=word_len,
        data_bits=data_bits,
        table=pool[:required],
        policy=policy,
        pool_size=int(pool.shape[0]),
    )


def codebook_encode(cb: Codebook, data: BitsLike) -> np.ndarray:
    """Encode data_bits-bit chunks (big-endian) into codewords.

    Returns:
        Array of shape (chunks, word_len); row i is the codeword of chunk i.
    """
    bits = as_bits(data)
    if bits.size % cb.data_bits:
        raise LengthError(
            f"Data length {bits.size} is not a multiple of {cb.data_bits}", bits.size
        )
    chunks = bits.reshape(-1, cb.data_bits).astype(np.int64)
    indices = chunks @ (1 << np.arange(cb.data_bits - 1, -1, -1, dtype=np.int64))
    return cb.table[indices]


def codebook_decode(cb: Codebook, symbols: Union[np.ndarray, Sequence[Sequence[int]]]) -> np.ndarray:
    """Decode codewords back to bits.

    A word outside the codebook decodes to the data index of the nearest
    codeword in symbol-wise Hamming distance, ties going to the lower index.
    """
    arr = np.asarray(symbols, dtype=np.int64)
    if arr.size == 0:
        return np.zeros(0, dtype=np.uint8)
    if arr.ndim == 1:
        if arr.size % cb.word_len:
            raise LengthError(f"Symbol stream length {arr.size} is not a multiple of {cb.word_len}", arr.size)
        arr = arr.reshape(-1, cb.word_len)
    if arr.ndim != 2 or arr.shape[1] != cb.word_len:
        raise LengthError(f"Codewords must have {cb.word_len} symbols, got shape {arr.shape}")

    indices = cb.lookup(arr)
    shifts = np.arange(cb.data_bits - 1, -1, -1)
    return ((indices[:, None] >> shifts) & 1).astype(np.uint8).ravel()


@dataclass(frozen=True)
class JunctionStats:
    """E-PH adjacency statistics of an encoded symbol stream."""

    words: int
    junctions: int
    junction_eph: int
    internal_eph: int
    double_sided: int

    @property
    def junction_rate(self) -> float:
        return self.junction_eph / self.junctions if self.junctions else 0.0


def junction_statistics(cb: Codebook, n_words: int, seed: int = 0) -> JunctionStats:
    """Encode uniformly random data and count E-PH adjacencies in the stream.

    ``double_sided`` counts E symbols with PH on both sides, i.e. n_x = 2
    victims along the word line.
    """
    rng = np.random.default_rng(seed)
    data = rng.integers(0, 2, size=n_words * cb.data_bits, dtype=np.uint8)
    stream = codebook_encode(cb, data).ravel()
    ph = (1 << cb.m_bits) - 1

    adjacent = eph_adjacent(stream[:-1], stream[1:], ph)
    at_junction = (np.arange(1, stream.size) % cb.word_len) == 0
    double = (stream[1:-1] == 0) & (stream[:-2] == ph) & (stream[2:] == ph)
    return JunctionStats(
        words=n_words,
        junctions=max(n_words - 1, 0),
        junction_eph=int(np.count_nonzero(adjacent & at_junction)),
        internal_eph=int(np.count_nonzero(adjacent & ~at_junction)),
        double_sided=int(np.count_nonzero(double)),
    )


def expected_junction_rate(cb: Codebook) -> float:
    """Probability of an E-PH pair at a junction under uniform data."""
    ph = (1 << cb.m_bits) - 1
    first = np.bincount(cb.table[:, 0], minlength=ph + 1) / cb.size
    last = np.bincount(cb.table[:, -1], minlength=ph + 1) / cb.size
    return float(last[0] * first[ph] + last[ph] * first[0])


def write_codebook(cb: Codebook, path: Union[str, Path]) -> None:
    """Write a codebook as a header line plus one codeword per line."""
    lines = [cb.header()]
    lines.extend(" ".join(str(int(s)) for s in row) for row in cb.table)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_codebook(path: Union[str, Path]) -> Codebook:
    """Read a codebook written by ``write_codebook`` and revalidate it."""
    lines = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise CodebookFormatError(f"Empty codebook file: {path}")

    fields: Dict[str, str] = {}
    for token in lines[0].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise CodebookFormatError(f"Malformed header token: {token}")
        fields[key] = value
    try:
        m_bits, word_len, data_bits = int(fields["M"]), int(fields["L"]), int(fields["B"])
        policy = BoundaryPolicy.parse(fields["P"])
        table = np.array([[int(s) for s in line.split()] for line in lines[1:]], dtype=np.int16)
    except (KeyError, ValueError) as e:
        raise CodebookFormatError(f"Malformed codebook file {path}: {e}") from e

    if table.ndim != 2:
        raise CodebookFormatError(f"Codewords in {path} have inconsistent lengths")
    return Codebook(m_bits=m_bits, word_len=word_len, data_bits=data_bits, table=table, policy=policy)


@dataclass(frozen=True)
class CodebookSpec:
    """Geometry of a named codebook."""

    m_bits: int
    word_len: int
    data_bits: int
    policy: BoundaryPolicy

    @property
    def rate(self) -> float:
        return self.data_bits / (self.m_bits * self.word_len)


CODEBOOK_PRESETS: Dict[str, CodebookSpec] = {
    "mlc2-q-cb1": CodebookSpec(2, 5, 8, BoundaryPolicy.exclude_level_at_ends(0)),
    "mlc2-q-cb1-ph": CodebookSpec(2, 5, 8, BoundaryPolicy.exclude_level_at_ends(3)),
    "mlc2-q-cb2": CodebookSpec(2, 5, 9, BoundaryPolicy.exclude_extremes_at_both_ends()),
    "mlc3-8ary-8_9": CodebookSpec(3, 3, 8, BoundaryPolicy.exclude_level_at_ends(0)),
    "mlc3-8ary-11_12": CodebookSpec(3, 4, 11, BoundaryPolicy.exclude_level_at_ends(0)),
    "mlc3-8ary-14_15": CodebookSpec(3, 5, 14, BoundaryPolicy.exclude_level_at_ends(0)),
}

_codebook_cache = Cache(max_size=len(CODEBOOK_PRESETS))


def preset_codebook(name: str) -> Codebook:
    """Build (once) and return a named codebook."""
    spec = CODEBOOK_PRESETS.get(name)
    if spec is None:
        raise PresetError("codebook", name, list(CODEBOOK_PRESETS))
    return _codebook_cache.get_or_build(
        f"codebook:{name}",
        lambda: build_codebook(spec.m_bits, spec.word_len, spec.data_bits, spec.policy),
    )
