"""Write and read chains of the storage schemes.

A word line (row) of cells stores ``M`` logical pages. The write chain of
every scheme is

    user bits -> ECC -> (block interleaver) -> modulation -> levels

where the modulation step is

- ``CONVENTIONAL``: none; the M page bits of each cell are Gray-mapped,
- ``SLC_RLL_NRZI``: (1, 7) RLL then NRZI; NRZI bit 1 is E, 0 is PH,
- ``MLC_BINARY_RLL``: only page M is RLL-coded, then Gray mapping,
- ``MLC_MARY_CODEBOOK``: the concatenated page streams are block-encoded
  with an E-PH-free 2^M-ary codebook whose symbols are the levels.

The read chain inverts every step. ECC decoding is genie-aided, so
``encode_write`` returns a ``WriteRecord`` with the transmitted codewords.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from nandcode.channel import CouplingParams, StateDistribution
from nandcode.constrained_codes import (
    MAX_M_BITS,
    BitsLike,
    Codebook,
    RllConstraint,
    as_bits,
    build_transition_spec,
    codebook_decode,
    codebook_encode,
    mary_capacity,
    nrzi_decode,
    nrzi_encode,
    preset_codebook,
    rll17_decode,
    rll17_encode,
    rll_capacity,
)
from nandcode.ecc import (
    CODEWORDS_PER_PAGE,
    NO_ECC,
    PageLayout,
    deinterleave,
    ecc_decode_page,
    ecc_encode_page,
    ecc_preset,
    interleave,
)
from nandcode.epattern import StateGrid
from nandcode.exceptions import GeometryError, PresetError, RangeError
from nandcode.utils.cache import Cache

logger = logging.getLogger(__name__)

RLL_RATE = 2 / 3

_capacity_cache = Cache(max_size=16)


class Scheme(str, Enum):
    CONVENTIONAL = "conventional"
    SLC_RLL_NRZI = "slc-rll-nrzi"
    MLC_BINARY_RLL = "mlc-binary-rll"
    MLC_MARY_CODEBOOK = "mlc-mary-codebook"


@dataclass(frozen=True, eq=False)
class GrayMap:
    """Per-level page labels; ``table[level]`` lists the page bits, page 1 first."""

    m_bits: int
    table: np.ndarray = field(repr=False)
    _inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        q = 1 << self.m_bits
        table = np.asarray(self.table, dtype=np.uint8)
        if table.shape != (q, self.m_bits):
            raise RangeError(f"Gray table must have shape {(q, self.m_bits)}, got {table.shape}")
        codes = table.astype(np.intp) @ (1 << np.arange(self.m_bits - 1, -1, -1))
        if np.unique(codes).size != q:
            raise RangeError("Gray labels must be distinct")
        if np.any(np.count_nonzero(table[1:] != table[:-1], axis=1) != 1):
            raise RangeError("Adjacent levels must differ in exactly one page bit")
        inverse = np.empty(q, dtype=np.int16)
        inverse[codes] = np.arange(q)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "_inverse", inverse)

    def label(self, level: int) -> Tuple[int, ...]:
        return tuple(int(b) for b in self.table[level])

    def to_bits(self, levels: np.ndarray) -> np.ndarray:
        """Page bits of each cell; the result has a trailing axis of length M."""
        return self.table[np.asarray(levels, dtype=np.intp)]

    def to_levels(self, bits: np.ndarray) -> np.ndarray:
        """Level of each tuple of page bits along the last axis."""
        arr = np.asarray(bits, dtype=np.intp)
        if arr.shape[-1] != self.m_bits:
            raise GeometryError(f"Expected {self.m_bits} page bits per cell, got {arr.shape[-1]}")
        return self._inverse[arr @ (1 << np.arange(self.m_bits - 1, -1, -1))]


def gray_map(m_bits: int) -> GrayMap:
    """Reflected Gray labels, complemented so that level 0 is all ones.

    For M >= 2 both E and PH then carry a 1 on the last page; for M = 1 the
    map sends data 1 to E and 0 to PH.
    """
    if not 1 <= m_bits <= MAX_M_BITS:
        raise RangeError(f"m_bits must be between 1 and {MAX_M_BITS}, got {m_bits}")
    q = 1 << m_bits
    codes = np.array([(i ^ (i >> 1)) ^ (q - 1) for i in range(q)])
    table = (codes[:, None] >> np.arange(m_bits - 1, -1, -1)) & 1
    return GrayMap(m_bits=m_bits, table=table)


@dataclass(frozen=True, eq=False)
class SchemeConfig:
    """A storage scheme with its ECC layout, channel and grid geometry.

    ``ecc=None`` is pass-through mode: user bits go straight to the
    modulation step and each page counts as one codeword that succeeds only
    when read back exactly.
    """

    scheme: Scheme
    m_bits: int
    ecc: Optional[PageLayout] = None
    codebook: Optional[Codebook] = None
    interleave_enabled: bool = False
    coupling: CouplingParams = CouplingParams()
    dist: Optional[StateDistribution] = None
    rows: int = 1
    cols: Optional[int] = None
    name: str = ""

    def __post_init__(self) -> None:
        if not 1 <= self.m_bits <= MAX_M_BITS:
            raise RangeError(f"m_bits must be between 1 and {MAX_M_BITS}, got {self.m_bits}")
        if self.scheme is Scheme.SLC_RLL_NRZI and self.m_bits != 1:
            raise GeometryError("The SLC RLL/NRZI scheme requires m_bits = 1")
        if self.scheme is Scheme.MLC_BINARY_RLL and self.m_bits < 2:
            raise GeometryError("The binary RLL MLC scheme requires m_bits >= 2")
        if self.scheme is Scheme.MLC_MARY_CODEBOOK:
            if self.codebook is None:
                raise GeometryError("The m-ary scheme requires a codebook")
            if self.codebook.m_bits != self.m_bits:
                raise GeometryError(
                    f"Codebook is {self.codebook.m_bits}-bit, scheme is {self.m_bits}-bit"
                )
        if self.interleave_enabled and self.ecc is None:
            raise GeometryError("Interleaving needs ECC codewords; pass-through mode has none")
        if self.rows < 1:
            raise RangeError(f"A grid needs at least one row, got {self.rows}")
        if self.dist is None:
            object.__setattr__(self, "dist", StateDistribution.evenly_spaced(self.m_bits))
        elif self.dist.levels != 1 << self.m_bits:
            raise GeometryError(f"Distribution has {self.dist.levels} levels, scheme needs {1 << self.m_bits}")

    @property
    def pages_per_row(self) -> int:
        return self.m_bits

    @property
    def gray(self) -> GrayMap:
        return gray_map(self.m_bits)


@dataclass(frozen=True)
class SchemePreset:
    scheme: Scheme
    m_bits: int
    codebook: Optional[str] = None


SCHEME_PRESETS: Dict[str, SchemePreset] = {
    "slc-conv": SchemePreset(Scheme.CONVENTIONAL, 1),
    "slc-rll": SchemePreset(Scheme.SLC_RLL_NRZI, 1),
    "mlc2-conv": SchemePreset(Scheme.CONVENTIONAL, 2),
    "mlc2-binrll": SchemePreset(Scheme.MLC_BINARY_RLL, 2),
    "mlc2-q-cb1": SchemePreset(Scheme.MLC_MARY_CODEBOOK, 2, "mlc2-q-cb1"),
    "mlc2-q-cb1-ph": SchemePreset(Scheme.MLC_MARY_CODEBOOK, 2, "mlc2-q-cb1-ph"),
    "mlc2-q-cb2": SchemePreset(Scheme.MLC_MARY_CODEBOOK, 2, "mlc2-q-cb2"),
    "mlc3-conv": SchemePreset(Scheme.CONVENTIONAL, 3),
    "mlc3-binrll": SchemePreset(Scheme.MLC_BINARY_RLL, 3),
    "mlc3-8ary-8_9": SchemePreset(Scheme.MLC_MARY_CODEBOOK, 3, "mlc3-8ary-8_9"),
    "mlc3-8ary-11_12": SchemePreset(Scheme.MLC_MARY_CODEBOOK, 3, "mlc3-8ary-11_12"),
    "mlc3-8ary-14_15": SchemePreset(Scheme.MLC_MARY_CODEBOOK, 3, "mlc3-8ary-14_15"),
    "mlc4-conv": SchemePreset(Scheme.CONVENTIONAL, 4),
    "mlc4-binrll": SchemePreset(Scheme.MLC_BINARY_RLL, 4),
}


def conventional_preset(m_bits: int) -> str:
    """Name of the conventional preset with the given bits per cell."""
    return "slc-conv" if m_bits == 1 else f"mlc{m_bits}-conv"


def scheme_config(
    preset: str,
    ecc: str = NO_ECC,
    interleave: bool = False,
    coupling: Optional[CouplingParams] = None,
    dist: Optional[StateDistribution] = None,
    rows: int = 1,
    cols: Optional[int] = None,
    codewords_per_page: int = CODEWORDS_PER_PAGE,
) -> SchemeConfig:
    """Build a SchemeConfig from scheme and ECC preset names."""
    spec = SCHEME_PRESETS.get(preset)
    if spec is None:
        raise PresetError("scheme", preset, list(SCHEME_PRESETS))
    params = ecc_preset(ecc)
    return SchemeConfig(
        scheme=spec.scheme,
        m_bits=spec.m_bits,
        ecc=PageLayout(params, codewords_per_page) if params is not None else None,
        codebook=preset_codebook(spec.codebook) if spec.codebook else None,
        interleave_enabled=interleave,
        coupling=coupling if coupling is not None else CouplingParams(),
        dist=dist,
        rows=rows,
        cols=cols,
        name=preset,
    )


# Geometry


def _rll_length(n_bits: int) -> int:
    """Coded length of an RLL page after zero-padding the input to even length."""
    return (n_bits + n_bits % 2) * 3 // 2


def _page_layouts(cfg: SchemeConfig) -> List[PageLayout]:
    if cfg.ecc is None:
        raise GeometryError("Pass-through pages have no fixed size; use pass_through_pages")
    base = cfg.ecc
    if cfg.scheme is Scheme.SLC_RLL_NRZI:
        return [base]
    if cfg.scheme is Scheme.MLC_BINARY_RLL:
        upper_codewords = _rll_length(base.coded_bits) // base.params.n
        upper = PageLayout(base.params, upper_codewords)
        return [upper] * (cfg.m_bits - 1) + [base]
    return [base] * cfg.m_bits


def page_info_bits(cfg: SchemeConfig) -> List[int]:
    """User bits carried by each page of a row in ECC mode, page 1 first."""
    return [layout.info_bits for layout in _page_layouts(cfg)]


def row_length(cfg: SchemeConfig) -> int:
    """Cells per word line in ECC mode."""
    layouts = _page_layouts(cfg)
    coded = layouts[-1].coded_bits
    if cfg.scheme is Scheme.CONVENTIONAL:
        return coded
    if cfg.scheme in (Scheme.SLC_RLL_NRZI, Scheme.MLC_BINARY_RLL):
        return _rll_length(coded)
    assert cfg.codebook is not None
    words = math.ceil(cfg.m_bits * coded / cfg.codebook.data_bits)
    return words * cfg.codebook.word_len


def pass_through_pages(cfg: SchemeConfig, cols: int) -> List[int]:
    """User bits per page of a pass-through row of at most ``cols`` cells.

    The row is rounded down to the modulation's granularity (RLL groups of
    three cells, whole codewords).
    """
    if cols < 0:
        raise RangeError(f"Row length must be non-negative, got {cols}")
    m = cfg.m_bits
    if cfg.scheme is Scheme.CONVENTIONAL:
        sizes, used = [cols] * m, cols
    elif cfg.scheme in (Scheme.SLC_RLL_NRZI, Scheme.MLC_BINARY_RLL):
        groups = cols // 3
        sizes, used = [3 * groups] * (m - 1) + [2 * groups], 3 * groups
    else:
        assert cfg.codebook is not None
        words = cols // cfg.codebook.word_len
        total = words * cfg.codebook.data_bits
        sizes = [total // m + (1 if p < total % m else 0) for p in range(m)]
        used = words * cfg.codebook.word_len
    if used != cols:
        logger.warning(f"Row of {cols} cells rounded down to {used} for {cfg.scheme.value}")
    return sizes


def random_user_data(cfg: SchemeConfig, rng: np.random.Generator) -> List[np.ndarray]:
    """Uniformly random pages for ``cfg.rows`` rows, row-major."""
    if cfg.ecc is not None:
        sizes = page_info_bits(cfg)
    elif cfg.cols is not None:
        sizes = pass_through_pages(cfg, cfg.cols)
    else:
        raise GeometryError("Pass-through configurations need cols to size random data")
    return [rng.integers(0, 2, size=n, dtype=np.uint8) for _ in range(cfg.rows) for n in sizes]


# Write chain


@dataclass
class PageRecord:
    """One logical page as written.

    ``coded`` is the page stream handed to the modulation step and ``pad``
    the number of zeros appended after it to fit the modulation framing.
    """

    info: np.ndarray
    coded: np.ndarray
    layout: Optional[PageLayout] = None
    codewords: Optional[np.ndarray] = None
    pad: int = 0


@dataclass
class RowRecord:
    pages: List[PageRecord]
    levels: np.ndarray


@dataclass
class WriteRecord:
    """Everything the genie-aided reader needs about a written grid."""

    scheme: Scheme
    rows: List[RowRecord] = field(default_factory=list)

    @property
    def pages(self) -> List[PageRecord]:
        return [page for row in self.rows for page in row.pages]


def _code_page(info: np.ndarray, layout: Optional[PageLayout], cfg: SchemeConfig, seed: int) -> PageRecord:
    if layout is None:
        return PageRecord(info=info, coded=info)
    codewords = ecc_encode_page(info, layout, seed)
    coded = interleave(codewords) if cfg.interleave_enabled else codewords.ravel()
    return PageRecord(info=info, coded=coded, layout=layout, codewords=codewords)


def _padded(page: PageRecord, length: int) -> np.ndarray:
    if page.coded.size > length:
        raise GeometryError(f"Page of {page.coded.size} bits does not fit a row of {length} cells")
    page.pad = length - page.coded.size
    return np.concatenate((page.coded, np.zeros(page.pad, dtype=np.uint8)))


def _write_row(pages: List[PageRecord], cfg: SchemeConfig) -> np.ndarray:
    gray = cfg.gray
    if cfg.scheme is Scheme.CONVENTIONAL:
        length = max(p.coded.size for p in pages)
        bits = np.stack([_padded(p, length) for p in pages], axis=1)
        return gray.to_levels(bits)

    if cfg.scheme is Scheme.SLC_RLL_NRZI:
        page = pages[0]
        nrzi = nrzi_encode(rll17_encode(_padded(page, page.coded.size + page.coded.size % 2)), init=0)
        return gray.to_levels(nrzi[:, None])

    if cfg.scheme is Scheme.MLC_BINARY_RLL:
        last = pages[-1]
        rll = rll17_encode(_padded(last, last.coded.size + last.coded.size % 2))
        upper = [_padded(p, rll.size) for p in pages[:-1]]
        return gray.to_levels(np.stack(upper + [rll], axis=1))

    cb = cfg.codebook
    assert cb is not None
    # the chunking pad goes after the last page
    pad = -sum(p.coded.size for p in pages) % cb.data_bits
    last = _padded(pages[-1], pages[-1].coded.size + pad)
    stream = np.concatenate([p.coded for p in pages[:-1]] + [last])
    return codebook_encode(cb, stream).ravel()


def encode_write(
    user_data: Sequence[BitsLike], cfg: SchemeConfig, seed: int = 0
) -> Tuple[StateGrid, WriteRecord]:
    """Program user pages into a grid, ``M`` consecutive pages per row.

    Args:
        user_data: Pages in row-major order, page 1 of a row first.
        cfg: Scheme configuration.
        seed: Seed of the ECC parity model.

    Returns:
        The programmed levels and the record of every intermediate stream.
    """
    pages_in = [as_bits(page) for page in user_data]
    ppr = cfg.pages_per_row
    if len(pages_in) % ppr:
        raise GeometryError(f"{len(pages_in)} pages do not fill rows of {ppr} pages")
    layouts: List[Optional[PageLayout]] = list(_page_layouts(cfg)) if cfg.ecc is not None else [None] * ppr

    record = WriteRecord(scheme=cfg.scheme)
    for start in range(0, len(pages_in), ppr):
        pages = [_code_page(info, layout, cfg, seed) for info, layout in zip(pages_in[start : start + ppr], layouts)]
        levels = _write_row(pages, cfg).astype(np.int16)
        record.rows.append(RowRecord(pages=pages, levels=levels))

    lengths = {row.levels.size for row in record.rows}
    if len(lengths) > 1:
        raise GeometryError(f"Rows encode to different lengths: {sorted(lengths)}")
    if not record.rows:
        return StateGrid(cfg.m_bits, np.zeros((0, 0), dtype=np.int16)), record
    grid = StateGrid(cfg.m_bits, np.stack([row.levels for row in record.rows]))
    logger.debug(f"Wrote {len(record.rows)} rows of {grid.shape[1]} cells with {cfg.scheme.value}")
    return grid, record


# Read chain


@dataclass
class ReadResult:
    """Decoded pages with per-codeword success flags and genie error counts."""

    user_data: List[np.ndarray]
    success: List[np.ndarray]
    errors: List[np.ndarray]

    @property
    def codewords(self) -> int:
        return sum(s.size for s in self.success)

    @property
    def failures(self) -> int:
        return sum(int(np.count_nonzero(~s)) for s in self.success)

    @property
    def all_success(self) -> bool:
        return self.failures == 0


def _segments(stream: np.ndarray, pages: List[PageRecord]) -> List[np.ndarray]:
    out = []
    offset = 0
    for page in pages:
        out.append(stream[offset : offset + page.coded.size])
        offset += page.coded.size + page.pad
    return out


def _read_row(levels: np.ndarray, row: RowRecord, cfg: SchemeConfig) -> List[np.ndarray]:
    """Recover each page's coded stream from a row of levels."""
    pages = row.pages
    if cfg.scheme is Scheme.MLC_MARY_CODEBOOK:
        assert cfg.codebook is not None
        return _segments(codebook_decode(cfg.codebook, levels), pages)

    bits = cfg.gray.to_bits(levels)
    if cfg.scheme is Scheme.CONVENTIONAL:
        return [bits[: p.coded.size, i] for i, p in enumerate(pages)]
    if cfg.scheme is Scheme.SLC_RLL_NRZI:
        return _segments(rll17_decode(nrzi_decode(bits[:, 0], init=0)), pages)
    streams = [bits[: p.coded.size, i] for i, p in enumerate(pages[:-1])]
    return streams + _segments(rll17_decode(bits[:, -1]), pages[-1:])


def _finish_page(coded: np.ndarray, page: PageRecord, cfg: SchemeConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if page.layout is None:
        errors = int(np.count_nonzero(coded != page.info))
        return coded.astype(np.uint8), np.array([errors == 0]), np.array([errors])
    assert page.codewords is not None
    n_codewords = page.layout.codewords_per_page
    if cfg.interleave_enabled:
        received = deinterleave(coded, n_codewords)
    else:
        received = coded.reshape(n_codewords, page.layout.params.n)
    return ecc_decode_page(received, page.codewords, page.layout.params)


def decode_read(levels: StateGrid, record: WriteRecord, cfg: SchemeConfig) -> ReadResult:
    """Invert ``encode_write`` on read-back levels."""
    if record.scheme is not cfg.scheme:
        raise GeometryError(f"Record was written with {record.scheme.value}, reading with {cfg.scheme.value}")
    n_rows = len(record.rows)
    expected_cols = record.rows[0].levels.size if record.rows else 0
    if n_rows and levels.shape != (n_rows, expected_cols):
        raise GeometryError(f"Read grid {levels.shape} does not match written grid {(n_rows, expected_cols)}")

    result = ReadResult(user_data=[], success=[], errors=[])
    for row_levels, row in zip(levels.levels, record.rows):
        for coded, page in zip(_read_row(row_levels, row, cfg), row.pages):
            info, success, errors = _finish_page(coded, page, cfg)
            result.user_data.append(info)
            result.success.append(success)
            result.errors.append(errors)
    return result


# Rates


class RateReport(NamedTuple):
    overall_rate: float
    capacity: float


def rll_d1_capacity() -> float:
    return _capacity_cache.get_or_build("capacity:rll:d1", lambda: rll_capacity(RllConstraint(d=1)).capacity)


def eph_free_capacity(m_bits: int) -> float:
    return _capacity_cache.get_or_build(
        f"capacity:eph-free:{m_bits}", lambda: mary_capacity(build_transition_spec(m_bits)).capacity
    )


def rate_accounting(cfg: SchemeConfig) -> RateReport:
    """Overall code rate (modulation times ECC) and modulation capacity."""
    m = cfg.m_bits
    if cfg.scheme is Scheme.CONVENTIONAL:
        rate, capacity = 1.0, 1.0
    elif cfg.scheme is Scheme.SLC_RLL_NRZI:
        rate, capacity = RLL_RATE, rll_d1_capacity()
    elif cfg.scheme is Scheme.MLC_BINARY_RLL:
        rate = ((m - 1) + RLL_RATE) / m
        capacity = ((m - 1) + rll_d1_capacity()) / m
    else:
        assert cfg.codebook is not None
        rate, capacity = cfg.codebook.rate, eph_free_capacity(m)
    if cfg.ecc is not None:
        rate *= cfg.ecc.params.rate
    return RateReport(overall_rate=rate, capacity=capacity)
