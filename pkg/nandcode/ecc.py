"""Bounded-distance ECC model and the one-page block interleaver.

The ECC is modelled rather than implemented: a codeword is its info bits
followed by pseudorandom parity, and decoding succeeds exactly when the
received word is within ``t`` bit errors of the transmitted one. The decoder
knows the transmitted word (genie-aided), so miscorrections are not modelled.
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import Dict, NamedTuple, Optional, Sequence, Union

import numpy as np

from nandcode.constrained_codes import BitsLike, as_bits
from nandcode.exceptions import GeometryError, LengthError, PresetError, RangeError

logger = logging.getLogger(__name__)

CODEWORDS_PER_PAGE = 16
NO_ECC = "none"


@dataclass(frozen=True)
class EccParams:
    """Codeword size n, info size k and correction capability t."""

    n: int
    k: int
    t: int

    def __post_init__(self) -> None:
        if not 0 < self.k < self.n:
            raise RangeError(f"ECC needs 0 < k < n, got n={self.n} k={self.k}")
        if self.t < 0:
            raise RangeError(f"ECC correction capability must be non-negative, got {self.t}")

    @property
    def rate(self) -> float:
        return self.k / self.n


@dataclass(frozen=True)
class PageLayout:
    """ECC codewords stored on one logical page."""

    params: EccParams
    codewords_per_page: int = CODEWORDS_PER_PAGE

    def __post_init__(self) -> None:
        if self.codewords_per_page < 1:
            raise RangeError(f"A page needs at least one codeword, got {self.codewords_per_page}")

    @property
    def info_bits(self) -> int:
        return self.codewords_per_page * self.params.k

    @property
    def coded_bits(self) -> int:
        return self.codewords_per_page * self.params.n


ECC_PRESETS: Dict[str, EccParams] = {
    "conv-9/10": EccParams(n=4551, k=4096, t=35),
    "conv-1/2": EccParams(n=8191, k=4096, t=366),
    "mod-3/4": EccParams(n=5435, k=4096, t=105),
}


def ecc_preset(name: str) -> Optional[EccParams]:
    """Look up ECC parameters by preset name; ``"none"`` disables ECC."""
    if name == NO_ECC:
        return None
    params = ECC_PRESETS.get(name)
    if params is None:
        raise PresetError("ECC", name, [NO_ECC, *ECC_PRESETS])
    return params


def _parity(info: np.ndarray, n_parity: int, seed: int) -> np.ndarray:
    digest = hashlib.blake2b(np.packbits(info).tobytes(), digest_size=16)
    digest.update(int(seed % (1 << 64)).to_bytes(8, "little"))
    rng = np.random.default_rng(int.from_bytes(digest.digest(), "little"))
    return rng.integers(0, 2, size=n_parity, dtype=np.uint8)


def ecc_encode_model(info: BitsLike, p: EccParams, seed: int) -> np.ndarray:
    """Systematic codeword: info followed by n - k seeded pseudorandom parity bits."""
    bits = as_bits(info)
    if bits.size != p.k:
        raise LengthError(f"ECC info must be {p.k} bits, got {bits.size}", bits.size)
    return np.concatenate((bits, _parity(bits, p.n - p.k, seed)))


class EccDecodeResult(NamedTuple):
    info: np.ndarray
    success: bool


def ecc_decode_model(received: BitsLike, transmitted: BitsLike, p: EccParams) -> EccDecodeResult:
    """Genie-aided bounded-distance decoding of one codeword.

    Returns the transmitted info on success (at most t errors), otherwise the
    received info prefix.
    """
    rx = as_bits(received)
    tx = as_bits(transmitted)
    if rx.size != p.n or tx.size != p.n:
        raise LengthError(f"ECC codewords must be {p.n} bits, got {rx.size} and {tx.size}")
    if np.count_nonzero(rx != tx) <= p.t:
        return EccDecodeResult(tx[: p.k].copy(), True)
    return EccDecodeResult(rx[: p.k].copy(), False)


class PageDecodeResult(NamedTuple):
    info: np.ndarray
    success: np.ndarray
    errors: np.ndarray


def ecc_encode_page(info: BitsLike, layout: PageLayout, seed: int) -> np.ndarray:
    """Encode a page of user bits into a (codewords, n) array."""
    bits = as_bits(info)
    if bits.size != layout.info_bits:
        raise LengthError(f"Page info must be {layout.info_bits} bits, got {bits.size}", bits.size)
    chunks = bits.reshape(layout.codewords_per_page, layout.params.k)
    return np.stack([ecc_encode_model(chunk, layout.params, seed) for chunk in chunks])


def ecc_decode_page(received: np.ndarray, transmitted: np.ndarray, p: EccParams) -> PageDecodeResult:
    """Vectorised ``ecc_decode_model`` over the rows of a page."""
    if received.shape != transmitted.shape or received.ndim != 2 or received.shape[1] != p.n:
        raise LengthError(
            f"Page codewords must have shape (rows, {p.n}), got {received.shape} and {transmitted.shape}"
        )
    errors = np.count_nonzero(received != transmitted, axis=1)
    success = errors <= p.t
    info = np.where(success[:, None], transmitted[:, : p.k], received[:, : p.k]).astype(np.uint8)
    return PageDecodeResult(info=info.ravel(), success=success, errors=errors)


def interleave(page: Union[np.ndarray, Sequence[BitsLike]]) -> np.ndarray:
    """Write codewords as rows and read the array out column by column."""
    if isinstance(page, np.ndarray) and page.ndim == 2:
        rows = page
    else:
        words = [as_bits(w) for w in page]
        if len({w.size for w in words}) > 1:
            raise GeometryError(f"Interleaver rows differ in length: {sorted({w.size for w in words})}")
        rows = np.stack(words) if words else np.zeros((0, 0), dtype=np.uint8)
    return np.ascontiguousarray(rows.T).ravel().astype(np.uint8)


def deinterleave(stream: BitsLike, rows: int) -> np.ndarray:
    """Invert ``interleave``; returns a (rows, n) array of codewords."""
    bits = as_bits(stream)
    if rows < 1:
        raise RangeError(f"Interleaver needs at least one row, got {rows}")
    if bits.size % rows:
        raise LengthError(f"Stream length {bits.size} is not divisible by {rows} rows", bits.size)
    return np.ascontiguousarray(bits.reshape(-1, rows).T)
