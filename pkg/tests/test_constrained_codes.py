"""Tests for the constrained codes module."""

import numpy as np
import pytest

from nandcode.constrained_codes import (
    CODEBOOK_PRESETS,
    BoundaryPolicy,
    RllConstraint,
    SymbolWord,
    bits_from_str,
    bits_to_str,
    build_codebook,
    build_transition_spec,
    candidate_pool,
    codebook_decode,
    codebook_encode,
    eph_adjacent,
    enumerate_candidates,
    expected_junction_rate,
    junction_statistics,
    level_runs,
    mary_capacity,
    min_interior_run,
    nrzi_decode,
    nrzi_encode,
    power_iteration,
    preset_codebook,
    read_codebook,
    rll17_decode,
    rll17_encode,
    rll_capacity,
    subset_counts,
    write_codebook,
)
from nandcode.exceptions import (
    CodebookCapacityError,
    CodebookFormatError,
    LengthError,
    PresetError,
    RangeError,
)

TABLE_IV_COUNTS = (31, 39, 39, 30, 39, 50, 50, 39, 39, 50, 50, 39, 30, 39, 39, 31)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="module")
def codebook1():
    return preset_codebook("mlc2-q-cb1")


@pytest.fixture(scope="module")
def codebook2():
    return preset_codebook("mlc2-q-cb2")


def test_bit_string_helpers():
    """Test conversion between literal strings and bit arrays."""
    bits = bits_from_str("01 10")
    assert bits.dtype == np.uint8
    assert bits.tolist() == [0, 1, 1, 0]
    assert bits_to_str(bits) == "0110"
    with pytest.raises(RangeError):
        bits_from_str("0120")


@pytest.mark.parametrize(
    "data,coded",
    [
        ("00", "101"),
        ("01", "100"),
        ("10", "001"),
        ("11", "010"),
        ("0001", "100000"),
        ("1001", "010000"),
        ("010010", "100101001"),
        ("00000000", "101000101000"),
    ],
)
def test_rll17_encode_tables(data, coded):
    """Test the basic and substitution tables and the look-ahead rule."""
    assert bits_to_str(rll17_encode(data)) == coded
    assert bits_to_str(rll17_decode(coded)) == data


def test_rll17_final_pair_uses_basic_table():
    """Test that a trailing violating pair has no look-ahead."""
    assert bits_to_str(rll17_encode("000000")) == "101000101"


def test_rll17_empty_input():
    """Test that empty streams encode and decode to empty streams."""
    assert rll17_encode("").size == 0
    assert rll17_decode("").size == 0


def test_rll17_length_errors():
    """Test framing errors."""
    with pytest.raises(LengthError) as exc:
        rll17_encode("010")
    assert exc.value.length == 3
    with pytest.raises(LengthError):
        rll17_decode("1010")


def test_rll17_decode_invalid_groups_fall_back():
    """Test that groups outside the code decode to the nearest table entry."""
    assert bits_to_str(rll17_decode("111")) == "00"
    assert bits_to_str(rll17_decode("000")) == "01"
    assert bits_to_str(rll17_decode("011")) == "10"


def test_rll17_properties_on_many_random_inputs(rng):
    """Test round trip, the (1, 7) constraint and NRZI run lengths on 10^5 inputs."""
    constraint = RllConstraint(d=1, k=7)
    lengths = 2 * rng.integers(0, 41, size=100_000)
    stream = rng.integers(0, 2, size=int(lengths.sum()), dtype=np.uint8)
    offsets = np.concatenate(([0], np.cumsum(lengths)))
    for start, stop in zip(offsets[:-1].tolist(), offsets[1:].tolist()):
        data = stream[start:stop]
        coded = rll17_encode(data)
        assert np.array_equal(rll17_decode(coded), data)
        assert constraint.admits(coded)
        # interior runs of the written levels are at least d + 1 long
        shortest = min_interior_run(nrzi_encode(coded, init=0))
        assert shortest is None or shortest >= 2


def test_rll17_output_satisfies_d1_k7(rng):
    """Test the (1, 7) constraint on a long random stream and many short ones."""
    constraint = RllConstraint(d=1, k=7)
    stream = bits_to_str(rll17_encode(rng.integers(0, 2, size=200_000, dtype=np.uint8)))
    assert "11" not in stream
    assert "0" * 8 not in stream
    for _ in range(300):
        data = rng.integers(0, 2, size=2 * int(rng.integers(1, 40)), dtype=np.uint8)
        assert constraint.admits(rll17_encode(data))


@pytest.mark.parametrize(
    "bits,init,levels",
    [
        ("100101001", 0, "111001110"),
        ("0000", 1, "1111"),
        ("11", 0, "10"),
    ],
)
def test_nrzi_examples(bits, init, levels):
    """Test NRZI precoding and its inverse."""
    assert bits_to_str(nrzi_encode(bits, init)) == levels
    assert bits_to_str(nrzi_decode(levels, init)) == bits


def test_nrzi_single_flip_gives_two_errors():
    """Test that one flipped level corrupts two decoded bits."""
    a = nrzi_decode("1011", 0)
    b = nrzi_decode("1111", 0)
    assert np.count_nonzero(a != b) == 2


def test_nrzi_rejects_bad_init():
    """Test that the initial level must be a bit."""
    with pytest.raises(RangeError):
        nrzi_encode("01", 2)


def test_nrzi_of_rll_stream_has_min_interior_run_two(rng):
    """Test that NRZI over a d=1 stream keeps every interior level run at least 2 long."""
    levels = nrzi_encode(rll17_encode(rng.integers(0, 2, size=20_000, dtype=np.uint8)))
    assert min_interior_run(levels) >= 2


def test_level_runs():
    """Test run-length bookkeeping."""
    assert level_runs([1, 1, 0, 1, 1, 1]).tolist() == [2, 1, 3]
    assert level_runs([]).size == 0
    assert min_interior_run([0, 1, 1, 0]) == 2
    assert min_interior_run([0, 1]) is None


def test_rll_capacity_values():
    """Test capacities of unconstrained and d=1 binary sequences."""
    assert rll_capacity(RllConstraint(d=1)).capacity == pytest.approx(0.6942, abs=5e-4)
    assert rll_capacity(RllConstraint(d=0)).capacity == pytest.approx(1.0, abs=1e-9)


def test_rll_capacity_d1_k7_matches_enumeration():
    """Test the (1, 7) capacity against the growth of brute-force counts."""

    def count(n):
        x = np.arange(1 << n, dtype=np.int64)
        mask = (1 << n) - 1
        zeros = ~x & mask
        run8 = zeros.copy()
        for shift in range(1, 8):
            run8 &= zeros >> shift
        return int(np.count_nonzero(((x & (x >> 1)) == 0) & (run8 == 0)))

    estimate = np.log2(count(20) / count(19))
    assert rll_capacity(RllConstraint(d=1, k=7)).capacity == pytest.approx(estimate, abs=0.01)


def test_rll_constraint_validation():
    """Test that k must exceed d."""
    with pytest.raises(RangeError):
        RllConstraint(d=2, k=2)
    with pytest.raises(RangeError):
        RllConstraint(d=-1)


def test_build_transition_spec():
    """Test the E-PH-free transition matrices."""
    spec = build_transition_spec(2)
    expected = np.ones((4, 4), dtype=int)
    expected[0, 3] = expected[3, 0] = 0
    assert np.array_equal(spec.matrix, expected)
    assert np.array_equal(build_transition_spec(1).matrix, np.eye(2, dtype=int))

    m3 = build_transition_spec(3).matrix
    assert m3.sum() == 64 - 2
    assert m3[0, 7] == 0 and m3[7, 0] == 0

    with pytest.raises(RangeError):
        build_transition_spec(5)


@pytest.mark.parametrize("m_bits,capacity", [(2, 0.9163), (3, 0.9861), (4, 0.9973)])
def test_mary_capacity(m_bits, capacity):
    """Test E-PH-free capacities per bits/cell."""
    assert mary_capacity(build_transition_spec(m_bits)).capacity == pytest.approx(capacity, abs=1e-3)


def test_mary_capacity_lambda_matches_string_growth():
    """Test lambda_max against a dynamic-programming count of E-PH-free strings."""
    counts = [1, 1, 1, 1]
    totals = []
    for _ in range(20):
        totals.append(sum(counts))
        counts = [
            sum(counts[prev] for prev in range(4) if {prev, level} != {0, 3})
            for level in range(4)
        ]
    lam = mary_capacity(build_transition_spec(2)).lambda_max
    assert lam == pytest.approx(3.5616, abs=1e-3)
    assert totals[-1] / totals[-2] == pytest.approx(lam, abs=1e-3)


def test_power_iteration_on_known_matrix():
    """Test power iteration against a closed-form eigenvalue."""
    assert power_iteration(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(3.0)


def test_enumerate_candidates_examples():
    """Test candidate counts of single subsets."""
    assert len(enumerate_candidates(2, 5, 0, 0)) == 31
    assert len(enumerate_candidates(2, 5, 1, 1)) == 50
    assert enumerate_candidates(2, 2, 0, 3) == []


def test_enumerate_candidates_are_lexicographic_and_free():
    """Test ordering and E-PH freedom of enumerated words."""
    words = enumerate_candidates(2, 5, 1, 2)
    assert all(w.internally_eph_free for w in words)
    assert [w.symbols for w in words] == sorted(w.symbols for w in words)


def test_subset_counts_table():
    """Test the per-(first, last) candidate counts of the quaternary length-5 pool."""
    counts = subset_counts(2, 5)
    assert tuple(counts.values()) == TABLE_IV_COUNTS
    assert sum(counts.values()) == 634
    assert list(counts)[:2] == [(0, 0), (0, 1)]


@pytest.mark.parametrize(
    "m_bits,word_len,policy,size",
    [
        (2, 5, BoundaryPolicy.exclude_level_at_ends(0), 387),
        (2, 5, BoundaryPolicy.exclude_level_at_ends(3), 387),
        (2, 5, BoundaryPolicy.exclude_extremes_at_both_ends(), 512),
        (3, 3, BoundaryPolicy.exclude_level_at_ends(0), 379),
        (3, 4, BoundaryPolicy.exclude_level_at_ends(0), 2941),
        (3, 5, BoundaryPolicy.exclude_level_at_ends(0), 22855),
    ],
)
def test_candidate_pool_sizes(m_bits, word_len, policy, size):
    """Test pool sizes of every codebook geometry."""
    assert candidate_pool(m_bits, word_len, policy).shape[0] == size


def test_codebook_presets(codebook1, codebook2):
    """Test codebook sizes and rates."""
    assert codebook1.pool_size == 387
    assert codebook1.size == 256
    assert codebook1.rate == pytest.approx(0.8)
    assert codebook2.pool_size == 512
    assert codebook2.rate == pytest.approx(0.9)
    assert CODEBOOK_PRESETS["mlc3-8ary-14_15"].rate == pytest.approx(14 / 15)


def test_codebook_is_prefix_of_pool(codebook1):
    """Test that data index i maps to pool word i."""
    pool = candidate_pool(2, 5, BoundaryPolicy.exclude_level_at_ends(0))
    assert np.array_equal(codebook1.table, pool[:256])
    assert codebook1.inverse[tuple(int(s) for s in pool[17])] == 17


def test_build_codebook_pool_too_small():
    """Test the capacity error when the pool cannot fill the codebook."""
    with pytest.raises(CodebookCapacityError) as exc:
        build_codebook(2, 5, 9, BoundaryPolicy.exclude_level_at_ends(0))
    assert exc.value.pool_size == 387
    assert exc.value.required == 512


def test_boundary_policy_validation():
    """Test that only E or PH can be excluded at the ends."""
    with pytest.raises(RangeError):
        build_codebook(2, 5, 8, BoundaryPolicy.exclude_level_at_ends(1))


def test_boundary_policy_labels_round_trip():
    """Test policy labels."""
    for policy in (BoundaryPolicy.exclude_level_at_ends(3), BoundaryPolicy.exclude_extremes_at_both_ends()):
        assert BoundaryPolicy.parse(policy.label) == policy
    with pytest.raises(CodebookFormatError):
        BoundaryPolicy.parse("exclude-nothing")


def test_codebook_round_trip(codebook1, rng):
    """Test encode/decode identity on random data."""
    data = rng.integers(0, 2, size=8 * 10_000, dtype=np.uint8)
    words = codebook_encode(codebook1, data)
    assert words.shape == (10_000, 5)
    assert np.array_equal(codebook_decode(codebook1, words), data)
    assert np.array_equal(codebook_decode(codebook1, words.ravel()), data)


def test_codebook_encode_index_is_big_endian(codebook1):
    """Test that an 8-bit chunk selects the codeword of its big-endian value."""
    words = codebook_encode(codebook1, bits_from_str("00000101"))
    assert np.array_equal(words[0], codebook1.table[5])


def test_codebook_empty_and_bad_lengths(codebook1):
    """Test empty input and framing errors."""
    assert codebook_encode(codebook1, "").shape == (0, 5)
    assert codebook_decode(codebook1, np.zeros((0, 5), dtype=int)).size == 0
    with pytest.raises(LengthError):
        codebook_encode(codebook1, "0101")
    with pytest.raises(LengthError):
        codebook_decode(codebook1, [[1, 1, 1]])


@pytest.mark.parametrize("name", ["mlc2-q-cb1", "mlc2-q-cb1-ph"])
def test_level_excluding_codebooks_have_no_eph_pairs(name, rng):
    """Test that concatenated codewords never place E next to PH."""
    cb = preset_codebook(name)
    stream = codebook_encode(cb, rng.integers(0, 2, size=8 * 50_000, dtype=np.uint8)).ravel()
    assert not eph_adjacent(stream[:-1], stream[1:], 3).any()


def test_codebook_decode_nearest_word(codebook1, rng):
    """Test that corrupted words decode to the nearest codeword, lowest index on ties."""
    table = codebook1.table
    for _ in range(50):
        word = table[int(rng.integers(0, 256))].copy()
        word[int(rng.integers(0, 5))] = int(rng.integers(0, 4))
        distances = (table != word).sum(axis=1)
        expected = int(np.argmin(distances))
        bits = codebook_decode(codebook1, word[None, :])
        assert int(bits_to_str(bits), 2) == expected


def test_junction_statistics_codebook2(codebook2):
    """Test the junction E-PH frequency of the extreme-excluding codebook."""
    stats = junction_statistics(codebook2, 200_000, seed=3)
    assert stats.internal_eph == 0
    assert stats.double_sided == 0
    assert stats.junction_rate == pytest.approx(0.0464, abs=0.003)
    assert expected_junction_rate(codebook2) == pytest.approx(2 * (78 / 512) ** 2)


def test_junction_statistics_codebook1_is_clean(codebook1):
    """Test that codebook 1 has no junction E-PH pairs at all."""
    stats = junction_statistics(codebook1, 20_000)
    assert stats.junction_eph == 0
    assert expected_junction_rate(codebook1) == 0.0


def test_codebook_file_round_trip(codebook2, tmp_path):
    """Test text export and import."""
    path = tmp_path / "cb2.cb"
    write_codebook(codebook2, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "M=2 L=5 B=9 P=exclude-extremes-both-ends"
    assert len(lines) == 513

    loaded = read_codebook(path)
    assert loaded.header() == codebook2.header()
    assert np.array_equal(loaded.table, codebook2.table)


def test_read_codebook_rejects_malformed_files(tmp_path):
    """Test that broken files raise format errors."""
    empty = tmp_path / "empty.cb"
    empty.write_text("")
    with pytest.raises(CodebookFormatError):
        read_codebook(empty)

    bad_header = tmp_path / "bad.cb"
    bad_header.write_text("M=2 L=five B=8 P=exclude-level-0\n1 1 1 1 1\n")
    with pytest.raises(CodebookFormatError):
        read_codebook(bad_header)


def test_preset_codebook_cache_and_errors():
    """Test preset lookup."""
    assert preset_codebook("mlc2-q-cb1") is preset_codebook("mlc2-q-cb1")
    with pytest.raises(PresetError):
        preset_codebook("mlc2-q-cb9")


def test_symbol_word():
    """Test symbol word validation and E-PH detection."""
    assert SymbolWord(2, (1, 0, 1)).internally_eph_free
    assert not SymbolWord(2, (1, 3, 0)).internally_eph_free
    with pytest.raises(RangeError):
        SymbolWord(2, (4,))
