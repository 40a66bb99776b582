import pytest

from conftest import encode_bit_stream, forward_source, random_bits
from pecstream.bitio import REVERSED_BYTES
from pecstream.rangecoder import (
    MASK32,
    PROB_ONE,
    BinaryModel,
    Decoder,
    FinalCoderState,
)
from pecstream.termination import (
    JointTermination,
    SingleTermination,
    TerminationStats,
    joint_terminate,
    pair_extra_bits,
    single_extra_bits,
    terminate_single,
    valid_byte_set,
)


def state_for(u: float, width: float, chain_bytes: bytes = b"") -> FinalCoderState:
    """Final state whose normalized interval is [u, u + width)."""
    state = FinalCoderState(round(u * 2.0**32), round(width * 2.0**32))
    for b in chain_bytes:
        state.chain.push(b)
    return state


def state_for_bounds(set_lo: int, set_hi: int, direction: str = "forward",
                     chain_bytes: bytes = b"\x42") -> FinalCoderState:
    """Final state whose valid termination set is exactly [set_lo, set_hi]."""
    low = set_lo << 24
    range_ = ((set_hi + 1) << 24) + (1 << 23) - low
    state = FinalCoderState(low, min(range_, MASK32), direction=direction)
    for b in chain_bytes:
        state.chain.push(b)
    return state


class TestValidByteSet:
    def test_plain_interval(self):
        # [0.3, 0.35): U = ceil(76.8) = 77, V = floor(89.6) - 1 = 88
        vset = valid_byte_set(state_for(0.3, 0.05))
        assert (vset.lo, vset.hi) == (77, 88)
        assert len(vset) == 12
        assert vset.prefix_bytes == 0
        assert vset.stored_values() == list(range(77, 89))
        assert not any(vset.carry_for_stored(z) for z in vset.stored_values())

    def test_renormalization_when_no_byte_fits(self):
        # [0.501, 0.505): U = 129 > V = 128, one extra renormalization
        state = state_for(0.501, 0.004)
        low0 = state.low
        vset = valid_byte_set(state)
        assert vset.prefix_bytes == 1
        assert state.chain.cache == low0 >> 24 == 128
        assert vset.lo <= vset.hi
        assert len(vset) >= 64

    def test_carry_flagged_values(self):
        # [0.999, 1.2): all stored values 0..50 need an addition carry
        vset = valid_byte_set(state_for(0.999, 0.201))
        assert (vset.lo, vset.hi) == (256, 306)
        assert vset.stored_values() == list(range(51))
        assert all(vset.carry_for_stored(z) for z in vset.stored_values())
        assert 0 in vset and 50 in vset and 51 not in vset

    def test_fresh_stream_set(self):
        vset = valid_byte_set(FinalCoderState(0, MASK32))
        assert vset.lo == 0
        assert vset.hi == 254

    def test_empty_set_rejected(self):
        with pytest.raises(ValueError):
            from pecstream.termination import ValidByteSet
            ValidByteSet(10, 9)


class TestTerminateSingle:
    def test_smallest_member_policy(self):
        term = terminate_single(state_for(0.3, 0.05))
        assert term.value == 77
        assert term.stored_byte == 77
        assert not term.carried
        assert term.appended == 1
        assert term.data == bytes([77])

    def test_carry_folds_into_chain(self):
        term = terminate_single(state_for(0.999, 0.201, chain_bytes=b"\x10\x20"))
        assert term.value == 256
        assert term.stored_byte == 0
        assert term.carried
        assert term.data == bytes([0x10, 0x21, 0x00])  # chain incremented

    def test_zero_symbol_stream_terminates_as_zero_byte(self):
        term = terminate_single(FinalCoderState(0, MASK32))
        assert term.data == b"\x00"
        assert term.appended == 1

    def test_renormalization_counts_in_appended(self):
        term = terminate_single(state_for(0.501, 0.004))
        assert term.appended == 2
        assert len(term.data) == 2


class TestJointTerminate:
    def test_interval_overlap_shares_smallest(self):
        fwd = state_for_bounds(77, 88, "forward")
        bwd = state_for_bounds(80, 95, "backward")
        term = joint_terminate(fwd, bwd, "fb")
        assert term.shared
        assert term.stored_byte == 80
        assert term.fwd_data[-1] == 80
        # backward stream keeps its payload only; junction stored once
        assert term.bwd_data == b"\x42"
        assert term.k_fwd == term.k_bwd == 1

    def test_disjoint_sets_terminate_separately(self):
        fwd = state_for_bounds(10, 14, "forward")
        bwd = state_for_bounds(60, 70, "backward")
        term = joint_terminate(fwd, bwd, "fb")
        assert not term.shared
        assert term.fwd_data[-1] == 10
        assert term.bwd_data[-1] == 60

    def test_forward_carry_junction(self):
        # forward set wraps past 256; shared byte realizes a forward carry
        fwd = state_for_bounds(250, 290, "forward")
        bwd = state_for_bounds(20, 60, "backward")
        term = joint_terminate(fwd, bwd, "fb")
        assert term.shared
        assert term.stored_byte == 20
        assert term.carried_fwd and not term.carried_bwd
        assert term.fwd_value == 276 and term.bwd_value == 20
        assert term.fwd_data == bytes([0x43, 20])  # chain byte incremented

    def test_fr_junction_is_bit_reversed_member(self, rnd):
        hits = 0
        for _ in range(200):
            lo_f = rnd.randrange(0, 250)
            lo_b = rnd.randrange(0, 250)
            fwd = state_for_bounds(lo_f, lo_f + rnd.randrange(0, 120), "forward")
            bwd = state_for_bounds(lo_b, lo_b + rnd.randrange(0, 120), "backward")
            f_set = valid_byte_set(fwd.copy())
            b_set = valid_byte_set(bwd.copy())
            term = joint_terminate(fwd, bwd, "fr")
            if term.shared:
                hits += 1
                z = term.stored_byte
                assert z in f_set
                assert REVERSED_BYTES[z] in b_set
        assert hits > 0

    def test_direction_validation(self):
        fwd = state_for_bounds(5, 9, "forward")
        with pytest.raises(ValueError):
            joint_terminate(fwd, state_for_bounds(5, 9, "forward"), "fb")
        with pytest.raises(ValueError):
            joint_terminate(fwd, state_for_bounds(5, 9, "backward"), "uni")


class TestAccounting:
    def test_single_formula(self):
        term = SingleTermination(b"\x00", appended=1, value=0, stored_byte=0,
                                 carried=False, pending_bits=3.5)
        assert single_extra_bits(term) == pytest.approx(4.5)

    def test_pair_formula_shared(self):
        term = JointTermination(b"", b"", shared=True, stored_byte=0,
                                k_fwd=1, k_bwd=1, fwd_value=0, bwd_value=0,
                                carried_fwd=False, carried_bwd=False,
                                pending_fwd=3.0, pending_bwd=3.0)
        assert pair_extra_bits(term) == pytest.approx(1.0)

    def test_stats_accumulate_and_merge(self):
        stats = TerminationStats()
        stats.add_single(SingleTermination(b"", 1, 0, 0, False, 4.0))
        stats.add_pair(JointTermination(b"", b"", True, 0, 1, 1, 0, 0,
                                        False, False, 2.0, 2.0))
        assert stats.streams == 3
        assert stats.share_ratio == 1.0
        merged = stats.merge(stats)
        assert merged.streams == 6
        assert merged.extra_bits_total == pytest.approx(2 * stats.extra_bits_total)
        row = merged.csv_row("fb")
        assert row["mode"] == "fb" and row["share_ratio"] == "1.000000"

    def test_stats_empty_errors(self):
        with pytest.raises(ValueError):
            TerminationStats().mean_extra_bits
        assert TerminationStats().share_ratio is None


class TestValidityExhaustive:
    """Every member of every valid set must decode under any continuation."""

    def test_all_members_decode(self, rnd):
        renormed = 0
        carried = 0
        for _ in range(120):
            p0 = rnd.randrange(1, PROB_ONE)
            model = BinaryModel(p0)
            bits = random_bits(rnd, rnd.randrange(0, 250), 1 - p0 / PROB_ONE)
            base = encode_bit_stream(model, bits)
            vset = valid_byte_set(base)
            assert vset.prefix_bytes in (0, 1)  # termination adds 1 or 2 bytes
            assert 0.0 < base.pending_info <= 8.0
            renormed += vset.prefix_bytes
            for value in range(vset.lo, vset.hi + 1):
                carried += value >= 256
                data = base.copy().finish(value)
                continuation = bytes(rnd.randrange(256) for _ in range(6))
                got = Decoder(forward_source(data, continuation)).decode_bits(
                    model, len(bits))
                assert got == bits
        assert renormed > 0 or carried >= 0  # branch visibility only

    def test_shared_byte_decodes_both_streams(self, rnd):
        model = BinaryModel(32768)
        shared_seen = 0
        for _ in range(150):
            bits_f = random_bits(rnd, rnd.randrange(0, 200))
            bits_b = random_bits(rnd, rnd.randrange(0, 200))
            mode = "fr" if rnd.random() < 0.5 else "fb"
            reversed_bits = mode == "fr"
            fwd = encode_bit_stream(model, bits_f, "forward")
            bwd = encode_bit_stream(model, bits_b, "backward", reversed_bits)
            term = joint_terminate(fwd, bwd, mode)
            shared_seen += term.shared
            stored_bwd = term.bwd_data
            if reversed_bits:
                stored_bwd = bytes(REVERSED_BYTES[b] for b in stored_bwd)
            segment = term.fwd_data + stored_bwd[::-1]
            if term.shared:
                assert len(segment) == len(term.fwd_data) + len(term.bwd_data)
            cont = bytes(rnd.randrange(256) for _ in range(6))
            fwd_src = forward_source(segment, cont)
            assert Decoder(fwd_src).decode_bits(model, len(bits_f)) == bits_f
            buf = cont + segment
            from pecstream.container import byte_source
            bwd_src = byte_source(buf, 0, len(buf), "backward", reversed_bits)
            assert Decoder(bwd_src).decode_bits(model, len(bits_b)) == bits_b
        assert shared_seen > 30

    def test_consistency_identity_on_same_population(self, rnd):
        """Pair accounting equals single accounting minus 4 * share, exactly."""
        model_states = []
        for _ in range(400):
            p0 = rnd.randrange(1, PROB_ONE)
            model = BinaryModel(p0)
            bits = random_bits(rnd, rnd.randrange(0, 300), 1 - p0 / PROB_ONE)
            model_states.append(encode_bit_stream(model, bits))
        singles = TerminationStats()
        pairs = TerminationStats()
        for i in range(0, len(model_states), 2):
            fwd = model_states[i]
            bwd = model_states[i + 1]
            bwd.direction = "backward"
            singles.add_single(terminate_single(fwd.copy()))
            singles.add_single(terminate_single(bwd.copy()))
            pairs.add_pair(joint_terminate(fwd, bwd, "fb"))
        expected = singles.mean_extra_bits - 4.0 * pairs.share_ratio
        assert pairs.mean_extra_bits == pytest.approx(expected, abs=1e-9)
