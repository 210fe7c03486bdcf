import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from petrelic.multiplicative.pairing import G1, G2

from privchain.group import (
    FIELD_MODULUS,
    G1_GEN,
    G1_LEN,
    G2_GEN,
    G2_LEN,
    GT_GEN,
    GT_LEN,
    ORDER,
    CodecError,
    Commitment,
    DegenerateIndex,
    Opening,
    PedersenParams,
    Transcript,
    bb_public_key,
    bb_sign,
    bb_verify,
    challenge,
    commit,
    decode_g1,
    decode_g2,
    decode_gt,
    encode_point,
    hash_to_scalar,
    multi_exp,
    open_verify,
    pedersen_setup,
    random_scalar,
    scalar_from_bytes,
    scalar_to_bytes,
)
from privchain.randomness import SeededRandom

# published BLS12-381 parameters
R_HEX = "73eda753299d7d483339d80809a1d80553bda402fffe5bfeffffffff00000001"
P_HEX = ("1a0111ea397fe69a4b1ba7b6434bacd764774b84f38512bf6730d2a0f6b0f624"
         "1eabfffeb153ffffb9feffffffffaaab")

scalars = st.integers(min_value=0, max_value=ORDER - 1)


def test_curve_constants():
    assert ORDER == int(R_HEX, 16)
    assert FIELD_MODULUS == int(P_HEX, 16)


def test_pairing_is_bilinear():
    rng = SeededRandom(1)
    a, b = random_scalar(rng), random_scalar(rng)
    assert (G1_GEN ** a).pair(G2_GEN ** b) == GT_GEN ** (a * b % ORDER)


@pytest.fixture(scope="module")
def params():
    return pedersen_setup(b"unit-tests")


def test_setup_is_deterministic_and_domain_separated(params):
    assert pedersen_setup(b"unit-tests") == params
    assert pedersen_setup(b"other").h != params.h
    assert params.h != params.g and not params.h.is_neutral_element()
    assert PedersenParams.from_bytes(params.to_bytes()) == params


def test_zero_commitment_is_identity(params):
    assert commit(params, 0, 0).element.is_neutral_element()


@settings(max_examples=1000, deadline=None)
@given(scalars, scalars, scalars, scalars)
def test_commitments_are_additively_homomorphic(params, m1, r1, m2, r2):
    product = commit(params, m1, r1) * commit(params, m2, r2)
    assert product == commit(params, (m1 + m2) % ORDER, (r1 + r2) % ORDER)


def test_open_verify(params):
    rng = SeededRandom(2)
    m, r = 4242, random_scalar(rng)
    com = commit(params, m, r)
    assert open_verify(params, com, Opening(m, r))
    assert not open_verify(params, com, Opening(m + 1, r))
    assert not open_verify(params, com, Opening(m, r + 1))


def test_hiding_spot_check(params):
    rng = SeededRandom(3)
    assert commit(params, 7, random_scalar(rng)) != commit(params, 7, random_scalar(rng))


def test_bb_signatures_exhaustive_small_indices():
    x = hash_to_scalar(b"bb-test")
    Y = bb_public_key(x)
    sigs = [bb_sign(x, i) for i in range(10)]
    for i in range(10):
        for j in range(10):
            assert bb_verify(Y, j, sigs[i]) == (i == j), (i, j)


def test_bb_rejects_identity_and_wrong_key():
    x = hash_to_scalar(b"bb-test")
    assert not bb_verify(bb_public_key(x), 3, G1.neutral_element())
    assert not bb_verify(bb_public_key(x + 1), 3, bb_sign(x, 3))


def test_bb_degenerate_index():
    with pytest.raises(DegenerateIndex):
        bb_sign(ORDER - 5, 5)


def test_multi_exp_matches_naive():
    rng = SeededRandom(4)
    bases = [G1_GEN ** random_scalar(rng) for _ in range(5)]
    exps = [random_scalar(rng) for _ in range(5)]
    naive = bases[0] ** exps[0]
    for b, e in zip(bases[1:], exps[1:]):
        naive = naive * b ** e
    assert multi_exp(bases, exps) == naive


class TestCodec:
    def test_roundtrips(self):
        rng = SeededRandom(5)
        for _ in range(10):
            k = random_scalar(rng)
            for P, dec in ((G1_GEN ** k, decode_g1), (G2_GEN ** k, decode_g2), (GT_GEN ** k, decode_gt)):
                assert dec(encode_point(P)) == P
        assert len(encode_point(G1_GEN)) == G1_LEN
        assert len(encode_point(G2_GEN)) == G2_LEN
        assert len(encode_point(GT_GEN)) == GT_LEN

    def test_identity_is_fixed_length_zero(self):
        for ident, n, dec in ((G1.neutral_element(), G1_LEN, decode_g1),
                              (G2.neutral_element(), G2_LEN, decode_g2)):
            assert encode_point(ident) == bytes(n)
            assert dec(bytes(n)).is_neutral_element()

    def test_wrong_length_and_flag(self):
        enc = encode_point(G1_GEN ** 99)
        with pytest.raises(CodecError):
            decode_g1(enc[:-1])
        with pytest.raises(CodecError):
            decode_g1(bytes([5]) + enc[1:])
        with pytest.raises(CodecError):
            decode_g2(encode_point(G2_GEN)[:-3])
        with pytest.raises(CodecError):
            decode_gt(encode_point(GT_GEN) + b"\0")

    def test_unreduced_coordinate(self):
        bad = bytes([2]) + FIELD_MODULUS.to_bytes(48, "big")
        with pytest.raises(CodecError):
            decode_g1(bad)

    def test_random_bytes_rejected_or_canonical(self):
        # a random x is on the curve about half the time, but the cofactor
        # makes landing in the prime-order subgroup negligible
        rng = SeededRandom(6)
        for _ in range(200):
            data = bytes([2 + rng.randbelow(2)]) + rng.token_bytes(48)
            with pytest.raises(CodecError):
                decode_g1(data)
        for _ in range(20):
            with pytest.raises(CodecError):
                decode_gt(rng.token_bytes(GT_LEN))

    def test_single_byte_corruption(self):
        rng = SeededRandom(7)
        P = G1_GEN ** random_scalar(rng)
        enc = bytearray(encode_point(P))
        for pos in range(G1_LEN):
            mutated = bytearray(enc)
            mutated[pos] ^= 1 << rng.randbelow(8)
            try:
                Q = decode_g1(bytes(mutated))
            except CodecError:
                continue
            # flipping the sign bit gives the (valid) negated point
            assert pos == 0 and Q == P.inverse()

    def test_scalars(self):
        assert scalar_from_bytes(scalar_to_bytes(ORDER - 1)) == ORDER - 1
        with pytest.raises(CodecError):
            scalar_from_bytes(ORDER.to_bytes(32, "big"))
        with pytest.raises(CodecError):
            scalar_from_bytes(b"\1" * 31)

    def test_commitment_codec(self, params):
        com = commit(params, 12, 34)
        assert Commitment.from_bytes(com.to_bytes()) == com


class TestTranscript:
    def test_framing_prevents_ambiguity(self):
        a, b = Transcript(b"t"), Transcript(b"t")
        a.append(b"x", b"ab")
        a.append(b"y", b"c")
        b.append(b"x", b"a")
        b.append(b"y", b"bc")
        assert a.challenge() != b.challenge()

    def test_label_and_copy(self):
        a = Transcript(b"one")
        a.append_scalar(b"s", 5)
        b = a.copy()
        assert a.challenge() == b.challenge()
        b.append_int(b"n", 1)
        assert a.challenge() != b.challenge()
        c = Transcript(b"two")
        c.append_scalar(b"s", 5)
        assert c.challenge() != a.challenge()

    def test_challenge_is_sha512_reduced(self):
        # independent recomputation of the documented framing
        def fr(*parts):
            return b"".join(len(p).to_bytes(4, "big") + p for p in parts)

        t = Transcript(b"lbl")
        t.append(b"tag", b"data")
        expected = hashlib.sha512(fr(b"privchain/transcript/v1", b"lbl") + fr(b"tag", b"data")).digest()
        assert t.challenge() == int.from_bytes(expected, "big") % ORDER

    def test_empty_transcript_refused(self):
        with pytest.raises(ValueError):
            challenge(Transcript(b"empty"))
