"""Pairing groups, Pedersen commitments, Boneh-Boyen signatures, transcripts.

Everything lives on BLS12-381 (type-3 pairing, prime order ``ORDER`` of
255 bits) through the RELIC bindings in :mod:`petrelic`. Scalars are plain
Python ints reduced modulo ``ORDER``.

Byte codec (all fixed length):

==========  =======  ==================================================
kind        length   layout
==========  =======  ==================================================
scalar      32       big-endian integer, must be < ORDER
G1          49       0x02/0x03 (sign of y) || x (48 bytes, big-endian);
                     identity is 49 zero bytes
G2          97       0x02/0x03 || x.c0 (48) || x.c1 (48);
                     identity is 97 zero bytes
GT          384      RELIC Fp12 encoding, must lie in the order-q subgroup
==========  =======  ==================================================

Decoders reject wrong lengths, non-canonical flag bytes, off-curve and
wrong-subgroup points, and anything that does not re-encode to the exact
input.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import gmpy2

from petrelic.multiplicative.pairing import (
    G1,
    G2,
    G1Element,
    G2Element,
    GTElement,
)

from privchain._encoding import DecodeError, frame
from privchain.randomness import system_random

ORDER = int(G1.order())
FIELD_MODULUS = int(
    "1a0111ea397fe69a4b1ba7b6434bacd764774b84f38512bf6730d2a0f6b0f624"
    "1eabfffeb153ffffb9feffffffffaaab",
    16,
)

SCALAR_LEN = 32
G1_LEN = 49
G2_LEN = 97
GT_LEN = 384

G1_GEN = G1.generator()
G2_GEN = G2.generator()
GT_GEN = G1_GEN.pair(G2_GEN)


class CodecError(DecodeError):
    pass


class DegenerateIndex(ValueError):
    """Raised by :func:`bb_sign` when ``x + index`` is zero mod the order."""


# -- scalars -----------------------------------------------------------------

def random_scalar(rng=system_random, nonzero: bool = False) -> int:
    while True:
        x = rng.randbelow(ORDER)
        if x or not nonzero:
            return x


def hash_to_scalar(*parts: bytes) -> int:
    digest = hashlib.sha512(frame(*parts)).digest()
    return int.from_bytes(digest, "big") % ORDER


def scalar_to_bytes(x: int) -> bytes:
    return (x % ORDER).to_bytes(SCALAR_LEN, "big")


def scalar_from_bytes(data: bytes) -> int:
    if len(data) != SCALAR_LEN:
        raise CodecError(f"scalar must be {SCALAR_LEN} bytes")
    x = int.from_bytes(data, "big")
    if x >= ORDER:
        raise CodecError("scalar not reduced")
    return x


# -- group elements ----------------------------------------------------------

def _is_square_fp(a: int) -> bool:
    return gmpy2.jacobi(a % FIELD_MODULUS, FIELD_MODULUS) >= 0


def _on_curve_g1(x: int) -> bool:
    return _is_square_fp(x**3 + 4)


def _on_curve_g2(x0: int, x1: int) -> bool:
    # y^2 = x^3 + 4(1 + i) over Fp[i]/(i^2 + 1); a is a square iff its norm is
    p = FIELD_MODULUS
    s0 = (x0 * x0 - x1 * x1) % p
    s1 = (2 * x0 * x1) % p
    c0 = (s0 * x0 - s1 * x1 + 4) % p
    c1 = (s0 * x1 + s1 * x0 + 4) % p
    return _is_square_fp(c0 * c0 + c1 * c1)


def encode_point(P) -> bytes:
    if isinstance(P, G1Element):
        return bytes(G1_LEN) if P.is_neutral_element() else P.to_binary()
    if isinstance(P, G2Element):
        return bytes(G2_LEN) if P.is_neutral_element() else P.to_binary()
    if isinstance(P, GTElement):
        return P.to_binary()
    raise TypeError(f"not a group element: {type(P).__name__}")


def decode_g1(data: bytes) -> G1Element:
    if len(data) != G1_LEN:
        raise CodecError(f"G1 encoding must be {G1_LEN} bytes")
    if data == bytes(G1_LEN):
        return G1.neutral_element()
    if data[0] not in (2, 3):
        raise CodecError("bad G1 flag byte")
    x = int.from_bytes(data[1:], "big")
    if x >= FIELD_MODULUS or not _on_curve_g1(x):
        raise CodecError("G1 point not on curve")
    P = G1Element.from_binary(bytes(data))
    if not P.is_valid() or P.to_binary() != data:
        raise CodecError("G1 point not in subgroup")
    return P


def decode_g2(data: bytes) -> G2Element:
    if len(data) != G2_LEN:
        raise CodecError(f"G2 encoding must be {G2_LEN} bytes")
    if data == bytes(G2_LEN):
        return G2.neutral_element()
    if data[0] not in (2, 3):
        raise CodecError("bad G2 flag byte")
    x0 = int.from_bytes(data[1:49], "big")
    x1 = int.from_bytes(data[49:], "big")
    if x0 >= FIELD_MODULUS or x1 >= FIELD_MODULUS or not _on_curve_g2(x0, x1):
        raise CodecError("G2 point not on curve")
    P = G2Element.from_binary(bytes(data))
    if not P.is_valid() or P.to_binary() != data:
        raise CodecError("G2 point not in subgroup")
    return P


def decode_gt(data: bytes) -> GTElement:
    if len(data) != GT_LEN:
        raise CodecError(f"GT encoding must be {GT_LEN} bytes")
    for i in range(0, GT_LEN, 48):
        if int.from_bytes(data[i:i + 48], "big") >= FIELD_MODULUS:
            raise CodecError("GT coordinate not reduced")
    P = GTElement.from_binary(bytes(data))
    if not P.is_valid() or P.to_binary() != data:
        raise CodecError("GT element not in subgroup")
    return P


def multi_exp(bases, exponents):
    """Product of ``b ** e``; the first base fixes the group."""
    acc = None
    for b, e in zip(bases, exponents, strict=True):
        term = b ** (e % ORDER)
        acc = term if acc is None else acc * term
    return acc


# -- Pedersen ----------------------------------------------------------------

@dataclass(frozen=True)
class PedersenParams:
    g: G1Element
    h: G1Element

    @property
    def order(self) -> int:
        return ORDER

    def to_bytes(self) -> bytes:
        return encode_point(self.g) + encode_point(self.h)

    @classmethod
    def from_bytes(cls, data: bytes) -> PedersenParams:
        if len(data) != 2 * G1_LEN:
            raise CodecError("bad Pedersen parameter length")
        g, h = decode_g1(data[:G1_LEN]), decode_g1(data[G1_LEN:])
        if g.is_neutral_element() or h.is_neutral_element():
            raise CodecError("Pedersen generator is the identity")
        return cls(g, h)


def pedersen_setup(domain_seed: bytes) -> PedersenParams:
    """Public commitment parameters.

    ``g`` is the standard G1 generator; ``h`` is hashed to the curve from a
    domain-separated seed so nobody knows its discrete log base ``g``.
    """
    if not domain_seed:
        raise ValueError("domain seed must be nonempty")
    h = G1.hash_to_point(b"privchain/pedersen-h/v1|" + domain_seed)
    if h.is_neutral_element() or h == G1_GEN:
        raise ValueError("degenerate second generator")  # pragma: no cover
    return PedersenParams(G1_GEN, h)


@dataclass(frozen=True)
class Commitment:
    element: G1Element

    def __mul__(self, other: Commitment) -> Commitment:
        return Commitment(self.element * other.element)

    def to_bytes(self) -> bytes:
        return encode_point(self.element)

    @classmethod
    def from_bytes(cls, data: bytes) -> Commitment:
        return cls(decode_g1(data))

    def hex(self) -> str:
        return self.to_bytes().hex()


@dataclass(frozen=True)
class Opening:
    message: int
    blinding: int

    def __post_init__(self):
        object.__setattr__(self, "message", self.message % ORDER)
        object.__setattr__(self, "blinding", self.blinding % ORDER)


def commit(params: PedersenParams, message: int, blinding: int) -> Commitment:
    return Commitment(params.g ** (message % ORDER) * params.h ** (blinding % ORDER))


def open_verify(params: PedersenParams, com: Commitment, opening: Opening) -> bool:
    return commit(params, opening.message, opening.blinding).element == com.element


# -- Boneh-Boyen signatures --------------------------------------------------

def bb_public_key(secret_x: int) -> G2Element:
    return G2_GEN ** (secret_x % ORDER)


def bb_sign(secret_x: int, index: int) -> G1Element:
    e = (secret_x + index) % ORDER
    if e == 0:
        raise DegenerateIndex(f"x + {index} is zero mod the group order")
    return G1_GEN ** pow(e, -1, ORDER)


def bb_verify(Y: G2Element, index: int, sig: G1Element) -> bool:
    """Check ``e(sig, Y * g2^index) == e(g1, g2)``."""
    if sig.is_neutral_element():
        return False
    return sig.pair(Y * G2_GEN ** (index % ORDER)) == GT_GEN


# -- Fiat-Shamir -------------------------------------------------------------

class Transcript:
    """Append-only list of tagged items hashed into challenges.

    Items are absorbed as length-prefixed (tag, bytes) pairs so two different
    sequences can never serialize to the same byte string.
    """

    def __init__(self, label: bytes):
        self.label = label
        self.absorbed: list[tuple[bytes, bytes]] = []

    def append(self, tag: bytes, data: bytes) -> None:
        self.absorbed.append((tag, data))

    def append_point(self, tag: bytes, P) -> None:
        self.append(tag, encode_point(P))

    def append_scalar(self, tag: bytes, x: int) -> None:
        self.append(tag, scalar_to_bytes(x))

    def append_int(self, tag: bytes, n: int) -> None:
        self.append(tag, str(n).encode())

    def copy(self) -> Transcript:
        t = Transcript(self.label)
        t.absorbed = list(self.absorbed)
        return t

    def challenge(self) -> int:
        return challenge(self)


def challenge(transcript: Transcript) -> int:
    if not transcript.absorbed:
        raise ValueError("empty transcript")
    h = hashlib.sha512()
    h.update(frame(b"privchain/transcript/v1", transcript.label))
    for tag, data in transcript.absorbed:
        h.update(frame(tag, data))
    return int.from_bytes(h.digest(), "big") % ORDER
