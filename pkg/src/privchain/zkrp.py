"""Signature-based zero-knowledge range and set-membership proofs.

A trusted setup signs every admissible digit ``0..u-1`` with a Boneh-Boyen
key ``x`` and publishes ``Y = g2^x`` together with the signatures ``A_i``.
To show a committed value lies in ``[0, u^w)`` the prover splits it into
``w`` base-``u`` digits, commits to each digit, blinds the signature of each
digit and proves in zero knowledge that

* ``C_j = g^{d_j} h^{r_j}`` (commitment relation), and
* ``e(V_j, Y) = e(V_j, g2)^{-d_j} e(g1, g2)^{v_j}`` (pairing relation),

for the same ``d_j``. All digits share one Fiat-Shamir challenge. The
verifier finally checks that ``prod C_j^{u^j}`` equals the target
commitment. An interval ``[lo, hi]`` is covered by two such one-sided
proofs, on ``delta - lo`` and on ``hi - delta``.

Proof layout (``RangeProof.to_bytes``), all integers big-endian::

    side (1 byte: 0 lower, 1 upper) | offset (32, two's complement)
    | width (2) | challenge (32)
    | width x [ C_j (49) | V_j (49) | a_com (49) | a_pair (384)
                | z_digit (32) | z_blind (32) | z_exp (32) ]

so the length depends on the width only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

from petrelic.multiplicative.pairing import G1Element, G2Element

from privchain._encoding import DecodeError, frame, unframe
from privchain.group import (
    G1_GEN,
    G1_LEN,
    G2_GEN,
    GT_GEN,
    GT_LEN,
    ORDER,
    SCALAR_LEN,
    CodecError,
    Commitment,
    DegenerateIndex,
    PedersenParams,
    Transcript,
    bb_public_key,
    bb_sign,
    bb_verify,
    commit,
    decode_g1,
    decode_g2,
    decode_gt,
    encode_point,
    hash_to_scalar,
    pedersen_setup,
    random_scalar,
    scalar_from_bytes,
    scalar_to_bytes,
)
from privchain.randomness import system_random

__all__ = [
    "InvalidParameter",
    "OutOfRange",
    "ProvingKey",
    "VerificationKey",
    "DigitProof",
    "RangeProof",
    "IntervalProof",
    "Side",
    "zkrp_setup",
    "decompose",
    "recompose",
    "digits_needed",
    "prove_range",
    "verify_range",
    "prove_bound",
    "verify_bound",
    "check_bound",
    "SetMembershipKey",
    "SetVerificationKey",
    "MembershipProof",
    "setup_set_membership",
    "prove_membership",
    "verify_membership",
    "save_keys",
    "load_keys",
]

PEDERSEN_SEED = b"privchain-v1"
_RANGE_LABEL = b"privchain/range-proof/v1"
_MEMBERSHIP_LABEL = b"privchain/set-membership/v1"


class InvalidParameter(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class Side(IntEnum):
    LOWER = 0
    UPPER = 1


@dataclass(frozen=True)
class VerificationKey:
    params: PedersenParams
    Y: G2Element
    base_u: int
    max_digits_l: int

    def to_bytes(self) -> bytes:
        return frame(
            self.params.to_bytes(),
            encode_point(self.Y),
            str(self.base_u).encode(),
            str(self.max_digits_l).encode(),
        )


@dataclass(frozen=True)
class ProvingKey:
    params: PedersenParams
    Y: G2Element
    digit_signatures: tuple[G1Element, ...]
    base_u: int
    max_digits_l: int

    @property
    def verification_key(self) -> VerificationKey:
        return VerificationKey(self.params, self.Y, self.base_u, self.max_digits_l)


def _admin_secret(base_u: int, seed: bytes) -> int:
    counter = 0
    while True:
        x = hash_to_scalar(b"privchain/zkrp-admin/v1", seed, str(counter).encode())
        # every digit (and every index a set may use) needs x + i != 0
        if x and all((x + i) % ORDER for i in range(base_u)):
            return x
        counter += 1  # pragma: no cover


def zkrp_setup(base_u: int, max_digits_l: int, admin_secret_seed: bytes,
               params: PedersenParams | None = None) -> tuple[ProvingKey, VerificationKey]:
    """Trusted setup: derive the admin key, sign every digit, forget the key."""
    if not 2 <= base_u <= 256:
        raise InvalidParameter(f"base_u must be in [2, 256], got {base_u}")
    if not 1 <= max_digits_l <= 64:
        raise InvalidParameter(f"max_digits_l must be in [1, 64], got {max_digits_l}")
    if params is None:
        params = pedersen_setup(PEDERSEN_SEED)
    x = _admin_secret(base_u, admin_secret_seed)
    Y = bb_public_key(x)
    sigs = tuple(bb_sign(x, i) for i in range(base_u))
    del x
    pk = ProvingKey(params, Y, sigs, base_u, max_digits_l)
    return pk, pk.verification_key


# -- base-u digits -------------------------------------------------------------

def decompose(delta: int, base_u: int, digits_l: int) -> list[int]:
    """Little-endian base-``u`` digits of ``delta``, padded to ``digits_l``."""
    if delta < 0 or delta >= base_u**digits_l:
        raise OutOfRange(f"{delta} not in [0, {base_u}^{digits_l})")
    digits = []
    for _ in range(digits_l):
        delta, d = divmod(delta, base_u)
        digits.append(d)
    return digits


def recompose(digits, base_u: int) -> int:
    return sum(d * base_u**j for j, d in enumerate(digits))


def digits_needed(width: int, base_u: int) -> int:
    """Smallest ``l >= 1`` with ``base_u**l >= width``."""
    if width < 1:
        raise InvalidParameter("interval is empty")
    l, span = 1, base_u
    while span < width:
        l += 1
        span *= base_u
    return l


def _width_ok(base_u: int, width: int, max_digits_l: int) -> bool:
    # both one-sided values must stay far from wrap-around mod the order
    return 1 <= width <= max_digits_l and 2 * base_u**width < ORDER


# -- digit proofs --------------------------------------------------------------

@dataclass(frozen=True)
class DigitProof:
    blinded_signature: G1Element
    commitment_announcement: G1Element
    pairing_announcement: object  # GTElement
    response_digit: int
    response_blinding: int
    response_exponent: int

    def to_bytes(self) -> bytes:
        return b"".join([
            encode_point(self.blinded_signature),
            encode_point(self.commitment_announcement),
            encode_point(self.pairing_announcement),
            scalar_to_bytes(self.response_digit),
            scalar_to_bytes(self.response_blinding),
            scalar_to_bytes(self.response_exponent),
        ])

    @classmethod
    def from_bytes(cls, data: bytes) -> DigitProof:
        if len(data) != DIGIT_PROOF_LEN:
            raise CodecError("bad digit proof length")
        v, data = data[:G1_LEN], data[G1_LEN:]
        a, data = data[:G1_LEN], data[G1_LEN:]
        t, data = data[:GT_LEN], data[GT_LEN:]
        zs = [scalar_from_bytes(data[i:i + SCALAR_LEN]) for i in range(0, 3 * SCALAR_LEN, SCALAR_LEN)]
        return cls(decode_g1(v), decode_g1(a), decode_gt(t), *zs)


DIGIT_PROOF_LEN = 2 * G1_LEN + GT_LEN + 3 * SCALAR_LEN


def _digit_announce(pk_params, V, rng):
    s, t, m = (random_scalar(rng) for _ in range(3))
    a_com = pk_params.g ** s * pk_params.h ** t
    # e(V, g2)^{-s} e(g1, g2)^m computed with a single pairing
    a_pair = (V ** ((-s) % ORDER) * G1_GEN ** m).pair(G2_GEN)
    return (s, t, m), a_com, a_pair


def _digit_check(p: PedersenParams, Y_c: G2Element, C: Commitment, proof: DigitProof,
                 c: int) -> bool:
    """Check one digit against the shared challenge; ``Y_c`` is ``Y ** c``."""
    V = proof.blinded_signature
    if V.is_neutral_element():
        return False
    lhs = C.element ** c * p.g ** proof.response_digit * p.h ** proof.response_blinding
    if lhs != proof.commitment_announcement:
        return False
    # e(V, Y)^c e(V, g2)^{-z_d} e(g1, g2)^{z_v} with one pairing
    right = V.pair(Y_c * G2_GEN ** ((-proof.response_digit) % ORDER)) * GT_GEN ** proof.response_exponent
    return right == proof.pairing_announcement


# -- one-sided proofs ----------------------------------------------------------

@dataclass(frozen=True)
class RangeProof:
    """One-sided proof: the value ``value - offset`` (lower side) or
    ``offset - value`` (upper side) lies in ``[0, base_u ** width_digits)``."""

    digit_commitments: tuple[Commitment, ...]
    digit_proofs: tuple[DigitProof, ...]
    challenge: int
    offset: int
    width_digits: int
    side: Side = Side.LOWER

    def to_bytes(self) -> bytes:
        head = bytes([int(self.side)])
        head += self.offset.to_bytes(32, "big", signed=True)
        head += self.width_digits.to_bytes(2, "big")
        head += scalar_to_bytes(self.challenge)
        body = b"".join(
            C.to_bytes() + dp.to_bytes()
            for C, dp in zip(self.digit_commitments, self.digit_proofs, strict=True)
        )
        return head + body

    @classmethod
    def from_bytes(cls, data: bytes) -> RangeProof:
        if len(data) < 67:
            raise CodecError("range proof too short")
        if data[0] not in (0, 1):
            raise CodecError("bad side byte")
        side = Side(data[0])
        offset = int.from_bytes(data[1:33], "big", signed=True)
        width = int.from_bytes(data[33:35], "big")
        c = scalar_from_bytes(data[35:67])
        body = data[67:]
        step = G1_LEN + DIGIT_PROOF_LEN
        if len(body) != width * step:
            raise CodecError("range proof length does not match width")
        coms, proofs = [], []
        for i in range(0, len(body), step):
            coms.append(Commitment.from_bytes(body[i:i + G1_LEN]))
            proofs.append(DigitProof.from_bytes(body[i + G1_LEN:i + step]))
        return cls(tuple(coms), tuple(proofs), c, offset, width, side)


def _target(params: PedersenParams, com: Commitment, side: Side, offset: int) -> G1Element:
    if side is Side.LOWER:
        return com.element * params.g ** ((-offset) % ORDER)
    return params.g ** (offset % ORDER) * com.element.inverse()


def _range_transcript(vk, side, offset, width, target, context, coms, proofs) -> Transcript:
    t = Transcript(_RANGE_LABEL)
    t.append(b"vk", vk.to_bytes())
    t.append(b"context", context)
    t.append_int(b"side", int(side))
    t.append_int(b"offset", offset)
    t.append_int(b"width", width)
    t.append_point(b"target", target)
    for C, (V, a_com, a_pair) in zip(coms, proofs, strict=True):
        t.append(b"C", C.to_bytes())
        t.append_point(b"V", V)
        t.append_point(b"a_com", a_com)
        t.append_point(b"a_pair", a_pair)
    return t


def _prove_digits(pk: ProvingKey, value: int, blinding: int, width: int, side: Side,
                  offset: int, target, context: bytes, rng,
                  digit_blindings=None) -> RangeProof:
    u = pk.base_u
    digits = decompose(value, u, width)
    if digit_blindings is None:
        rs = [0] + [random_scalar(rng) for _ in range(width - 1)]
        rs[0] = (blinding - sum(r * u**j for j, r in enumerate(rs))) % ORDER
    else:
        rs = list(digit_blindings)
    coms, secrets_, announced = [], [], []
    for d, r in zip(digits, rs):
        v = random_scalar(rng, nonzero=True)
        V = pk.digit_signatures[d] ** v
        nonces, a_com, a_pair = _digit_announce(pk.params, V, rng)
        coms.append(commit(pk.params, d, r))
        secrets_.append((d, r, v, nonces))
        announced.append((V, a_com, a_pair))
    c = _range_transcript(pk.verification_key, side, offset, width, target,
                          context, coms, announced).challenge()
    proofs = []
    for (d, r, v, (s, t, m)), (V, a_com, a_pair) in zip(secrets_, announced):
        proofs.append(DigitProof(
            V, a_com, a_pair,
            (s - c * d) % ORDER,
            (t - c * r) % ORDER,
            (m - c * v) % ORDER,
        ))
    return RangeProof(tuple(coms), tuple(proofs), c, offset, width, side)


def prove_bound(pk: ProvingKey, delta: int, blinding: int, bound: int, side: Side,
                width: int, *, context: bytes = b"", rng=system_random) -> RangeProof:
    """Prove ``delta >= bound`` (lower) or ``delta <= bound`` (upper) for the
    commitment ``g^delta h^blinding``, with the gap below ``u**width``."""
    side = Side(side)
    if not _width_ok(pk.base_u, width, pk.max_digits_l):
        raise InvalidParameter(f"unsupported width {width}")
    if side is Side.LOWER:
        value, r = delta - bound, blinding
    else:
        value, r = bound - delta, -blinding
    if not 0 <= value < pk.base_u**width:
        raise OutOfRange(f"{delta} violates {side.name.lower()} bound {bound}")
    com = commit(pk.params, delta, blinding)
    target = _target(pk.params, com, side, bound)
    return _prove_digits(pk, value, r % ORDER, width, side, bound, target, context, rng)


def _precheck(vk: VerificationKey, com: Commitment, proof: RangeProof, context: bytes) -> str | None:
    """Everything except the per-digit sigma equations."""
    side = Side(proof.side)
    width = proof.width_digits
    if not _width_ok(vk.base_u, width, vk.max_digits_l):
        return "malformed"
    if len(proof.digit_commitments) != width or len(proof.digit_proofs) != width:
        return "malformed"
    if not 0 <= proof.challenge < ORDER:
        return "malformed"
    for dp in proof.digit_proofs:
        if not all(0 <= z < ORDER for z in (dp.response_digit, dp.response_blinding,
                                            dp.response_exponent)):
            return "malformed"
        if dp.blinded_signature.is_neutral_element():
            return "digit-proof"
    target = _target(vk.params, com, side, proof.offset)
    product = None
    for j, C in enumerate(proof.digit_commitments):
        term = C.element ** (vk.base_u**j % ORDER)
        product = term if product is None else product * term
    if product != target:
        return "inconsistent-digits"
    announced = [(dp.blinded_signature, dp.commitment_announcement, dp.pairing_announcement)
                 for dp in proof.digit_proofs]
    t = _range_transcript(vk, side, proof.offset, width, target, context,
                          proof.digit_commitments, announced)
    if t.challenge() != proof.challenge:
        return "challenge"
    return None


def check_bound(vk: VerificationKey, com: Commitment, proof: RangeProof,
                *, context: bytes = b"") -> str | None:
    """Return ``None`` when the proof verifies, else a short failure reason.

    Reasons: ``"malformed"``, ``"inconsistent-digits"``, ``"challenge"``,
    ``"digit-proof"``.
    """
    try:
        failure = _precheck(vk, com, proof, context)
        if failure is not None:
            return failure
        Y_c = vk.Y ** proof.challenge
        for C, dp in zip(proof.digit_commitments, proof.digit_proofs):
            if not _digit_check(vk.params, Y_c, C, dp, proof.challenge):
                return "digit-proof"
    except (TypeError, ValueError, AttributeError):
        return "malformed"
    return None


def _batch_digits(vk: VerificationKey, proofs, rng) -> bool:
    """Small-exponent batch test of every digit equation in ``proofs``.

    Each digit equation is raised to an independent random 128-bit weight
    and the products are compared, so a single false equation survives
    with probability about 2**-128. The pairing side collapses to two
    pairings because the challenge can be moved into the G1 argument.
    """
    p = vk.params
    sum_zd = sum_zr = sum_zv = 0
    acc_com = None
    v_y = v_g2 = None
    a_pair_acc = None
    for proof in proofs:
        c = proof.challenge
        for C, dp in zip(proof.digit_commitments, proof.digit_proofs):
            rho = rng.randbelow(2**128) + 1
            sum_zd += rho * dp.response_digit
            sum_zr += rho * dp.response_blinding
            sum_zv += rho * dp.response_exponent
            term = C.element ** (rho * c % ORDER) * dp.commitment_announcement ** (-rho % ORDER)
            acc_com = term if acc_com is None else acc_com * term
            V = dp.blinded_signature
            vy = V ** (rho * c % ORDER)
            vg = V ** (-rho * dp.response_digit % ORDER)
            v_y = vy if v_y is None else v_y * vy
            v_g2 = vg if v_g2 is None else v_g2 * vg
            ap = dp.pairing_announcement ** rho
            a_pair_acc = ap if a_pair_acc is None else a_pair_acc * ap
    if acc_com is None:
        return True
    if not (acc_com * p.g ** (sum_zd % ORDER) * p.h ** (sum_zr % ORDER)).is_neutral_element():
        return False
    lhs = v_y.pair(vk.Y) * v_g2.pair(G2_GEN) * GT_GEN ** (sum_zv % ORDER)
    return lhs == a_pair_acc


def check_bounds(vk: VerificationKey, items, *, rng=system_random) -> list[str | None]:
    """Check several ``(commitment, proof, context)`` triples at once.

    Returns one entry per item, as :func:`check_bound` would. The digit
    equations of all structurally sound items are verified in one batch;
    only if the batch fails are they re-checked one by one to attribute
    the failure.
    """
    items = list(items)
    results: list[str | None] = []
    for com, proof, context in items:
        try:
            results.append(_precheck(vk, com, proof, context))
        except (TypeError, ValueError, AttributeError):
            results.append("malformed")
    pending = [i for i, r in enumerate(results) if r is None]
    try:
        if _batch_digits(vk, [items[i][1] for i in pending], rng):
            return results
    except (TypeError, ValueError, AttributeError):
        pass
    for i in pending:
        com, proof, context = items[i]
        results[i] = check_bound(vk, com, proof, context=context)
    return results


def verify_bound(vk: VerificationKey, com: Commitment, proof: RangeProof,
                 *, context: bytes = b"") -> bool:
    return check_bound(vk, com, proof, context=context) is None


# -- intervals -----------------------------------------------------------------

@dataclass(frozen=True)
class IntervalProof:
    lower: RangeProof
    upper: RangeProof

    def to_bytes(self) -> bytes:
        return frame(self.lower.to_bytes(), self.upper.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> IntervalProof:
        lo, hi = unframe(data, 2)
        return cls(RangeProof.from_bytes(lo), RangeProof.from_bytes(hi))


def prove_range(pk: ProvingKey, delta: int, blinding: int, lo: int, hi: int,
                *, context: bytes = b"", rng=system_random) -> tuple[Commitment, IntervalProof]:
    """Commit to ``delta`` and prove ``lo <= delta <= hi``.

    Refuses (``OutOfRange``) before producing anything when ``delta`` is
    outside the interval.
    """
    if hi < lo:
        raise InvalidParameter("empty interval")
    width = digits_needed(hi - lo + 1, pk.base_u)
    if not _width_ok(pk.base_u, width, pk.max_digits_l):
        raise InvalidParameter(f"interval [{lo}, {hi}] too wide for u={pk.base_u}, l={pk.max_digits_l}")
    if not lo <= delta <= hi:
        raise OutOfRange(f"{delta} not in [{lo}, {hi}]")
    com = commit(pk.params, delta, blinding)
    lower = prove_bound(pk, delta, blinding, lo, Side.LOWER, width, context=context, rng=rng)
    upper = prove_bound(pk, delta, blinding, hi, Side.UPPER, width, context=context, rng=rng)
    return com, IntervalProof(lower, upper)


def check_range(vk: VerificationKey, com: Commitment, lo: int, hi: int,
                proof: IntervalProof, *, context: bytes = b"") -> str | None:
    if hi < lo:
        return "malformed"
    width = digits_needed(hi - lo + 1, vk.base_u)
    lower, upper = proof.lower, proof.upper
    if (lower.side, lower.offset, lower.width_digits) != (Side.LOWER, lo, width):
        return "malformed"
    if (upper.side, upper.offset, upper.width_digits) != (Side.UPPER, hi, width):
        return "malformed"
    return (check_bound(vk, com, lower, context=context)
            or check_bound(vk, com, upper, context=context))


def verify_range(vk: VerificationKey, com: Commitment, lo: int, hi: int,
                 proof: IntervalProof, *, context: bytes = b"") -> bool:
    return check_range(vk, com, lo, hi, proof, context=context) is None


# -- set membership ------------------------------------------------------------

@dataclass(frozen=True)
class SetVerificationKey:
    params: PedersenParams
    Y: G2Element
    members: frozenset

    def to_bytes(self) -> bytes:
        return frame(self.params.to_bytes(), encode_point(self.Y),
                     *(str(m).encode() for m in sorted(self.members)))


@dataclass(frozen=True)
class SetMembershipKey:
    params: PedersenParams
    Y: G2Element
    signatures: dict

    @property
    def verification_key(self) -> SetVerificationKey:
        return SetVerificationKey(self.params, self.Y, frozenset(self.signatures))


@dataclass(frozen=True)
class MembershipProof:
    digit_proof: DigitProof
    challenge: int


def setup_set_membership(members, admin_secret_seed: bytes,
                         params: PedersenParams | None = None):
    """Sign an explicit set of integers (e.g. registered farm cells)."""
    members = sorted(set(int(m) for m in members))
    if not members:
        raise InvalidParameter("empty set")
    if params is None:
        params = pedersen_setup(PEDERSEN_SEED)
    x = hash_to_scalar(b"privchain/zkrp-set-admin/v1", admin_secret_seed)
    try:
        sigs = {m: bb_sign(x, m) for m in members}
    except DegenerateIndex as exc:  # pragma: no cover - probability ~ |set| / 2^255
        raise InvalidParameter(str(exc)) from None
    key = SetMembershipKey(params, bb_public_key(x), sigs)
    return key, key.verification_key


def _membership_transcript(vk, com, context, V, a_com, a_pair):
    t = Transcript(_MEMBERSHIP_LABEL)
    t.append(b"vk", vk.to_bytes())
    t.append(b"context", context)
    t.append(b"com", com.to_bytes())
    t.append_point(b"V", V)
    t.append_point(b"a_com", a_com)
    t.append_point(b"a_pair", a_pair)
    return t


def prove_membership(key: SetMembershipKey, value: int, blinding: int,
                     *, context: bytes = b"", rng=system_random) -> tuple[Commitment, MembershipProof]:
    if value not in key.signatures:
        raise OutOfRange(f"{value} is not a member of the signed set")
    com = commit(key.params, value, blinding)
    v = random_scalar(rng, nonzero=True)
    V = key.signatures[value] ** v
    (s, t, m), a_com, a_pair = _digit_announce(key.params, V, rng)
    c = _membership_transcript(key.verification_key, com, context, V, a_com, a_pair).challenge()
    dp = DigitProof(V, a_com, a_pair, (s - c * value) % ORDER,
                    (t - c * blinding) % ORDER, (m - c * v) % ORDER)
    return com, MembershipProof(dp, c)


def verify_membership(vk: SetVerificationKey, com: Commitment, proof: MembershipProof,
                      *, context: bytes = b"") -> bool:
    dp = proof.digit_proof
    t = _membership_transcript(vk, com, context, dp.blinded_signature,
                               dp.commitment_announcement, dp.pairing_announcement)
    if t.challenge() != proof.challenge:
        return False
    return _digit_check(vk.params, vk.Y ** proof.challenge, com, dp, proof.challenge)


# -- key files -----------------------------------------------------------------

def save_keys(path, pk: ProvingKey) -> None:
    """Write the key pair as JSON: hex-encoded group elements, no secrets."""
    doc = {
        "format": "privchain-zkrp-keys/1",
        "base_u": pk.base_u,
        "max_digits_l": pk.max_digits_l,
        "pedersen": pk.params.to_bytes().hex(),
        "Y": encode_point(pk.Y).hex(),
        "digit_signatures": [encode_point(a).hex() for a in pk.digit_signatures],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_keys(path, *, check: bool = True) -> tuple[ProvingKey, VerificationKey]:
    try:
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != "privchain-zkrp-keys/1":
            raise CodecError("unknown key file format")
        params = PedersenParams.from_bytes(bytes.fromhex(doc["pedersen"]))
        Y = decode_g2(bytes.fromhex(doc["Y"]))
        sigs = tuple(decode_g1(bytes.fromhex(s)) for s in doc["digit_signatures"])
        u, l = int(doc["base_u"]), int(doc["max_digits_l"])
    except (KeyError, ValueError, TypeError) as exc:
        raise DecodeError(f"{path}: {exc}") from None
    if len(sigs) != u:
        raise DecodeError(f"{path}: expected {u} digit signatures")
    if check and not all(bb_verify(Y, i, a) for i, a in enumerate(sigs)):
        raise DecodeError(f"{path}: digit signature does not verify")
    pk = ProvingKey(params, Y, sigs, u, l)
    return pk, pk.verification_key
