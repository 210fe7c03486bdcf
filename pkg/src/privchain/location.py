"""Location proofs: a device-signed committed grid cell shown to lie in a region.

A trusted GPS device commits to the easting and northing grid indices of a
reading and signs both commitments together with its zone, hemisphere,
device id and timestamp. The seller (who receives the openings from the
device) proves each axis lies inside the region rectangle with two
one-sided range proofs per axis, then signs the whole object.

Wire layout of ``LocationProof.to_bytes`` (framed, see ``_encoding``)::

    commitment_x | commitment_y | zone | hemisphere | device_id | timestamp
    | device_signature | lower_x | upper_x | lower_y | upper_y
    | seller_public_key | seller_signature
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from privchain._encoding import DecodeError, frame, sha256, unframe
from privchain.geo import GeoCoord, GridIndex, Region, RegionRegistry, grid_cell, region_contains
from privchain.group import Commitment, Opening, PedersenParams, commit, random_scalar
from privchain.identity import Identity, verify_signature
from privchain.randomness import system_random
from privchain.zkrp import (
    ProvingKey,
    RangeProof,
    Side,
    VerificationKey,
    check_bounds,
    digits_needed,
    prove_bound,
)

_DEVICE_LABEL = b"privchain/gps-reading/v1"
_SELLER_LABEL = b"privchain/location-proof/v1"


class OutOfRegion(ValueError):
    pass


class BadDeviceSignature(ValueError):
    pass


class Reason(str, enum.Enum):
    MALFORMED = "malformed"
    BAD_SELLER_SIGNATURE = "bad-seller-signature"
    UNTRUSTED_DEVICE = "untrusted-device"
    BAD_DEVICE_SIGNATURE = "bad-device-signature"
    UNKNOWN_REGION = "unknown-region"
    INCONSISTENT_DIGITS = "inconsistent-digits"
    BAD_RANGE_PROOF = "bad-range-proof"
    SELLER_MISMATCH = "seller-mismatch"
    LINK_MISMATCH = "link-mismatch"


@dataclass(frozen=True)
class NotVerified:
    reason: Reason

    def __bool__(self):
        return False

    def __str__(self):
        return f"not verified ({self.reason.value})"


def _device_message(com_x: Commitment, com_y: Commitment, zone: int, south: bool,
                    device_id: str, timestamp: int) -> bytes:
    return frame(_DEVICE_LABEL, com_x.to_bytes(), com_y.to_bytes(), str(zone).encode(),
                 b"S" if south else b"N", device_id.encode(), str(timestamp).encode())


@dataclass(frozen=True)
class SignedCoordinates:
    """A device reading; the openings travel privately to the farm's owner."""

    commitment_x: Commitment
    commitment_y: Commitment
    zone: int
    south: bool
    device_id: str
    timestamp: int
    device_signature: bytes
    opening_x: Opening = field(repr=False)
    opening_y: Opening = field(repr=False)

    def signed_message(self) -> bytes:
        return _device_message(self.commitment_x, self.commitment_y, self.zone,
                               self.south, self.device_id, self.timestamp)


class GpsDevice:
    """Simulated tamper-proof GPS sensor registered under ``identity``."""

    def __init__(self, identity: Identity, params: PedersenParams):
        self.identity = identity
        self.params = params

    @property
    def device_id(self) -> str:
        return self.identity.name

    def read_cell(self, cell: GridIndex, timestamp: int, rng=system_random) -> SignedCoordinates:
        rx, ry = random_scalar(rng), random_scalar(rng)
        cx = commit(self.params, cell.e10, rx)
        cy = commit(self.params, cell.n10, ry)
        msg = _device_message(cx, cy, cell.zone, cell.south, self.device_id, timestamp)
        return SignedCoordinates(cx, cy, cell.zone, cell.south, self.device_id, timestamp,
                                 self.identity.sign(msg), Opening(cell.e10, rx), Opening(cell.n10, ry))

    def read(self, coord: GeoCoord, timestamp: int, rng=system_random) -> SignedCoordinates:
        return self.read_cell(grid_cell(coord), timestamp, rng)


@dataclass(frozen=True)
class LocationProof:
    commitment_x: Commitment
    commitment_y: Commitment
    zone: int
    south: bool
    device_id: str
    timestamp: int
    device_signature: bytes
    lower_x: RangeProof
    upper_x: RangeProof
    lower_y: RangeProof
    upper_y: RangeProof
    seller_public_key: bytes
    seller_signature: bytes

    def device_message(self) -> bytes:
        return _device_message(self.commitment_x, self.commitment_y, self.zone,
                               self.south, self.device_id, self.timestamp)

    def _parts(self) -> list[bytes]:
        return [
            self.commitment_x.to_bytes(),
            self.commitment_y.to_bytes(),
            str(self.zone).encode(),
            b"S" if self.south else b"N",
            self.device_id.encode(),
            str(self.timestamp).encode(),
            self.device_signature,
            self.lower_x.to_bytes(),
            self.upper_x.to_bytes(),
            self.lower_y.to_bytes(),
            self.upper_y.to_bytes(),
            self.seller_public_key,
        ]

    def body_bytes(self) -> bytes:
        return frame(_SELLER_LABEL, *self._parts())

    def to_bytes(self) -> bytes:
        return frame(*self._parts(), self.seller_signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> LocationProof:
        parts = unframe(data, 13)
        try:
            zone = int(parts[2].decode("ascii"))
            timestamp = int(parts[5].decode("ascii"))
            device_id = parts[4].decode("utf-8")
        except (UnicodeDecodeError, ValueError):
            raise DecodeError("bad location proof header") from None
        if parts[3] not in (b"N", b"S"):
            raise DecodeError("bad hemisphere flag")
        return cls(
            Commitment.from_bytes(parts[0]),
            Commitment.from_bytes(parts[1]),
            zone,
            parts[3] == b"S",
            device_id,
            timestamp,
            parts[6],
            *(RangeProof.from_bytes(p) for p in parts[7:11]),
            parts[11],
            parts[12],
        )

    def link(self) -> str:
        """Content address under which the proof is stored off-chain."""
        return sha256(self.to_bytes()).hex()

    @property
    def declared_bounds(self) -> tuple:
        return (self.zone, self.south, self.lower_x.offset, self.upper_x.offset,
                self.lower_y.offset, self.upper_y.offset)


def _context(device_message: bytes, axis: bytes) -> bytes:
    return sha256(device_message + axis)


def prove_location(pk: ProvingKey, signed_coords: SignedCoordinates, region: Region,
                   seller: Identity, *, device_public_key: bytes | None = None,
                   rng=system_random) -> LocationProof:
    """Build the location proof for a device reading inside ``region``.

    ``device_public_key``, when given, is used to reject a reading whose
    device signature does not verify before any proving work is done.
    """
    sc = signed_coords
    msg = sc.signed_message()
    if device_public_key is not None and not verify_signature(device_public_key, sc.device_signature, msg):
        raise BadDeviceSignature(f"reading from {sc.device_id!r} is not validly signed")
    cell = GridIndex(sc.zone, sc.south, sc.opening_x.message, sc.opening_y.message)
    if not region_contains(region, cell):
        raise OutOfRegion(f"cell ({cell.e10}, {cell.n10}) is outside region {region.name!r}")

    def axis(value, opening, lo, hi, tag):
        width = digits_needed(hi - lo + 1, pk.base_u)
        ctx = _context(msg, tag)
        return (prove_bound(pk, value, opening.blinding, lo, Side.LOWER, width, context=ctx, rng=rng),
                prove_bound(pk, value, opening.blinding, hi, Side.UPPER, width, context=ctx, rng=rng))

    lower_x, upper_x = axis(cell.e10, sc.opening_x, region.e10_lo, region.e10_hi, b"x")
    lower_y, upper_y = axis(cell.n10, sc.opening_y, region.n10_lo, region.n10_hi, b"y")
    unsigned = LocationProof(sc.commitment_x, sc.commitment_y, sc.zone, sc.south, sc.device_id,
                             sc.timestamp, sc.device_signature, lower_x, upper_x, lower_y, upper_y,
                             seller.public_key, b"")
    return _sign(unsigned, seller)


def _sign(proof: LocationProof, seller: Identity) -> LocationProof:
    return replace(proof, seller_public_key=seller.public_key,
                   seller_signature=seller.sign(proof.body_bytes()))


_RANGE_REASONS = {
    "malformed": Reason.MALFORMED,
    "inconsistent-digits": Reason.INCONSISTENT_DIGITS,
    "challenge": Reason.BAD_RANGE_PROOF,
    "digit-proof": Reason.BAD_RANGE_PROOF,
}


def verify_location(vk: VerificationKey, registry: RegionRegistry, proof: LocationProof,
                    devices, *, rng=system_random) -> str | NotVerified:
    """Return the region name the proof attests to, or :class:`NotVerified`.

    ``devices`` maps trusted device ids to their Ed25519 public keys; ``rng``
    supplies the verifier's batching weights.
    """
    try:
        body = proof.body_bytes()
        device_msg = proof.device_message()
    except (AttributeError, TypeError, ValueError, OverflowError):
        return NotVerified(Reason.MALFORMED)
    if not verify_signature(proof.seller_public_key, proof.seller_signature, body):
        return NotVerified(Reason.BAD_SELLER_SIGNATURE)
    device_key = devices.get(proof.device_id)
    if device_key is None:
        return NotVerified(Reason.UNTRUSTED_DEVICE)
    if not verify_signature(device_key, proof.device_signature, device_msg):
        return NotVerified(Reason.BAD_DEVICE_SIGNATURE)

    region = registry.find_by_bounds(*proof.declared_bounds)
    if region is None:
        return NotVerified(Reason.UNKNOWN_REGION)

    checks = [
        (proof.commitment_x, proof.lower_x, Side.LOWER, b"x", region.e10_lo, region.e10_hi),
        (proof.commitment_x, proof.upper_x, Side.UPPER, b"x", region.e10_lo, region.e10_hi),
        (proof.commitment_y, proof.lower_y, Side.LOWER, b"y", region.n10_lo, region.n10_hi),
        (proof.commitment_y, proof.upper_y, Side.UPPER, b"y", region.n10_lo, region.n10_hi),
    ]
    for com, rp, side, tag, lo, hi in checks:
        if rp.side != side or rp.width_digits != digits_needed(hi - lo + 1, vk.base_u):
            return NotVerified(Reason.MALFORMED)
    failures = check_bounds(vk, [(com, rp, _context(device_msg, tag))
                                 for com, rp, _, tag, _, _ in checks], rng=rng)
    for failure in failures:
        if failure is not None:
            return NotVerified(_RANGE_REASONS[failure])
    return region.name
