"""Transient ECDSA P-256 key material: deterministic derivation from a seed
digest, deterministic signing, credential ID construction, and zeroization.

Curve arithmetic is delegated to the `cryptography` package (OpenSSL); this
module owns the seed-to-scalar map, the fixed-width signature encoding, the
credential format, and the lifetime of secret bytes. Private scalars live in
a wipeable buffer and the backing key object is rebuilt per operation, so a
zeroized KeyPair retains nothing recoverable.
"""

from __future__ import annotations

from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .errors import KeyZeroized, MalformedCredential, MalformedPoint, NotBidoCredential
from .quantize import VseedDigest

# NIST P-256 group order
CURVE = ec.SECP256R1()
GROUP_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551

SCALAR_LENGTH = 32
PUBLIC_POINT_LENGTH = 65
SIGNATURE_LENGTH = 64

CRED_ID_PREFIX = b"BIDO1:"
CRED_ID_LENGTH = len(CRED_ID_PREFIX) + SIGNATURE_LENGTH

# fixed, non-secret verification string; its signature under the enrolled
# key is embedded in the credential ID and re-checked frame-by-frame
VERIFICATION_CONSTANT = b"BIDO-VERIFICATION-CONSTANT-V1"

_DETERMINISTIC_SHA256 = ec.ECDSA(hashes.SHA256(), deterministic_signing=True)
_SHA256 = ec.ECDSA(hashes.SHA256())


@dataclass(frozen=True)
class Signature:
    """ECDSA signature as raw scalars; encodes to fixed 64-byte r||s."""

    r: int
    s: int

    def to_bytes(self) -> bytes:
        return self.r.to_bytes(32, "big") + self.s.to_bytes(32, "big")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Signature":
        if len(raw) != SIGNATURE_LENGTH:
            raise ValueError(f"signature must be {SIGNATURE_LENGTH} bytes, got {len(raw)}")
        return cls(int.from_bytes(raw[:32], "big"), int.from_bytes(raw[32:], "big"))


class KeyPair:
    """P-256 keypair with a wipeable private scalar.

    Construct via keypair_from_seed (or from_scalar in tests). After
    zeroize() the scalar buffer reads all-zero and signing raises
    KeyZeroized; zeroize is idempotent.
    """

    def __init__(self, scalar: int, public_point: bytes):
        self._scalar_bytes = bytearray(scalar.to_bytes(SCALAR_LENGTH, "big"))
        self.public_point = public_point
        self._zeroized = False

    @classmethod
    def from_scalar(cls, scalar: int) -> "KeyPair":
        if not 1 <= scalar < GROUP_ORDER:
            raise ValueError("scalar out of range [1, n-1]")
        priv = ec.derive_private_key(scalar, CURVE)
        pub = priv.public_key().public_bytes(Encoding.X962, PublicFormat.UncompressedPoint)
        return cls(scalar, pub)

    @property
    def private_scalar(self) -> bytes:
        """Current scalar buffer contents (all-zero after zeroize)."""
        return bytes(self._scalar_bytes)

    @property
    def zeroized(self) -> bool:
        return self._zeroized

    def _scalar_int(self) -> int:
        if self._zeroized:
            raise KeyZeroized("private scalar was wiped")
        return int.from_bytes(self._scalar_bytes, "big")

    def zeroize(self) -> None:
        for i in range(len(self._scalar_bytes)):
            self._scalar_bytes[i] = 0
        self._zeroized = True


def keypair_from_seed(seed: VseedDigest) -> KeyPair:
    """Deterministic keypair: scalar = (seed mod (n-1)) + 1.

    Total and uniform to within negligible bias; equal seeds always yield
    equal keypairs, which is what makes re-derivation at authentication
    possible without any stored secret.
    """
    seed_int = int.from_bytes(seed.snapshot(), "big")
    scalar = (seed_int % (GROUP_ORDER - 1)) + 1
    return KeyPair.from_scalar(scalar)


def sign(key: KeyPair, message: bytes) -> Signature:
    """ECDSA over SHA-256(message) with an RFC 6979 deterministic nonce.

    The s scalar is normalized to the low half of the group order so
    repeated signatures are byte-identical.
    """
    scalar = key._scalar_int()
    priv = ec.derive_private_key(scalar, CURVE)
    der = priv.sign(message, _DETERMINISTIC_SHA256)
    r, s = decode_dss_signature(der)
    if s > GROUP_ORDER // 2:
        s = GROUP_ORDER - s
    return Signature(r, s)


def verify(public_point: bytes, message: bytes, sig: Signature) -> bool:
    """Standard ECDSA verification; tolerant of high-s encodings.

    Raises MalformedPoint for off-curve or mis-encoded public keys; all
    other failures are a False result, not an error.
    """
    try:
        pub = ec.EllipticCurvePublicKey.from_encoded_point(CURVE, public_point)
    except ValueError as exc:
        raise MalformedPoint(str(exc)) from exc
    if not (1 <= sig.r < GROUP_ORDER and 1 <= sig.s < GROUP_ORDER):
        return False
    try:
        pub.verify(encode_dss_signature(sig.r, sig.s), message, _SHA256)
    except InvalidSignature:
        return False
    return True


@dataclass(frozen=True)
class CredId:
    """Credential identifier: fixed prefix plus the signed verification
    constant. Neither part is secret."""

    signed_vconst: Signature

    @property
    def wire(self) -> bytes:
        return CRED_ID_PREFIX + self.signed_vconst.to_bytes()


def make_cred_id(key: KeyPair) -> CredId:
    """Sign the verification constant; deterministic per keypair."""
    return CredId(signed_vconst=sign(key, VERIFICATION_CONSTANT))


def split_cred_id(cred: bytes) -> Signature:
    """Strip the fixed prefix and recover the embedded signature.

    NotBidoCredential marks an allowCredentials entry that belongs to some
    other authenticator; MalformedCredential a prefixed entry of the wrong
    length.
    """
    if not cred.startswith(CRED_ID_PREFIX):
        raise NotBidoCredential("credential does not carry the BIDO prefix")
    payload = cred[len(CRED_ID_PREFIX):]
    if len(payload) != SIGNATURE_LENGTH:
        raise MalformedCredential(
            f"expected {SIGNATURE_LENGTH} signature bytes after prefix, got {len(payload)}"
        )
    return Signature.from_bytes(payload)


def zeroize(value) -> None:
    """Wipe the secret bytes of a supported container.

    Handles KeyPair, VseedDigest, QuantizedVector, bytearrays, and
    lists/tuples of any of these. Idempotent; unknown types are a
    TypeError so secrets cannot silently escape the contract.
    """
    if value is None:
        return
    if isinstance(value, bytearray):
        for i in range(len(value)):
            value[i] = 0
        return
    if hasattr(value, "zeroize"):
        value.zeroize()
        return
    if isinstance(value, (list, tuple)):
        for item in value:
            zeroize(item)
        return
    raise TypeError(f"cannot zeroize {type(value).__name__}")
