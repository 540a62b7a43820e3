"""Enrollment and authentication ceremonies plus the mock relying party.

The client side is stateless: a ceremony consumes a frame source, a salt,
and an RP challenge, and every secret it derives (quantized vectors, digest
lists, seed, private scalar) is wiped before it returns. The RP side keeps
only (credential id, public key) records and a single-use challenge table;
check-and-consume of a nonce is atomic under one lock.
"""

from __future__ import annotations

import base64
import enum
import json
import secrets
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .config import PipelineConfig
from .errors import (
    AuthTimeout,
    BadAssertion,
    BadAttestation,
    ChallengeMismatch,
    ChallengeReplayed,
    DuplicateCredential,
    FrameSourceExhausted,
    NoBidoCredential,
    UnknownCredential,
)
from .geometry import LandmarkFrame, Rejection
from .keymat import (
    CRED_ID_LENGTH,
    CRED_ID_PREFIX,
    PUBLIC_POINT_LENGTH,
    VERIFICATION_CONSTANT,
    KeyPair,
    Signature,
    keypair_from_seed,
    make_cred_id,
    sign,
    split_cred_id,
    verify,
    zeroize,
)
from .quantize import ProminentSet, VseedDigest, frame_digest, majority_vote

NONCE_LENGTH = 32
DEFAULT_CHALLENGE_TTL = 120.0


def b64url_encode(raw: bytes) -> str:
    return base64.urlsafe_b64encode(raw).rstrip(b"=").decode("ascii")


def b64url_decode(text: str) -> bytes:
    padded = text + "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(padded.encode("ascii"))


class ChallengePurpose(enum.Enum):
    REGISTRATION = "registration"
    AUTHENTICATION = "authentication"


@dataclass
class Challenge:
    """Single-use RP nonce with a TTL."""

    nonce: bytes
    purpose: ChallengePurpose
    issued_at: float
    ttl_seconds: float = DEFAULT_CHALLENGE_TTL
    consumed: bool = False

    def expired(self, now: float | None = None) -> bool:
        now = time.time() if now is None else now
        return now > self.issued_at + self.ttl_seconds


@dataclass(frozen=True)
class RegistrationMessage:
    """What the client transmits at enrollment.

    auth_data = nonce || credential id wire bytes || public key bytes, and
    attestation is the self-signature over it.
    """

    auth_data: bytes
    attestation: Signature

    def to_json(self) -> str:
        return json.dumps(
            {
                "auth_data": b64url_encode(self.auth_data),
                "attestation": b64url_encode(self.attestation.to_bytes()),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "RegistrationMessage":
        doc = json.loads(text)
        return cls(
            auth_data=b64url_decode(doc["auth_data"]),
            attestation=Signature.from_bytes(b64url_decode(doc["attestation"])),
        )


@dataclass(frozen=True)
class AssertionMessage:
    """What the client transmits at authentication."""

    cred_id: bytes
    signed_challenge: Signature


@dataclass
class CredentialRecord:
    """The only persistent artifact of enrollment."""

    cred_id: bytes
    public_key: bytes
    registered_at: float
    sign_count: int = 0


def parse_auth_data(auth_data: bytes) -> tuple[bytes, bytes, bytes]:
    """Split auth_data into (nonce, cred_id, public_key) by fixed widths."""
    expected = NONCE_LENGTH + CRED_ID_LENGTH + PUBLIC_POINT_LENGTH
    if len(auth_data) != expected:
        raise ValueError(f"auth_data must be {expected} bytes, got {len(auth_data)}")
    nonce = auth_data[:NONCE_LENGTH]
    cred_id = auth_data[NONCE_LENGTH:NONCE_LENGTH + CRED_ID_LENGTH]
    public_key = auth_data[NONCE_LENGTH + CRED_ID_LENGTH:]
    return nonce, cred_id, public_key


# ---------------------------------------------------------------------------
# Client ceremonies
# ---------------------------------------------------------------------------

def _require_usable(challenge: Challenge, purpose: ChallengePurpose) -> None:
    if challenge.purpose is not purpose:
        raise ChallengeMismatch(f"challenge issued for {challenge.purpose.value}")
    if challenge.consumed:
        raise ChallengeReplayed("challenge already consumed")
    if challenge.expired():
        raise ChallengeMismatch("challenge expired")


def collect_enrollment_seed(
    frames: Iterable[LandmarkFrame], salt: str, config: PipelineConfig
) -> VseedDigest:
    """Pull frames until enroll_frames valid digests are collected, then
    majority-vote the seed. Gated frames are skipped, not counted; the
    per-frame digest list is wiped before returning."""
    prominent = ProminentSet.from_config(config)
    digests: list[VseedDigest] = []
    for frame in frames:
        result = frame_digest(frame, salt, prominent, config.q, config.frontality_tolerance_px)
        if isinstance(result, Rejection):
            continue
        digests.append(result)
        if len(digests) >= config.enroll_frames:
            break
    if len(digests) < config.enroll_frames:
        collected = len(digests)
        zeroize(digests)
        raise FrameSourceExhausted(
            f"collected {collected} valid frames, need {config.enroll_frames}"
        )
    vseed = majority_vote(digests)
    zeroize(digests)
    return vseed


def enroll(
    frames: Iterable[LandmarkFrame],
    salt: str,
    challenge: Challenge,
    config: PipelineConfig,
) -> RegistrationMessage:
    """Run the enrollment ceremony over a frame source.

    Collects the majority-vote seed, derives the keypair, and emits the
    self-attested registration message. All secrets (digest list, seed,
    private scalar) are wiped before returning.
    """
    _require_usable(challenge, ChallengePurpose.REGISTRATION)
    vseed = collect_enrollment_seed(frames, salt, config)
    key = keypair_from_seed(vseed)
    try:
        cred = make_cred_id(key)
        auth_data = challenge.nonce + cred.wire + key.public_point
        attestation = sign(key, auth_data)
    finally:
        zeroize(key)
        zeroize(vseed)
    return RegistrationMessage(auth_data=auth_data, attestation=attestation)


def authenticate(
    frames: Iterable[LandmarkFrame],
    salt: str,
    challenge: Challenge,
    allow_credentials: list[bytes],
    config: PipelineConfig,
) -> AssertionMessage:
    """Per-frame key search: derive a candidate keypair from each valid
    frame until one verifies the credential's embedded signature, then sign
    the challenge nonce with it.

    Candidate keys from non-matching frames are wiped before the next
    attempt; the matching key is wiped after signing. Raises AuthTimeout
    after config.auth_max_frames valid frames without a match, or
    FrameSourceExhausted if the source ends first.
    """
    _require_usable(challenge, ChallengePurpose.AUTHENTICATION)
    if not allow_credentials:
        raise NoBidoCredential("allowCredentials is empty")
    cred_id = None
    for entry in allow_credentials:
        if entry.startswith(CRED_ID_PREFIX):
            cred_id = entry
            break
    if cred_id is None:
        raise NoBidoCredential("no allowCredentials entry carries the BIDO prefix")
    signed_vconst = split_cred_id(cred_id)

    prominent = ProminentSet.from_config(config)
    valid_seen = 0
    for frame in frames:
        result = frame_digest(frame, salt, prominent, config.q, config.frontality_tolerance_px)
        if isinstance(result, Rejection):
            continue
        valid_seen += 1
        candidate = keypair_from_seed(result)
        if verify(candidate.public_point, VERIFICATION_CONSTANT, signed_vconst):
            try:
                assertion = sign(candidate, challenge.nonce)
            finally:
                zeroize(candidate)
                zeroize(result)
            return AssertionMessage(cred_id=cred_id, signed_challenge=assertion)
        zeroize(candidate)
        zeroize(result)
        if valid_seen >= config.auth_max_frames:
            raise AuthTimeout(f"no key match within {config.auth_max_frames} valid frames")
    raise FrameSourceExhausted(
        f"frame source ended after {valid_seen} valid frames without a key match"
    )


# ---------------------------------------------------------------------------
# Relying party
# ---------------------------------------------------------------------------

class RelyingParty:
    """Mock RP: challenge lifecycle, credential registry, verification.

    Thread-safe; nonce check-and-consume happens under one lock. When
    constructed with store_path the credential registry persists as a JSON
    file mapping base64url credential ids to records; challenges are always
    ephemeral.
    """

    def __init__(
        self,
        store_path: str | Path | None = None,
        challenge_ttl: float = DEFAULT_CHALLENGE_TTL,
        nonce_source: Callable[[int], bytes] | None = None,
    ):
        self._lock = threading.Lock()
        self._challenges: dict[bytes, Challenge] = {}
        self._credentials: dict[bytes, CredentialRecord] = {}
        self._store_path = Path(store_path) if store_path is not None else None
        self._ttl = challenge_ttl
        self._nonce_source = nonce_source or secrets.token_bytes
        if self._store_path is not None and self._store_path.exists():
            self._load_store()

    # -- challenge lifecycle

    def issue_challenge(self, purpose: ChallengePurpose) -> Challenge:
        nonce = self._nonce_source(NONCE_LENGTH)
        challenge = Challenge(
            nonce=nonce, purpose=purpose, issued_at=time.time(), ttl_seconds=self._ttl
        )
        with self._lock:
            self._challenges[nonce] = challenge
        return challenge

    def _consume_challenge_locked(self, nonce: bytes, purpose: ChallengePurpose) -> None:
        challenge = self._challenges.get(nonce)
        if challenge is None or challenge.purpose is not purpose:
            raise ChallengeMismatch("unknown challenge nonce for this purpose")
        if challenge.consumed:
            raise ChallengeReplayed("challenge nonce already used")
        if challenge.expired():
            raise ChallengeMismatch("challenge expired")
        challenge.consumed = True

    # -- registration

    def register(
        self, msg: RegistrationMessage, challenge_nonce: bytes | None = None
    ) -> CredentialRecord:
        """Validate and store an enrollment.

        The nonce inside auth_data must name an unconsumed registration
        challenge (and match challenge_nonce when the caller supplies one);
        the attestation must verify under the embedded public key.
        """
        try:
            nonce, cred_id, public_key = parse_auth_data(msg.auth_data)
        except ValueError as exc:
            raise BadAttestation(str(exc)) from exc
        if challenge_nonce is not None and nonce != challenge_nonce:
            raise ChallengeMismatch("auth_data nonce does not match the presented challenge")
        if not verify(public_key, msg.auth_data, msg.attestation):
            raise BadAttestation("self-attestation does not verify")
        with self._lock:
            self._consume_challenge_locked(nonce, ChallengePurpose.REGISTRATION)
            if cred_id in self._credentials:
                raise DuplicateCredential("credential id already registered")
            record = CredentialRecord(
                cred_id=cred_id, public_key=public_key, registered_at=time.time()
            )
            self._credentials[cred_id] = record
            self._save_store_locked()
        return record

    # -- authentication

    def allow_credentials(self, cred_id: bytes | None = None) -> list[bytes]:
        with self._lock:
            if cred_id is not None:
                if cred_id not in self._credentials:
                    raise UnknownCredential("credential id not registered")
                return [cred_id]
            return list(self._credentials.keys())

    def finish_auth(self, msg: AssertionMessage, challenge_nonce: bytes) -> CredentialRecord:
        """Verify an assertion over the nonce and consume the challenge."""
        with self._lock:
            record = self._credentials.get(msg.cred_id)
            if record is None:
                raise UnknownCredential("credential id not registered")
        if not verify(record.public_key, challenge_nonce, msg.signed_challenge):
            raise BadAssertion("assertion does not verify under the stored public key")
        with self._lock:
            self._consume_challenge_locked(challenge_nonce, ChallengePurpose.AUTHENTICATION)
            record.sign_count += 1
            self._save_store_locked()
        return record

    # -- registry management

    def get_credential(self, cred_id: bytes) -> CredentialRecord | None:
        with self._lock:
            return self._credentials.get(cred_id)

    def delete_credential(self, cred_id: bytes) -> bool:
        """Revocation: drop the record; the credential is then unusable."""
        with self._lock:
            existed = self._credentials.pop(cred_id, None) is not None
            if existed:
                self._save_store_locked()
        return existed

    def credential_count(self) -> int:
        with self._lock:
            return len(self._credentials)

    # -- persistence (format documented in the README)

    def _save_store_locked(self) -> None:
        if self._store_path is None:
            return
        doc = {
            b64url_encode(cid): {
                "public_key": b64url_encode(rec.public_key),
                "registered_at": rec.registered_at,
                "sign_count": rec.sign_count,
            }
            for cid, rec in self._credentials.items()
        }
        self._store_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    def _load_store(self) -> None:
        doc = json.loads(self._store_path.read_text(encoding="utf-8"))
        for cid_b64, rec in doc.items():
            cid = b64url_decode(cid_b64)
            self._credentials[cid] = CredentialRecord(
                cred_id=cid,
                public_key=b64url_decode(rec["public_key"]),
                registered_at=float(rec["registered_at"]),
                sign_count=int(rec["sign_count"]),
            )


def deterministic_nonce_source(seed: int) -> Callable[[int], bytes]:
    """SHA-256 counter stream for reproducible demo ceremonies.

    Production RPs use the default cryptographic RNG; this exists so a
    seeded end-to-end run emits byte-identical messages.
    """
    import hashlib

    counter = [0]

    def source(n: int) -> bytes:
        out = b""
        while len(out) < n:
            out += hashlib.sha256(f"bido-demo-nonce:{seed}:{counter[0]}".encode()).digest()
            counter[0] += 1
        return out[:n]

    return source
