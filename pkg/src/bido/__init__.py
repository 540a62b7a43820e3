"""Device-free biometric authentication: landmark frames to transient
WebAuthn-shaped ECDSA credentials, plus a simulator and analysis toolkit."""

from .config import DEFAULT_PROMINENT_INDICES, PipelineConfig, load_config, save_config
from .geometry import (
    AlignedFrame,
    AlignmentTransform,
    EyeGeometry,
    LandmarkFrame,
    Rejection,
    alignment_transform,
    apply_transform,
    eye_centers,
    eye_geometry,
    frontality_check,
    validate_frame,
)
from .keymat import (
    CredId,
    KeyPair,
    Signature,
    keypair_from_seed,
    make_cred_id,
    sign,
    split_cred_id,
    verify,
    zeroize,
)
from .protocol import (
    AssertionMessage,
    Challenge,
    ChallengePurpose,
    CredentialRecord,
    RegistrationMessage,
    RelyingParty,
    authenticate,
    enroll,
)
from .quantize import (
    ProminentSet,
    QuantizedVector,
    VseedDigest,
    distance_vector,
    frame_digest,
    majority_vote,
    quantize,
    salted_hash,
)

__version__ = "0.1.0"

__all__ = [
    "AlignedFrame",
    "AlignmentTransform",
    "AssertionMessage",
    "Challenge",
    "ChallengePurpose",
    "CredId",
    "CredentialRecord",
    "DEFAULT_PROMINENT_INDICES",
    "EyeGeometry",
    "KeyPair",
    "LandmarkFrame",
    "PipelineConfig",
    "ProminentSet",
    "QuantizedVector",
    "RegistrationMessage",
    "Rejection",
    "RelyingParty",
    "Signature",
    "VseedDigest",
    "alignment_transform",
    "apply_transform",
    "authenticate",
    "distance_vector",
    "enroll",
    "eye_centers",
    "eye_geometry",
    "frame_digest",
    "frontality_check",
    "keypair_from_seed",
    "load_config",
    "majority_vote",
    "make_cred_id",
    "quantize",
    "salted_hash",
    "save_config",
    "sign",
    "split_cred_id",
    "validate_frame",
    "verify",
    "zeroize",
]
