"""Exception hierarchy for the pipeline, key handling, and the RP exchange.

Gate outcomes (one face / frontality / eye geometry) are *not* exceptions:
frame validation returns a rejection value instead. Everything here signals
a broken contract, a malformed input, or a refused ceremony.
"""


class BidoError(Exception):
    """Base class for all library errors."""


class WireFormatError(BidoError):
    """A landmark JSONL line failed to parse or violated the schema."""

    def __init__(self, line_number: int, detail: str):
        super().__init__(f"line {line_number}: {detail}")
        self.line_number = line_number
        self.detail = detail


class DegenerateEyes(BidoError):
    """Eye centers coincide; the detection is unusable."""


class EmptyVote(BidoError):
    """Majority vote over an empty digest collection."""


class KeyZeroized(BidoError):
    """Operation attempted on a key whose secret material was wiped."""


class MalformedPoint(BidoError):
    """Public key bytes are off-curve or not a valid SEC1 encoding."""


class NotBidoCredential(BidoError):
    """Credential ID does not carry the fixed prefix; it belongs to some
    other authenticator."""


class MalformedCredential(BidoError):
    """Credential ID has the prefix but the wrong payload length."""


class FrameSourceExhausted(BidoError):
    """The frame source ended before the ceremony collected enough valid
    frames."""


class NoBidoCredential(BidoError):
    """allowCredentials contains no entry with the fixed prefix."""


class AuthTimeout(BidoError):
    """The per-frame key search exhausted its valid-frame budget without
    recovering the enrolled keypair."""


class ChallengeMismatch(BidoError):
    """Presented nonce is unknown, expired, or issued for another purpose."""


class ChallengeReplayed(BidoError):
    """Presented nonce was already consumed."""


class BadAttestation(BidoError):
    """Registration attestation does not verify under the embedded key."""


class DuplicateCredential(BidoError):
    """Credential ID already registered."""


class UnknownCredential(BidoError):
    """Credential ID not present in the RP store."""


class BadAssertion(BidoError):
    """Assertion signature does not verify under the stored public key."""


class MismatchedInputs(BidoError):
    """Binding-metric inputs do not line up (missing streams or salts)."""


class EmptyHistogram(BidoError):
    """Entropy requested for a histogram with no observations."""
