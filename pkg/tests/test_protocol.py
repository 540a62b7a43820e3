import itertools
import time

import pytest

from bido.config import PipelineConfig
from bido.errors import (
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
from bido.keymat import CRED_ID_PREFIX, VERIFICATION_CONSTANT, Signature, split_cred_id, verify
from bido.protocol import (
    AssertionMessage,
    Challenge,
    ChallengePurpose,
    RegistrationMessage,
    RelyingParty,
    authenticate,
    collect_enrollment_seed,
    deterministic_nonce_source,
    enroll,
    parse_auth_data,
)
from bido.simulator import NOISELESS, NoiseConfig, frame_stream, new_subject, noiseless_frame


@pytest.fixture
def rp():
    return RelyingParty()


@pytest.fixture
def subject():
    return new_subject(rng_seed=555)


def noiseless_frames(subject, count=None, seed=1):
    return frame_stream(subject, NOISELESS, stream_seed=seed, count=count)


def enroll_subject(rp, subject, salt, config):
    challenge = rp.issue_challenge(ChallengePurpose.REGISTRATION)
    msg = enroll(noiseless_frames(subject), salt, challenge, config)
    record = rp.register(msg)
    return msg, record


class TestEnroll:
    def test_identical_frames_self_verifying_attestation(self, rp, subject, config):
        msg, record = enroll_subject(rp, subject, "hunter2", config)
        nonce, cred_id, public_key = parse_auth_data(msg.auth_data)
        assert verify(public_key, msg.auth_data, msg.attestation)
        assert record.cred_id == cred_id
        assert verify(public_key, VERIFICATION_CONSTANT, split_cred_id(cred_id))

    def test_invalid_frames_skipped_not_counted(self, rp, subject, config):
        plain = enroll(
            noiseless_frames(subject),
            "s",
            rp.issue_challenge(ChallengePurpose.REGISTRATION),
            config,
        )

        def with_invalid():
            # interleave 100 bad-face-count frames among the valid ones
            for i, frame in enumerate(noiseless_frames(subject)):
                if i < 100:
                    bad = noiseless_frame(subject, frame_id=1000 + i)
                    yield type(bad)(
                        subject_id=bad.subject_id,
                        frame_id=bad.frame_id,
                        face_count=2,
                        width=bad.width,
                        height=bad.height,
                        landmarks=bad.landmarks,
                    )
                yield frame

        mixed = enroll(
            with_invalid(),
            "s",
            rp.issue_challenge(ChallengePurpose.REGISTRATION),
            config,
        )
        _, cred_plain, pub_plain = parse_auth_data(plain.auth_data)
        _, cred_mixed, pub_mixed = parse_auth_data(mixed.auth_data)
        assert cred_plain == cred_mixed
        assert pub_plain == pub_mixed

    def test_exhausted_source(self, rp, subject, config):
        with pytest.raises(FrameSourceExhausted):
            enroll(
                noiseless_frames(subject, count=150),
                "s",
                rp.issue_challenge(ChallengePurpose.REGISTRATION),
                config,
            )

    def test_credential_stability_across_reenrollment(self, rp, subject, config):
        msg_a = enroll(
            noiseless_frames(subject, seed=3), "same-salt",
            rp.issue_challenge(ChallengePurpose.REGISTRATION), config,
        )
        msg_b = enroll(
            noiseless_frames(subject, seed=4), "same-salt",
            rp.issue_challenge(ChallengePurpose.REGISTRATION), config,
        )
        _, cred_a, pub_a = parse_auth_data(msg_a.auth_data)
        _, cred_b, pub_b = parse_auth_data(msg_b.auth_data)
        assert cred_a == cred_b
        assert pub_a == pub_b

    def test_salt_changes_credential(self, rp, subject, config):
        msg_a = enroll(noiseless_frames(subject), "salt-a",
                       rp.issue_challenge(ChallengePurpose.REGISTRATION), config)
        msg_b = enroll(noiseless_frames(subject), "salt-b",
                       rp.issue_challenge(ChallengePurpose.REGISTRATION), config)
        assert parse_auth_data(msg_a.auth_data)[1] != parse_auth_data(msg_b.auth_data)[1]

    def test_wrong_purpose_challenge_refused(self, rp, subject, config):
        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        with pytest.raises(ChallengeMismatch):
            enroll(noiseless_frames(subject), "s", challenge, config)


class TestAuthenticate:
    def test_round_trip(self, rp, subject, config):
        _, record = enroll_subject(rp, subject, "pw", config)
        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        assertion = authenticate(
            noiseless_frames(subject), "pw", challenge,
            rp.allow_credentials(), config,
        )
        accepted = rp.finish_auth(assertion, challenge.nonce)
        assert accepted.sign_count == 1

    def test_wrong_salt_times_out(self, rp, subject, config):
        enroll_subject(rp, subject, "pw", config)
        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        with pytest.raises(AuthTimeout):
            authenticate(
                noiseless_frames(subject), "pW", challenge,
                rp.allow_credentials(), config,
            )

    def test_wrong_subject_times_out(self, rp, subject, config):
        enroll_subject(rp, subject, "pw", config)
        other = new_subject(rng_seed=556)
        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        with pytest.raises(AuthTimeout):
            authenticate(
                noiseless_frames(other), "pw", challenge,
                rp.allow_credentials(), config,
            )

    def test_foreign_credentials_only(self, subject, config):
        challenge = Challenge(
            nonce=bytes(32), purpose=ChallengePurpose.AUTHENTICATION, issued_at=time.time()
        )
        with pytest.raises(NoBidoCredential):
            authenticate(
                noiseless_frames(subject), "pw", challenge,
                [b"OTHR:" + bytes(64)], config,
            )
        with pytest.raises(NoBidoCredential):
            authenticate(noiseless_frames(subject), "pw", challenge, [], config)

    def test_first_prefixed_entry_wins(self, rp, subject, config):
        _, record = enroll_subject(rp, subject, "pw", config)
        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        allowed = [b"OTHR:" + bytes(64), record.cred_id]
        assertion = authenticate(noiseless_frames(subject), "pw", challenge, allowed, config)
        assert assertion.cred_id == record.cred_id

    def test_frame_source_exhausted(self, rp, subject, config):
        enroll_subject(rp, subject, "pw", config)
        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        with pytest.raises(FrameSourceExhausted):
            authenticate(
                noiseless_frames(subject, count=10), "wrong", challenge,
                rp.allow_credentials(), config,
            )

    def test_gated_frames_do_not_consume_budget(self, rp, subject, config):
        enroll_subject(rp, subject, "pw", config)
        small = PipelineConfig(auth_max_frames=5)
        noisy = NoiseConfig(
            pose_rotation_max_rad=0.0, pose_scale_range=(1.0, 1.0), invalid_frame_rate=0.9
        )

        def stream():
            # mostly invalid frames, then enough valid ones to hit the budget
            yield from frame_stream(subject, noisy, stream_seed=9, count=300)
            yield from noiseless_frames(subject)

        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        with pytest.raises(AuthTimeout):
            authenticate(stream(), "wrong-salt", challenge, rp.allow_credentials(), small)


class TestRelyingParty:
    def test_challenge_nonces_distinct(self, rp):
        a = rp.issue_challenge(ChallengePurpose.REGISTRATION)
        b = rp.issue_challenge(ChallengePurpose.REGISTRATION)
        assert a.nonce != b.nonce

    def test_registration_replay_rejected(self, rp, subject, config):
        challenge = rp.issue_challenge(ChallengePurpose.REGISTRATION)
        msg = enroll(noiseless_frames(subject), "pw", challenge, config)
        rp.register(msg)
        with pytest.raises(ChallengeReplayed):
            rp.register(msg)

    def test_unknown_nonce_rejected(self, rp, subject, config):
        foreign = Challenge(
            nonce=bytes(range(32)), purpose=ChallengePurpose.REGISTRATION,
            issued_at=time.time(),
        )
        msg = enroll(noiseless_frames(subject), "pw", foreign, config)
        with pytest.raises(ChallengeMismatch):
            rp.register(msg)

    def test_expired_challenge_rejected(self, subject, config):
        rp = RelyingParty(challenge_ttl=0.0)
        challenge = rp.issue_challenge(ChallengePurpose.REGISTRATION)
        challenge.issued_at -= 1.0
        msg_challenge = Challenge(
            nonce=challenge.nonce, purpose=ChallengePurpose.REGISTRATION,
            issued_at=time.time(),
        )
        msg = enroll(noiseless_frames(subject), "pw", msg_challenge, config)
        with pytest.raises(ChallengeMismatch):
            rp.register(msg)

    def test_tampered_attestation(self, rp, subject, config):
        challenge = rp.issue_challenge(ChallengePurpose.REGISTRATION)
        msg = enroll(noiseless_frames(subject), "pw", challenge, config)
        raw = bytearray(msg.attestation.to_bytes())
        raw[0] ^= 0xFF
        tampered = RegistrationMessage(
            auth_data=msg.auth_data, attestation=Signature.from_bytes(bytes(raw))
        )
        with pytest.raises(BadAttestation):
            rp.register(tampered)

    def test_duplicate_credential(self, rp, subject, config):
        enroll_subject(rp, subject, "pw", config)
        challenge = rp.issue_challenge(ChallengePurpose.REGISTRATION)
        msg = enroll(noiseless_frames(subject), "pw", challenge, config)
        with pytest.raises(DuplicateCredential):
            rp.register(msg)

    def test_assertion_replay_rejected(self, rp, subject, config):
        enroll_subject(rp, subject, "pw", config)
        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        assertion = authenticate(
            noiseless_frames(subject), "pw", challenge, rp.allow_credentials(), config
        )
        rp.finish_auth(assertion, challenge.nonce)
        with pytest.raises(ChallengeReplayed):
            rp.finish_auth(assertion, challenge.nonce)

    def test_recorded_assertion_useless_for_fresh_challenge(self, rp, subject, config):
        enroll_subject(rp, subject, "pw", config)
        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        assertion = authenticate(
            noiseless_frames(subject), "pw", challenge, rp.allow_credentials(), config
        )
        rp.finish_auth(assertion, challenge.nonce)
        fresh = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        with pytest.raises(BadAssertion):
            rp.finish_auth(assertion, fresh.nonce)

    def test_cross_subject_assertion_rejected(self, rp, config):
        alice = new_subject(rng_seed=1)
        mallory = new_subject(rng_seed=2)
        _, record_alice = enroll_subject(rp, alice, "a", config)
        _, record_mallory = enroll_subject(rp, mallory, "m", config)
        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        assertion = authenticate(
            noiseless_frames(mallory), "m", challenge,
            [record_mallory.cred_id], config,
        )
        forged = AssertionMessage(
            cred_id=record_alice.cred_id, signed_challenge=assertion.signed_challenge
        )
        with pytest.raises(BadAssertion):
            rp.finish_auth(forged, challenge.nonce)

    def test_revocation(self, rp, subject, config):
        _, record = enroll_subject(rp, subject, "pw", config)
        assert rp.delete_credential(record.cred_id)
        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        with pytest.raises(UnknownCredential):
            rp.allow_credentials(record.cred_id)
        assertion = AssertionMessage(
            cred_id=record.cred_id,
            signed_challenge=Signature(1, 1),
        )
        with pytest.raises(UnknownCredential):
            rp.finish_auth(assertion, challenge.nonce)

    def test_store_persistence(self, tmp_path, subject, config):
        store = tmp_path / "rp.json"
        rp_a = RelyingParty(store_path=store)
        _, record = enroll_subject(rp_a, subject, "pw", config)
        rp_b = RelyingParty(store_path=store)
        assert rp_b.credential_count() == 1
        loaded = rp_b.get_credential(record.cred_id)
        assert loaded is not None
        assert loaded.public_key == record.public_key

    def test_sign_count_increments(self, rp, subject, config):
        _, record = enroll_subject(rp, subject, "pw", config)
        for expected in (1, 2, 3):
            challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
            assertion = authenticate(
                noiseless_frames(subject), "pw", challenge,
                rp.allow_credentials(), config,
            )
            assert rp.finish_auth(assertion, challenge.nonce).sign_count == expected


class TestMessageCodecs:
    def test_registration_message_json_round_trip(self, rp, subject, config):
        challenge = rp.issue_challenge(ChallengePurpose.REGISTRATION)
        msg = enroll(noiseless_frames(subject), "pw", challenge, config)
        parsed = RegistrationMessage.from_json(msg.to_json())
        assert parsed == msg

    def test_auth_data_layout(self, rp, subject, config):
        challenge = rp.issue_challenge(ChallengePurpose.REGISTRATION)
        msg = enroll(noiseless_frames(subject), "pw", challenge, config)
        nonce, cred_id, public_key = parse_auth_data(msg.auth_data)
        assert nonce == challenge.nonce
        assert cred_id.startswith(CRED_ID_PREFIX)
        assert len(cred_id) == 70
        assert len(public_key) == 65 and public_key[0] == 0x04

    def test_parse_auth_data_length_check(self):
        with pytest.raises(ValueError):
            parse_auth_data(bytes(100))


class TestDeterministicNonceSource:
    def test_reproducible(self):
        a = deterministic_nonce_source(7)
        b = deterministic_nonce_source(7)
        assert [a(32), a(32)] == [b(32), b(32)]

    def test_seed_sensitivity(self):
        assert deterministic_nonce_source(1)(32) != deterministic_nonce_source(2)(32)


class TestSecretHygiene:
    def test_enrollment_seed_collection_wipes_digests(self, subject, config):
        vseed = collect_enrollment_seed(noiseless_frames(subject), "pw", config)
        assert vseed.snapshot() != bytes(32)
        vseed.zeroize()
        assert vseed.snapshot() == bytes(32)

    def test_statelessness_between_ceremonies(self, rp, subject, config):
        # the client holds nothing: same inputs reproduce the credential,
        # and deleting the RP record is full revocation
        _, record = enroll_subject(rp, subject, "pw", config)
        rp.delete_credential(record.cred_id)
        assert rp.credential_count() == 0
        _, record2 = enroll_subject(rp, subject, "pw", config)
        assert record2.cred_id == record.cred_id
