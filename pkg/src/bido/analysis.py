"""Entropy bounds, collision arithmetic, and binding metrics.

Min-entropy is estimated per quantized coordinate from across-subject bin
frequencies; the joint bound is the independence sum (conservative, since
neighboring landmark distances correlate). Binding metrics replay the real
authentication loop per attempt, so match rate / C-FRR / C-FAR measure the
derived key, not a similarity score.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .config import PROMINENT_COUNT, PipelineConfig
from .errors import AuthTimeout, EmptyHistogram, FrameSourceExhausted, MismatchedInputs
from .geometry import LandmarkFrame, Rejection, validate_frame
from .keymat import keypair_from_seed, make_cred_id, sign, zeroize
from .protocol import Challenge, ChallengePurpose, authenticate, collect_enrollment_seed
from .quantize import ProminentSet, distance_vector, quantize, salted_hash

# AAL2 demands at least this much combined guessing resistance
AAL2_TARGET_BITS = 112.0


@dataclass
class BinHistogram:
    """Across-subject frequency of quantized values for one coordinate."""

    coordinate_index: int
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def add(self, value: int) -> None:
        self.counts[value] = self.counts.get(value, 0) + 1


def min_entropy(hist: BinHistogram) -> float:
    """-log2 of the most probable bin's frequency, in bits."""
    total = hist.total
    if total <= 0:
        raise EmptyHistogram(f"coordinate {hist.coordinate_index} has no observations")
    peak = max(hist.counts.values())
    return -math.log2(peak / total)


def joint_entropy_bound(hists: Sequence[BinHistogram]) -> float:
    """Independence lower bound: the sum of per-coordinate min-entropies."""
    if len(hists) != PROMINENT_COUNT:
        raise ValueError(f"expected {PROMINENT_COUNT} histograms, got {len(hists)}")
    return sum(min_entropy(h) for h in hists)


def secret_supplement_bits(joint_bits: float, target_bits: float = AAL2_TARGET_BITS) -> float:
    """Entropy the memorized secret must add to reach the target."""
    return max(0.0, target_bits - joint_bits)


def collision_probability(p_bio_per_coord: float, n_coords: int, p_secret: float) -> float:
    """Chance two subjects derive the same key: per-coordinate biometric
    collision raised to the coordinate count, times the secret collision."""
    if not 0.0 <= p_bio_per_coord <= 1.0 or not 0.0 <= p_secret <= 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    if n_coords < 0:
        raise ValueError("coordinate count must be non-negative")
    return (p_bio_per_coord ** n_coords) * p_secret


def bin_frequencies(
    frames: Iterable[LandmarkFrame], config: PipelineConfig
) -> list[BinHistogram]:
    """Per-coordinate histograms over one representative frame per subject.

    The representative is each subject's first gate-passing frame; feed a
    noiseless dataset so it is the subject's template rendering.
    """
    prominent = ProminentSet.from_config(config)
    hists = [BinHistogram(coordinate_index=i) for i in range(PROMINENT_COUNT)]
    seen: set[str] = set()
    for frame in frames:
        if frame.subject_id in seen:
            continue
        validated = validate_frame(frame, config.frontality_tolerance_px)
        if isinstance(validated, Rejection):
            continue
        seen.add(frame.subject_id)
        values = quantize(distance_vector(validated, prominent), config.q)
        for i, v in enumerate(values):
            hists[i].add(v)
    return hists


@dataclass
class BindingMetrics:
    """Key-level accuracy of the biometric-to-credential binding.

    c_far uses impostor frames with the impostor's own salt; the
    victim-salt variant isolates the biometric factor alone.
    """

    match_rate: float
    c_far: float
    c_frr: float
    n_subjects: int
    attempts_per_subject: int
    c_far_victim_salt: float = 0.0
    n_genuine_attempts: int = 0
    n_impostor_attempts: int = 0

    def to_dict(self) -> dict:
        return {
            "match_rate": self.match_rate,
            "c_far": self.c_far,
            "c_frr": self.c_frr,
            "c_far_victim_salt": self.c_far_victim_salt,
            "n_subjects": self.n_subjects,
            "attempts_per_subject": self.attempts_per_subject,
            "n_genuine_attempts": self.n_genuine_attempts,
            "n_impostor_attempts": self.n_impostor_attempts,
        }


def _local_challenge() -> Challenge:
    import secrets

    return Challenge(
        nonce=secrets.token_bytes(32),
        purpose=ChallengePurpose.AUTHENTICATION,
        issued_at=time.time(),
    )


def _attempt_succeeds(
    frames: Iterable[LandmarkFrame], salt: str, cred_wire: bytes, config: PipelineConfig
) -> bool:
    try:
        authenticate(iter(frames), salt, _local_challenge(), [cred_wire], config)
        return True
    except (AuthTimeout, FrameSourceExhausted):
        return False


def binding_metrics(
    enroll_streams: Mapping[str, Sequence[LandmarkFrame]],
    auth_attempts: Mapping[str, Sequence[Sequence[LandmarkFrame]]],
    salts: Mapping[str, str],
    config: PipelineConfig,
    include_impostors: bool = True,
) -> BindingMetrics:
    """Enroll every subject, then replay genuine and impostor attempts.

    A genuine attempt succeeds when the authentication loop recovers the
    enrolled keypair within the configured valid-frame budget; exhausted
    frame sources count as failures. Impostor attempts pair each subject
    with the next one (ring order) and reuse the impostor's first attempt
    stream against the victim's credential.
    """
    subject_ids = sorted(enroll_streams)
    if sorted(auth_attempts) != subject_ids or sorted(salts) != subject_ids:
        raise MismatchedInputs("enroll streams, auth attempts, and salts must cover the same subjects")
    if not subject_ids:
        raise MismatchedInputs("no subjects supplied")
    attempts_counts = {len(auth_attempts[s]) for s in subject_ids}
    if 0 in attempts_counts:
        raise MismatchedInputs("every subject needs at least one auth attempt")

    credentials: dict[str, bytes] = {}
    for sid in subject_ids:
        vseed = collect_enrollment_seed(iter(enroll_streams[sid]), salts[sid], config)
        key = keypair_from_seed(vseed)
        credentials[sid] = make_cred_id(key).wire
        zeroize(key)
        zeroize(vseed)

    genuine_total = genuine_ok = 0
    for sid in subject_ids:
        for attempt in auth_attempts[sid]:
            genuine_total += 1
            if _attempt_succeeds(attempt, salts[sid], credentials[sid], config):
                genuine_ok += 1

    impostor_total = far_own = far_victim = 0
    if include_impostors and len(subject_ids) > 1:
        for i, sid in enumerate(subject_ids):
            victim = subject_ids[(i + 1) % len(subject_ids)]
            frames = auth_attempts[sid][0]
            impostor_total += 1
            if _attempt_succeeds(frames, salts[sid], credentials[victim], config):
                far_own += 1
            if _attempt_succeeds(frames, salts[victim], credentials[victim], config):
                far_victim += 1

    match_rate = genuine_ok / genuine_total
    return BindingMetrics(
        match_rate=match_rate,
        c_far=far_own / impostor_total if impostor_total else 0.0,
        c_frr=1.0 - match_rate,
        n_subjects=len(subject_ids),
        attempts_per_subject=max(attempts_counts),
        c_far_victim_salt=far_victim / impostor_total if impostor_total else 0.0,
        n_genuine_attempts=genuine_total,
        n_impostor_attempts=impostor_total,
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def entropy_report(hists: Sequence[BinHistogram]) -> dict:
    per_coord = [min_entropy(h) for h in hists]
    joint = sum(per_coord)
    return {
        "per_coord_bits": per_coord,
        "joint_bits": joint,
        "secret_supplement_bits": secret_supplement_bits(joint),
    }


def format_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(row):
        return "  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines)


def entropy_table(report: dict) -> str:
    rows = [
        [f"coord[{i}]", f"{bits:.4f}"]
        for i, bits in enumerate(report["per_coord_bits"])
    ]
    rows.append(["joint bound", f"{report['joint_bits']:.4f}"])
    rows.append(["secret supplement", f"{report['secret_supplement_bits']:.4f}"])
    return format_table(["quantity", "bits"], rows)


def binding_table(metrics: BindingMetrics) -> str:
    rows = [
        ["match rate", f"{metrics.match_rate * 100:.2f}%"],
        ["C-FAR (own salt)", f"{metrics.c_far * 100:.2f}%"],
        ["C-FAR (victim salt)", f"{metrics.c_far_victim_salt * 100:.2f}%"],
        ["C-FRR", f"{metrics.c_frr * 100:.2f}%"],
        ["subjects", str(metrics.n_subjects)],
        ["attempts/subject", str(metrics.attempts_per_subject)],
    ]
    return format_table(["metric", "value"], rows)


# ---------------------------------------------------------------------------
# Stage latency (informational; numbers are hardware-specific)
# ---------------------------------------------------------------------------

def stage_latencies(config: PipelineConfig | None = None, reps: int = 50) -> dict:
    """Time the post-capture pipeline stages, in milliseconds.

    Stages: per-frame vectorization+quantization, a 200-hash binding pass,
    and one deterministic ECDSA signature. Reported, never asserted.
    """
    from .simulator import new_subject, noiseless_frame

    config = config or PipelineConfig()
    prominent = ProminentSet.from_config(config)
    frame = noiseless_frame(new_subject(rng_seed=7, spread_px=0.0))
    validated = validate_frame(frame, config.frontality_tolerance_px)
    assert not isinstance(validated, Rejection)

    def timed(fn, n):
        samples = []
        for _ in range(n):
            t0 = time.perf_counter()
            fn()
            samples.append((time.perf_counter() - t0) * 1000.0)
        mean = sum(samples) / len(samples)
        var = sum((s - mean) ** 2 for s in samples) / len(samples)
        return {"mean_ms": mean, "std_ms": math.sqrt(var)}

    q_values = quantize(distance_vector(validated, prominent), config.q)

    def vectorize_stage():
        quantize(distance_vector(validated, prominent), config.q)

    def binding_stage():
        for _ in range(200):
            d = salted_hash(q_values, "latency-probe")
            d.zeroize()

    seed = salted_hash(q_values, "latency-probe")
    key = keypair_from_seed(seed)

    def sign_stage():
        sign(key, b"latency-probe-message")

    report = {
        "vectorize_quantize": timed(vectorize_stage, reps),
        "hash_binding_200": timed(binding_stage, max(reps // 5, 5)),
        "ecdsa_sign": timed(sign_stage, reps),
    }
    zeroize(key)
    zeroize(seed)
    return report


def latency_table(report: dict) -> str:
    rows = [
        [stage, f"{vals['mean_ms']:.3f}", f"{vals['std_ms']:.3f}"]
        for stage, vals in report.items()
    ]
    return format_table(["stage", "mean (ms)", "std (ms)"], rows)
