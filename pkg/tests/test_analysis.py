import math

import pytest

from bido.analysis import (
    AAL2_TARGET_BITS,
    BinHistogram,
    bin_frequencies,
    binding_metrics,
    binding_table,
    collision_probability,
    entropy_report,
    entropy_table,
    format_table,
    joint_entropy_bound,
    latency_table,
    min_entropy,
    secret_supplement_bits,
    stage_latencies,
)
from bido.config import PipelineConfig
from bido.errors import EmptyHistogram, MismatchedInputs
from bido.simulator import NOISELESS, NoiseConfig, frame_stream, new_subject, noiseless_frame, subject_seeds


def hist_with_peak_fraction(peak: int, total: int, index: int = 0) -> BinHistogram:
    """Histogram whose most-populated bin holds peak/total of the mass."""
    hist = BinHistogram(coordinate_index=index)
    hist.counts[0] = peak
    remaining = total - peak
    bin_id = 1
    while remaining > 0:
        take = min(peak - 1, remaining) if peak > 1 else 1
        hist.counts[bin_id] = take
        remaining -= take
        bin_id += 1
    assert hist.total == total
    return hist


class TestMinEntropy:
    def test_twelve_percent_peak(self):
        hist = hist_with_peak_fraction(12, 100)
        assert min_entropy(hist) == pytest.approx(-math.log2(0.12), abs=1e-12)
        assert min_entropy(hist) == pytest.approx(3.0589, abs=1e-3)

    def test_single_bin_zero_bits(self):
        hist = BinHistogram(coordinate_index=0, counts={4: 50})
        assert min_entropy(hist) == 0.0

    def test_uniform_eight_bins(self):
        hist = BinHistogram(coordinate_index=0, counts={i: 5 for i in range(8)})
        assert min_entropy(hist) == pytest.approx(3.0, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptyHistogram):
            min_entropy(BinHistogram(coordinate_index=3))

    def test_bounded_by_occupied_bins(self):
        hist = BinHistogram(coordinate_index=0, counts={0: 3, 1: 2, 2: 5})
        bits = min_entropy(hist)
        assert 0.0 <= bits <= math.log2(len(hist.counts))


class TestJointEntropyBound:
    def test_paper_joint_value(self):
        hists = [hist_with_peak_fraction(12, 100, i) for i in range(27)]
        joint = joint_entropy_bound(hists)
        assert joint == pytest.approx(82.6, abs=0.1)
        # exact sum rule, no hidden weighting
        assert joint == pytest.approx(sum(min_entropy(h) for h in hists), abs=1e-12)

    def test_all_single_bin_is_zero(self):
        hists = [BinHistogram(coordinate_index=i, counts={0: 9}) for i in range(27)]
        assert joint_entropy_bound(hists) == 0.0

    def test_requires_27(self):
        with pytest.raises(ValueError):
            joint_entropy_bound([BinHistogram(coordinate_index=0, counts={0: 1})] * 26)

    def test_secret_supplement(self):
        hists = [hist_with_peak_fraction(12, 100, i) for i in range(27)]
        joint = joint_entropy_bound(hists)
        assert secret_supplement_bits(joint) == pytest.approx(29.4, abs=0.1)
        assert secret_supplement_bits(AAL2_TARGET_BITS + 5) == 0.0


class TestCollisionProbability:
    def test_twin_worst_case(self):
        assert collision_probability(0.5, 27, 1.0) == pytest.approx(7.45e-9, rel=0.01)

    def test_twin_with_pin(self):
        assert collision_probability(0.5, 27, 1e-6) == pytest.approx(7.45e-15, rel=0.01)

    def test_general_population_order(self):
        p = collision_probability(0.12, 27, 1.0)
        assert 1e-26 < p < 1e-24

    def test_range_validation(self):
        with pytest.raises(ValueError):
            collision_probability(1.5, 27, 1.0)
        with pytest.raises(ValueError):
            collision_probability(0.5, -1, 1.0)


class TestBinFrequencies:
    def test_single_subject_all_entropy_zero(self, config):
        frames = [noiseless_frame(new_subject(rng_seed=1))]
        hists = bin_frequencies(frames, config)
        assert all(h.total == 1 for h in hists)
        assert all(min_entropy(h) == 0.0 for h in hists)

    def test_duplicate_subjects_do_not_double_count(self, config):
        subject = new_subject(rng_seed=1)
        frames = [noiseless_frame(subject, frame_id=i) for i in range(5)]
        hists = bin_frequencies(frames, config)
        assert all(h.total == 1 for h in hists)

    def test_duplicated_population_scales_counts_not_entropy(self, config):
        single = [noiseless_frame(new_subject(rng_seed=s, subject_id=f"s{s}")) for s in range(20)]
        doubled = single + [
            noiseless_frame(new_subject(rng_seed=s, subject_id=f"t{s}")) for s in range(20)
        ]
        h1 = bin_frequencies(single, config)
        h2 = bin_frequencies(doubled, config)
        for a, b in zip(h1, h2):
            assert b.total == 2 * a.total
            assert min_entropy(a) == pytest.approx(min_entropy(b), abs=1e-12)

    def test_population_has_positive_entropy(self, config):
        frames = [
            noiseless_frame(new_subject(rng_seed=s, subject_id=f"s{s}")) for s in range(200)
        ]
        hists = bin_frequencies(frames, config)
        bits = [min_entropy(h) for h in hists]
        assert all(b > 0.0 for b in bits)


def _streams_for(n_subjects, enroll_count, attempt_count, attempts, noise, master_seed):
    enroll_streams, auth_attempts, salts = {}, {}, {}
    for k, (tseed, sseed) in enumerate(subject_seeds(master_seed, n_subjects)):
        sid = f"s{k}"
        subject = new_subject(tseed, subject_id=sid)
        enroll_streams[sid] = list(frame_stream(subject, noise, sseed, count=enroll_count))
        auth_attempts[sid] = [
            list(frame_stream(subject, noise, sseed + 1 + a, count=attempt_count))
            for a in range(attempts)
        ]
        salts[sid] = f"salt-{sid}"
    return enroll_streams, auth_attempts, salts


class TestBindingMetrics:
    def test_noiseless_perfect_match(self, config):
        cfg = PipelineConfig(enroll_frames=20, auth_max_frames=20)
        enroll_streams, auth_attempts, salts = _streams_for(
            4, 25, 25, 2, NOISELESS, master_seed=11
        )
        metrics = binding_metrics(enroll_streams, auth_attempts, salts, cfg)
        assert metrics.match_rate == 1.0
        assert metrics.c_frr == 0.0
        assert metrics.c_far == 0.0
        assert metrics.c_far_victim_salt == 0.0
        assert metrics.n_genuine_attempts == 8
        assert metrics.match_rate + metrics.c_frr == pytest.approx(1.0, abs=1e-12)

    def test_exhausted_attempt_counts_as_miss(self, config):
        cfg = PipelineConfig(enroll_frames=10, auth_max_frames=50)
        enroll_streams, auth_attempts, salts = _streams_for(
            2, 15, 15, 1, NOISELESS, master_seed=12
        )
        # poison one subject's attempt with the wrong-geometry frames
        other = new_subject(999, subject_id="s0")
        auth_attempts["s0"] = [list(frame_stream(other, NOISELESS, 5, count=15))]
        metrics = binding_metrics(enroll_streams, auth_attempts, salts, cfg)
        assert metrics.match_rate == 0.5
        assert metrics.c_frr == 0.5

    def test_mismatched_inputs(self, config):
        enroll_streams, auth_attempts, salts = _streams_for(
            2, 5, 5, 1, NOISELESS, master_seed=13
        )
        del salts["s0"]
        with pytest.raises(MismatchedInputs):
            binding_metrics(enroll_streams, auth_attempts, salts, PipelineConfig(enroll_frames=5))

    def test_tables_render(self, config):
        cfg = PipelineConfig(enroll_frames=5, auth_max_frames=10)
        enroll_streams, auth_attempts, salts = _streams_for(
            2, 8, 8, 1, NOISELESS, master_seed=14
        )
        metrics = binding_metrics(enroll_streams, auth_attempts, salts, cfg)
        text = binding_table(metrics)
        assert "match rate" in text and "C-FAR" in text
        doc = metrics.to_dict()
        assert set(doc) >= {"match_rate", "c_far", "c_frr", "n_subjects"}


class TestReports:
    def test_entropy_report_shape(self, config):
        frames = [
            noiseless_frame(new_subject(rng_seed=s, subject_id=f"s{s}")) for s in range(30)
        ]
        report = entropy_report(bin_frequencies(frames, config))
        assert len(report["per_coord_bits"]) == 27
        assert report["joint_bits"] == pytest.approx(sum(report["per_coord_bits"]))
        assert report["secret_supplement_bits"] >= 0.0
        table = entropy_table(report)
        assert "joint bound" in table and "secret supplement" in table

    def test_format_table_alignment(self):
        table = format_table(["a", "bb"], [["1", "2"], ["333", "4"]])
        lines = table.splitlines()
        assert len(lines) == 4
        assert lines[0].startswith("a")

    def test_stage_latencies_report(self, config):
        report = stage_latencies(config, reps=5)
        assert set(report) == {"vectorize_quantize", "hash_binding_200", "ecdsa_sign"}
        for stage in report.values():
            assert stage["mean_ms"] >= 0.0
            assert stage["std_ms"] >= 0.0
        assert "stage" in latency_table(report)
