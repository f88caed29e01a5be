import numpy as np
import pytest

from micoder import nn
from micoder.channel import SnrSpec, ebn0_db_to_noise_variance
from micoder.encoder import EncoderModel
from micoder.estimator import StatisticNetwork, estimator_gradients, split_joint_marginal
from micoder.exceptions import SpecError
from micoder.rng import make_rng, normal
from micoder.training import (
    EncoderCycle,
    EstimatorPhase,
    TrainingReport,
    TrainingSchedule,
    save_report,
    train_encoder_mi,
    training_snr_sample,
)


def small_schedule(**kw):
    defaults = dict(
        train_snr=SnrSpec(ebn0_db=7.0, rate=4.0),
        initial=EstimatorPhase(iterations=100, batch=64),
        cycles=[EncoderCycle(64, 100, 0.01)],
        refresh_iterations=5,
        refresh_batch=64,
    )
    defaults.update(kw)
    return TrainingSchedule(**defaults)


class TestScheduleValidation:
    def test_default_valid(self):
        TrainingSchedule(train_snr=SnrSpec(ebn0_db=7.0, rate=4.0)).validate()

    def test_refresh_must_divide(self):
        with pytest.raises(SpecError):
            small_schedule(cycles=[EncoderCycle(64, 105, 0.01)]).validate()

    def test_positive_counts_and_rates(self):
        with pytest.raises(SpecError):
            small_schedule(refresh_iterations=0).validate()
        with pytest.raises(SpecError):
            small_schedule(cycles=[EncoderCycle(64, 100, 0.0)]).validate()


class TestSnrSampling:
    def test_fixed_7db(self):
        rng = make_rng(1)
        sigma2 = training_snr_sample(SnrSpec(ebn0_db=7.0, rate=4.0), rng)
        assert sigma2 == pytest.approx(0.049881, abs=1e-6)

    def test_degenerate_range_is_fixed(self):
        rng = make_rng(2)
        spec = SnrSpec(ebn0_db=(10.0, 10.0), rate=4.0)
        assert training_snr_sample(spec, rng) == pytest.approx(
            ebn0_db_to_noise_variance(10.0, 4.0)
        )

    def test_uniform_range_mean(self):
        rng = make_rng(3)
        spec = SnrSpec(ebn0_db=(10.0, 14.0), rate=4.0)
        dbs = [
            -10.0 * np.log10(training_snr_sample(spec, rng) * 4.0) for _ in range(10_000)
        ]
        assert np.mean(dbs) == pytest.approx(12.0, abs=0.1)

    def test_bad_range_rejected(self):
        with pytest.raises(SpecError):
            SnrSpec(ebn0_db=(14.0, 10.0), rate=4.0)


class TestTrainEncoderMi:
    def test_zero_cycles_leaves_encoder_unchanged(self):
        enc = EncoderModel.build(4, 1, seed=1)
        before = [p.copy() for p in enc.net.parameters()]
        tnet = StatisticNetwork.build(1, 8, seed=2)
        enc, tnet, report = train_encoder_mi(
            enc, tnet, small_schedule(cycles=[]), master_seed=5
        )
        for b, a in zip(before, enc.net.parameters()):
            assert np.array_equal(b, a)
        assert len(report.phase1_trace) == 100
        assert report.cycle_traces == []

    def test_trace_lengths_match_schedule(self):
        enc = EncoderModel.build(4, 1, seed=1)
        tnet = StatisticNetwork.build(1, 8, seed=2)
        sched = small_schedule(cycles=[EncoderCycle(64, 50, 0.01), EncoderCycle(64, 30, 0.005)])
        enc, tnet, report = train_encoder_mi(enc, tnet, sched, master_seed=5)
        assert [len(t) for t in report.cycle_traces] == [50, 30]
        assert len(report.running_max) == 80

    def test_running_max_monotone(self):
        enc = EncoderModel.build(4, 1, seed=1)
        tnet = StatisticNetwork.build(1, 8, seed=2)
        _, _, report = train_encoder_mi(enc, tnet, small_schedule(), master_seed=5)
        assert (np.diff(report.running_max) >= 0).all()

    def test_deterministic_given_master_seed(self):
        blobs = []
        for _ in range(2):
            enc = EncoderModel.build(4, 1, seed=1)
            tnet = StatisticNetwork.build(1, 8, seed=2)
            enc, tnet, _ = train_encoder_mi(enc, tnet, small_schedule(), master_seed=5)
            blobs.append((nn.checkpoint_save(enc.net), nn.checkpoint_save(tnet.net)))
        assert blobs[0] == blobs[1]

    def test_two_messages_high_snr_reaches_one_bit(self):
        enc = EncoderModel.build(2, 1, seed=2)
        tnet = StatisticNetwork.build(1, 20, seed=3)
        sched = TrainingSchedule(
            train_snr=SnrSpec(ebn0_db=7.0, rate=1.0),
            cycles=[EncoderCycle(100, 1000, 0.01), EncoderCycle(100, 2000, 0.001)],
        )
        _, _, report = train_encoder_mi(enc, tnet, sched, master_seed=1)
        assert report.final_mi_bits >= 0.95
        # H(M) = 1 bit caps the estimate
        assert report.final_mi_bits <= 1.0 + 3 * report.final_mi_stderr


class TestAlternationIsolation:
    def test_encoder_ascent_step_leaves_theta_unchanged(self):
        enc = EncoderModel.build(4, 1, seed=1)
        tnet = StatisticNetwork.build(1, 8, seed=2)
        theta_before = [p.copy() for p in tnet.net.parameters()]
        rng = make_rng(4)
        from micoder.encoder import encode_batch, encoder_backward

        m = rng.integers(0, 4, 32)
        x, tape = encode_batch(enc, m)
        z = 0.2 * (normal(rng, (32, 1)) + 1j * normal(rng, (32, 1)))
        _, _, x_cot = estimator_gradients(
            "donsker_varadhan", tnet, split_joint_marginal(x, x + z)
        )
        grads = encoder_backward(enc, tape, x_cot)
        nn.adam_step(enc.net, grads.scaled(-1.0), nn.AdamState.for_network(enc.net, 0.01))
        for b, a in zip(theta_before, tnet.net.parameters()):
            assert np.array_equal(b, a)

    def test_estimator_burst_leaves_phi_unchanged(self):
        from micoder.estimator import train_statistic_network
        from micoder.encoder import encode_batch

        enc = EncoderModel.build(4, 1, seed=1)
        phi_before = [p.copy() for p in enc.net.parameters()]
        tnet = StatisticNetwork.build(1, 8, seed=2)
        rng = make_rng(4)

        def source(b):
            m = rng.integers(0, 4, b)
            x, _ = encode_batch(enc, m)
            return x, x + 0.2 * (normal(rng, (b, 1)) + 1j * normal(rng, (b, 1)))

        train_statistic_network(tnet, source, 20, 32, 1e-3)
        for b, a in zip(phi_before, enc.net.parameters()):
            assert np.array_equal(b, a)


def test_report_serialization(tmp_path):
    report = TrainingReport(
        seeds={"master": 1},
        phase1_trace=[0.1, 0.2],
        cycle_traces=[[0.3]],
        wall_clock={"initial_estimator": 1.0},
        final_mi_bits=3.5,
        final_mi_stderr=0.01,
        worst_codeword_power=1.4,
        checkpoints={"encoder": "encoder.ckpt"},
        meta={"symbols": 16},
    )
    path = tmp_path / "report.txt"
    save_report(report, path)
    text = path.read_text()
    assert "[phase initial_estimator]" in text
    assert "mi_bits=3.5" in text
    assert "worst_codeword_power=1.4" in text
    assert "encoder=encoder.ckpt" in text
