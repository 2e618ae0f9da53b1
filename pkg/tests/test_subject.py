import numpy as np
import pytest

from cortexloop.errors import ConfigurationError, ParseError
from cortexloop.seeds import rng_for
from cortexloop.signals import SignalConfig, write_signal_file
from cortexloop.subject import (
    IntentPolicy,
    PolicyDriver,
    ReplaySource,
    Scenario,
    SubjectParams,
    SurrogateSource,
    SyntheticSubject,
    WorldSnapshot,
    intent_for,
    load_scenario,
    scenario_from_dict,
)


def small_cfg(n_channels=3):
    return SignalConfig(n_channels=n_channels, lag_count=2)


class TestIntentPolicy:
    def test_seek_target_unit_vector_east(self):
        policy = IntentPolicy(mode="seek_target", effort=0.4)
        world = WorldSnapshot(cursor_position=(0.0, 0.0), target_center=(0.85, 0.0))
        u, v = intent_for(policy, world)
        assert (u, v) == pytest.approx((0.4, 0.0))

    def test_idle(self):
        assert intent_for(IntentPolicy(mode="idle"), WorldSnapshot()) == (0.0, 0.0)

    def test_seek_without_target_is_idle(self):
        policy = IntentPolicy(mode="seek_target")
        assert intent_for(policy, WorldSnapshot()) == (0.0, 0.0)

    def test_flip_negates(self):
        policy = IntentPolicy(mode="seek_target", effort=0.5)
        world = WorldSnapshot(cursor_position=(0.0, 0.0), target_center=(0.0, 0.85))
        u, v = intent_for(policy, world, flipped=True)
        assert (u, v) == pytest.approx((0.0, -0.5))

    def test_flip_frequency_matches_probability(self):
        policy = IntentPolicy(mode="seek_target", wrong_direction_prob=0.3)
        driver = PolicyDriver(policy, update_hz=16.0, rng=np.random.default_rng(5))
        world = WorldSnapshot(cursor_position=(0.0, 0.0), target_center=(0.85, 0.0))
        flips = 0
        n_intervals = 10_000
        for _ in range(n_intervals):
            first_tick = driver.tick(world)
            for _ in range(7):
                driver.tick(world)
            if first_tick[0] < 0:
                flips += 1
        assert 0.28 <= flips / n_intervals <= 0.32

    def test_track_reference_with_delay(self):
        policy = IntentPolicy(mode="track_reference", reaction_delay_s=0.125)
        driver = PolicyDriver(policy, update_hz=16.0, rng=np.random.default_rng(0))
        outputs = []
        for i in range(5):
            world = WorldSnapshot(reference_velocity=(float(i), 0.0))
            outputs.append(driver.tick(world)[0])
        assert outputs == [0.0, 0.0, 0.0, 1.0, 2.0]  # 2 ticks of delay

    def test_invalid_probability(self):
        with pytest.raises(ConfigurationError):
            IntentPolicy(wrong_direction_prob=1.0)


class TestSyntheticSubject:
    def test_clean_mixing_passthrough(self):
        cfg = small_cfg()
        params = SubjectParams(mixing=[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        subject = SyntheticSubject(cfg, params, np.random.default_rng(0))
        subject.set_intent(2.0, 0.0)
        frame = subject.next_frame()
        np.testing.assert_array_equal(frame.voltages, [2.0, 0.0, 0.0])

    def test_intent_lag_delays_encoding(self):
        cfg = small_cfg()
        params = SubjectParams(mixing=[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], intent_lag=2)
        subject = SyntheticSubject(cfg, params, np.random.default_rng(0))
        subject.set_intent(2.0, 0.0)
        values = [subject.next_frame().voltages[0] for _ in range(4)]
        assert values == [0.0, 0.0, 2.0, 2.0]

    def test_deterministic_under_seed(self):
        cfg = small_cfg()
        params = SubjectParams(mixing_seed=3, noise_sigma=0.5, background_sigma=0.2)

        def run():
            subject = SyntheticSubject(cfg, params, rng_for(42, "subject"))
            frames = []
            for i in range(100):
                subject.set_intent(np.sin(i / 10), np.cos(i / 10))
                frames.append(subject.next_frame().voltages)
            return np.array(frames)

        np.testing.assert_array_equal(run(), run())

    def test_rank_two_mixing_enforced(self):
        cfg = small_cfg()
        params = SubjectParams(mixing=[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        with pytest.raises(ConfigurationError):
            SyntheticSubject(cfg, params, np.random.default_rng(0))

    def test_drawn_mixing_rows_unit_norm(self):
        cfg = SignalConfig()
        subject = SyntheticSubject(cfg, SubjectParams(mixing_seed=7), np.random.default_rng(0))
        np.testing.assert_allclose(np.linalg.norm(subject.mixing, axis=1), 1.0)

    @pytest.mark.parametrize("sigma", [0.01, 0.1, 1.0, 10.0])
    def test_snr_tracks_mixing_power_over_sigma_squared(self, sigma):
        # unit-power intent per axis -> per-channel signal power equals the
        # squared row norm of the mixing (1 for drawn mixings)
        cfg = SignalConfig()
        params = SubjectParams(mixing_seed=1, noise_sigma=sigma)
        subject = SyntheticSubject(cfg, params, rng_for(9, "subject"))
        rng = np.random.default_rng(10)
        n = int(60 * cfg.sample_rate_hz)
        intents = rng.normal(size=(n, 2))
        frames = np.empty((n, cfg.n_channels))
        for i in range(n):
            subject.set_intent(*intents[i])
            frames[i] = subject.next_frame().voltages
        clean = intents @ subject.mixing.T
        noise = frames - clean
        snr_db = 10 * np.log10(clean.var(axis=0) / noise.var(axis=0))
        predicted_db = 10 * np.log10(1.0 / sigma**2)
        assert np.all(np.abs(snr_db - predicted_db) < 1.0)

    def test_vertical_intent_noise_scaled_by_asymmetry(self):
        cfg = small_cfg()
        params = SubjectParams(
            mixing=[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
            intent_noise_sigma=0.3,
            asymmetry=1.5,
        )
        subject = SyntheticSubject(cfg, params, rng_for(4, "subject"))
        n = 60 * 128
        frames = np.empty((n, 3))
        for i in range(n):
            frames[i] = subject.next_frame().voltages  # intent held at (0, 0)
        # channel 0 carries u-noise (std 0.3), channel 1 v-noise (std 0.45)
        assert frames[:, 0].std() == pytest.approx(0.3, rel=0.15)
        assert frames[:, 1].std() == pytest.approx(0.45, rel=0.15)


class TestReplaySource:
    def test_streams_frames_then_none(self, tmp_path):
        cfg = small_cfg()
        subject = SyntheticSubject(
            cfg, SubjectParams(mixing_seed=0, noise_sigma=1.0), rng_for(1, "subject")
        )
        frames = [subject.next_frame() for _ in range(3)]
        path = tmp_path / "signals.csv"
        write_signal_file(path, cfg, frames)
        source = ReplaySource(path)
        out = [source.next_frame() for _ in range(4)]
        assert out[3] is None
        for orig, got in zip(frames, out):
            np.testing.assert_array_equal(orig.voltages, got.voltages)

    def test_round_trip_fidelity_1000_frames(self, tmp_path):
        cfg = small_cfg()
        subject = SyntheticSubject(
            cfg, SubjectParams(mixing_seed=0, noise_sigma=2.5), rng_for(2, "subject")
        )
        frames = [subject.next_frame() for _ in range(1000)]
        path = tmp_path / "signals.csv"
        write_signal_file(path, cfg, frames)
        source = ReplaySource(path)
        for orig in frames:
            got = source.next_frame()
            assert got.t == orig.t
            np.testing.assert_array_equal(got.voltages, orig.voltages)

    def test_config_mismatch_rejected(self, tmp_path):
        cfg = small_cfg()
        path = tmp_path / "signals.csv"
        write_signal_file(path, cfg, [])
        with pytest.raises(ConfigurationError):
            ReplaySource(path, expected_cfg=SignalConfig(n_channels=14))

    def test_malformed_row_cites_line(self, tmp_path):
        cfg = small_cfg()
        path = tmp_path / "signals.csv"
        write_signal_file(path, cfg, [])
        with open(path, "a") as fp:
            fp.write("0,1.0,2.0\n")  # 2 voltages, config says 3
        source = ReplaySource(path)
        with pytest.raises(ParseError) as exc:
            source.next_frame()
        assert exc.value.line == 3


class TestSurrogateSource:
    def _source(self):
        cfg = small_cfg()
        params = SubjectParams(mixing=[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        subject = SyntheticSubject(cfg, params, rng_for(3, "subject"))
        return SurrogateSource(subject)

    def test_fresh_input_delegates_to_subject(self):
        source = self._source()
        source.submit(0.5, 0.0, t_s=0.0)
        frame = source.next_frame()
        np.testing.assert_array_equal(frame.voltages, [0.5, 0.0, 0.0])

    def test_staleness_decays_to_rest(self):
        source = self._source()
        source.submit(0.5, 0.0, t_s=0.0)
        fs = source.cfg.sample_rate_hz
        n_one_second = int(fs)
        values = [source.next_frame().voltages[0] for _ in range(n_one_second)]
        # fresh for the first 0.5 s of frames, rest afterwards
        assert values[0] == 0.5
        assert values[int(0.5 * fs) - 1] == 0.5
        assert values[-1] == 0.0
        assert source.stale

    def test_zero_order_hold_selects_latest_message(self):
        source = self._source()
        # 60 Hz message timeline against the 128 Hz frame clock
        script = [(i / 60.0, float(i), 0.0) for i in range(12)]
        for msg in script:
            source.submit(msg[1], msg[2], t_s=msg[0])
        fs = source.cfg.sample_rate_hz
        for i in range(24):
            t_s = i / fs
            expected = max(m[1] for m in script if m[0] <= t_s)
            frame = source.next_frame()
            assert frame.voltages[0] == expected, f"frame {i} at {t_s:.4f}s"

    def test_no_input_is_rest(self):
        source = self._source()
        frame = source.next_frame()
        np.testing.assert_array_equal(frame.voltages, [0.0, 0.0, 0.0])
        assert not source.stale  # nothing ever submitted, not a stale decay


class TestScenario:
    def test_round_trip(self, tmp_path):
        scenario = Scenario(
            signal_config=SignalConfig(n_channels=4, lag_count=3),
            subject=SubjectParams(mixing_seed=2, noise_sigma=0.05),
            policy=IntentPolicy(mode="idle", effort=0.3),
            seeds={"root": 99},
        )
        path = tmp_path / "scenario.json"
        path.write_text(__import__("json").dumps(scenario.to_dict()))
        back = load_scenario(path)
        assert back == scenario

    def test_defaults_fill_missing_sections(self):
        scenario = scenario_from_dict({"seeds": {"root": 5}})
        assert scenario.signal_config.n_channels == 14
        assert scenario.root_seed == 5

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigurationError):
            scenario_from_dict({"subject": {"psychic_powers": True}})

    def test_bad_json_rejected(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text("{nope")
        with pytest.raises(ConfigurationError):
            load_scenario(path)
