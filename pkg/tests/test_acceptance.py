"""Acceptance suite: every criterion at its stated tolerance, one line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the criterion lines.
"""

import time

import numpy as np

from conftest import ideal_scenario, mini_scenario
from cortexloop.decoder import TrainingSet, fit_decoder
from cortexloop.errors import FramingError, ProtocolError
from cortexloop.report import activation_flags, count_gaps
from cortexloop.robot import (
    CANONICAL_MAP,
    Gesture,
    GestureCommand,
    decode_command,
    encode_command,
    map_online,
)
from cortexloop.session import SessionConfig, replay_session, run_session
from cortexloop.signals import CausalBandFilter, SignalConfig, analytic_cascade_gain

INTENT_SCALE = 0.3  # RMS of the training reference velocity


def check(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


class TestDecoderRecovery:
    def test_noiseless_recovery_within_budget(self):
        scenario = ideal_scenario(test_trials=0)
        # noiseless: strip every noise knob, keep the full-length protocol
        from cortexloop.subject import SubjectParams

        noiseless = SubjectParams(mixing_seed=11)
        scenario = type(scenario)(
            signal_config=scenario.signal_config,
            subject=noiseless,
            policy=scenario.policy,
            protocol=scenario.protocol,
            seeds=scenario.seeds,
        )
        config = SessionConfig(
            scenario=scenario, test_modes=(), clock="max_speed", ridge_lambda=1e-9
        )
        t0 = time.monotonic()
        result = run_session(config)
        elapsed = time.monotonic() - t0
        fr = result.fit_report
        ok = (
            fr.pearson_r_x >= 0.999
            and fr.pearson_r_y >= 0.999
            and fr.rmse_x <= 1e-3 * INTENT_SCALE
            and fr.rmse_y <= 1e-3 * INTENT_SCALE
            and elapsed < 10.0
        )
        check(
            "decoder-recovery",
            ok,
            f"r=({fr.pearson_r_x:.6f}, {fr.pearson_r_y:.6f}), "
            f"rmse=({fr.rmse_x:.2e}, {fr.rmse_y:.2e}), {elapsed:.1f}s",
        )
        assert fr.n_rows == 2 * 5 * (60 * 128 - 5)  # 38,375 rows per axis


class TestOracleEquivalence:
    def test_ols_equals_normal_equations(self):
        rng = np.random.default_rng(7)
        cfg = SignalConfig(n_channels=3, lag_count=1)
        X = np.empty((50, cfg.feature_length))
        X[:, 0] = 1.0
        X[:, 1:] = rng.normal(size=(50, cfg.feature_length - 1))
        u = rng.normal(size=50)
        v = rng.normal(size=50)
        model = fit_decoder(
            TrainingSet(features=X, u=u, v=v, trial_ids=[0], cfg=cfg)
        )
        brute = np.linalg.solve(X.T @ X, X.T @ np.column_stack([u, v]))
        err = max(
            np.max(np.abs(model.axis_x - brute[:, 0])),
            np.max(np.abs(model.axis_y - brute[:, 1])),
        )
        check("oracle-equivalence", err < 1e-9, f"max-norm {err:.2e}")


class TestTable1Analogue:
    def test_horizontal_and_vertical_success(self):
        t0 = time.monotonic()
        horizontal = run_session(
            SessionConfig(
                scenario=ideal_scenario(test_trials=24),
                test_modes=("horizontal1D",),
                clock="max_speed",
            )
        )
        h_elapsed = time.monotonic() - t0
        t0 = time.monotonic()
        vertical = run_session(
            SessionConfig(
                scenario=ideal_scenario(test_trials=30),
                test_modes=("vertical1D",),
                clock="max_speed",
            )
        )
        v_elapsed = time.monotonic() - t0
        h = horizontal.summary["combined"]["overall"]
        v = vertical.summary["combined"]["overall"]
        h_rate, v_rate = h["success_rate"], v["success_rate"]
        ok = (
            h_rate >= 0.95
            and v_rate < h_rate
            and v_rate >= 0.60
            and h_elapsed < 60.0
            and v_elapsed < 60.0
        )
        check(
            "table1-analogue",
            ok,
            f"H {h['n_hits']}/{h['n_trials']} ({h_rate:.3f}) in {h_elapsed:.1f}s; "
            f"V {v['n_hits']}/{v['n_trials']} ({v_rate:.3f}) in {v_elapsed:.1f}s",
        )


class TestSnrMonotonicity:
    def test_success_non_increasing_in_noise(self):
        rates = []
        for sigma in (0.05, 0.2, 0.8, 3.2):
            result = run_session(
                SessionConfig(
                    scenario=ideal_scenario(test_trials=48, mode_noise=sigma),
                    test_modes=("horizontal1D",),
                    clock="max_speed",
                    record_signals=False,
                )
            )
            rates.append(result.summary["combined"]["overall"]["success_rate"])
        non_increasing = all(a >= b for a, b in zip(rates, rates[1:]))
        ok = non_increasing and rates[-1] <= 0.50
        check(
            "snr-monotonicity",
            ok,
            "rates " + ", ".join(f"{r:.3f}" for r in rates),
        )


class TestFilterOracle:
    def test_cascade_and_dc_rejection(self):
        cfg = SignalConfig(n_channels=1, lag_count=0)
        worst_db = 0.0
        for f in np.geomspace(0.05, 30.0, 10):
            filt = CausalBandFilter(cfg)
            fs = cfg.sample_rate_hz
            n = int(round((15.0 + max(2 / f, 2.0)) * fs))
            t = np.arange(n)
            y = filt.process_block(np.sin(2 * np.pi * f * t / fs)[:, None])[:, 0]
            keep = t / fs >= 15.0
            tt = t[keep] / fs
            basis = np.column_stack(
                [np.cos(2 * np.pi * f * tt), np.sin(2 * np.pi * f * tt)]
            )
            coef, *_ = np.linalg.lstsq(basis, y[keep], rcond=None)
            measured = float(np.hypot(*coef))
            expected = analytic_cascade_gain(f, cfg)
            dev = abs(20 * np.log10(measured / expected))
            worst_db = max(worst_db, dev)
        filt = CausalBandFilter(cfg)
        dc = filt.process_block(np.ones((20 * 128, 1)))[-1, 0]
        dc_db = 20 * np.log10(max(abs(dc), 1e-300))
        ok = worst_db < 0.5 and dc_db < -40.0
        check(
            "filter-oracle", ok, f"worst probe dev {worst_db:.3f} dB, DC {dc_db:.0f} dB"
        )


class TestReplayDeterminism:
    def test_byte_identical_streams(self, tmp_path):
        out = tmp_path / "original"
        run_session(
            SessionConfig(
                scenario=mini_scenario(seed=404),
                test_modes=("full2D",),
                clock="max_speed",
                out_dir=out,
            )
        )
        replay_out = tmp_path / "replayed"
        replay_session(out, out_dir=replay_out)
        mismatches = [
            name
            for name in ("events.jsonl", "decoded.csv")
            if (out / name).read_bytes() != (replay_out / name).read_bytes()
        ]
        check(
            "replay-determinism",
            not mismatches,
            "event log and decoded stream byte-identical"
            if not mismatches
            else f"mismatch in {mismatches}",
        )


class TestRobotProtocol:
    def test_round_trip_and_rejection_and_table(self):
        rng = np.random.default_rng(99)
        n = 100_000
        gestures = list(Gesture)
        gid = rng.integers(0, 5, size=n)
        rgb = rng.integers(0, 256, size=(n, 3))
        seq = rng.integers(0, 65536, size=n)
        failures = 0
        for i in range(n):
            cmd = GestureCommand(
                gestures[gid[i]],
                (int(rgb[i, 0]), int(rgb[i, 1]), int(rgb[i, 2])),
                int(seq[i]),
            )
            if decode_command(encode_command(cmd)) != cmd:
                failures += 1

        rejected = 0
        base = encode_command(GestureCommand(Gesture.BOTH_HANDS, (0, 255, 255), 77))
        for magic in range(256):
            if magic == 0xA5:
                continue
            try:
                decode_command(bytes([magic]) + base[1:])
            except ProtocolError:
                rejected += 1
        for version in range(256):
            if version == 0x01:
                continue
            try:
                decode_command(bytes([base[0], version]) + base[2:])
            except ProtocolError:
                rejected += 1
        for length in list(range(0, 8)) + list(range(9, 17)):
            try:
                decode_command((base * 3)[:length])
            except FramingError:
                rejected += 1

        table_ok = all(
            (map_online(d, True).gesture, map_online(d, True).eye_rgb) == pair
            for d, pair in CANONICAL_MAP.items()
        ) and all(map_online(d, False).gesture == Gesture.IDLE for d in CANONICAL_MAP)

        ok = failures == 0 and rejected == 255 + 255 + 16 and table_ok
        check(
            "robot-protocol",
            ok,
            f"{n} round trips, {failures} failures; {rejected}/526 corruptions "
            f"rejected; canonical table {'ok' if table_ok else 'BROKEN'}",
        )


class TestActivationTimeline:
    def test_two_wrong_direction_intervals_two_gaps(self):
        dt = 1 / 16
        decoded = (
            [(0.4, 0.0)] * 24        # toward RT
            + [(-0.3, 0.0)] * 8      # wrong direction
            + [(0.4, 0.0)] * 24
            + [(-0.25, 0.0)] * 6     # wrong again
            + [(0.4, 0.0)] * 24
        )
        flags = activation_flags(decoded, "RT")
        gaps = count_gaps(flags)
        check("activation-timeline", gaps == 2, f"{gaps} gaps from 2 wrong intervals")


class TestLoopLatency:
    def test_p99_frame_to_command_under_10ms(self):
        scenario = mini_scenario(
            seed=5,
            training_trial_s=2.0,
            test_trials=6,
            timeout_s=2.0,
            intertrial_s=0.5,
        )
        config = SessionConfig(
            scenario=scenario, test_modes=("horizontal1D",), clock="realtime"
        )
        result = run_session(config)
        latencies = np.array(result.latencies_ms)
        p99 = float(np.percentile(latencies, 99))
        ok = p99 < 10.0 and len(latencies) >= 100
        check(
            "loop-latency",
            ok,
            f"p99 {p99:.3f} ms over {len(latencies)} ticks "
            f"(median {np.median(latencies):.3f} ms)",
        )
