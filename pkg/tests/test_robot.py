import numpy as np
import pytest
from hypothesis import given, strategies as st

from cortexloop.errors import (
    ConfigurationError,
    FramingError,
    ProtocolError,
    UnknownCommandError,
)
from cortexloop.robot import (
    CANONICAL_MAP,
    CommandSender,
    Gesture,
    GestureCommand,
    RobotState,
    UdpActuatorServer,
    UdpTransport,
    VirtualActuator,
    activation_gate,
    apply_command,
    decode_command,
    encode_command,
    map_offline,
    map_online,
)


class TestOfflineMapping:
    def test_right_position(self):
        cmd = map_offline((0.4, 0.0), "horizontal1D")
        assert cmd.gesture == Gesture.RIGHT_HAND
        assert cmd.eye_rgb == (0, 255, 0)

    def test_left_position(self):
        cmd = map_offline((-0.4, 0.0), "horizontal1D")
        assert cmd.gesture == Gesture.LEFT_HAND
        assert cmd.eye_rgb == (0, 0, 255)

    def test_bottom_position(self):
        cmd = map_offline((0.0, -0.6), "vertical1D")
        assert cmd.gesture == Gesture.HEAD_SHAKE
        assert cmd.eye_rgb == (255, 0, 0)

    def test_top_position(self):
        cmd = map_offline((0.0, 0.3), "vertical1D")
        assert cmd.gesture == Gesture.BOTH_HANDS
        assert cmd.eye_rgb == (0, 255, 255)

    def test_dead_zone(self):
        cmd = map_offline((0.001, 0.0), "horizontal1D", dead_zone=0.01)
        assert cmd.gesture == Gesture.IDLE

    def test_2d_mode_rejected(self):
        with pytest.raises(ConfigurationError):
            map_offline((0.5, 0.5), "full2D")


class TestActivationGate:
    def test_correct_direction_activates(self):
        assert activation_gate((0.3, 0.9), "RT")

    def test_wrong_direction_inactive(self):
        assert not activation_gate((-0.3, 0.0), "RT")

    def test_below_dead_zone_inactive(self):
        assert not activation_gate((0.5, 0.005), "TT", dead_zone=0.02)

    def test_cardinal_axis_only(self):
        # huge off-axis component must not matter
        assert activation_gate((-5.0, 0.1), "TT")
        assert not activation_gate((5.0, -0.1), "TT")

    def test_bottom_target_wants_negative_v(self):
        assert activation_gate((0.0, -0.5), "BT")
        assert not activation_gate((0.0, 0.5), "BT")


class TestOnlineMapping:
    def test_top_active(self):
        cmd = map_online("TT", True)
        assert cmd.gesture == Gesture.BOTH_HANDS
        assert cmd.eye_rgb == (0, 255, 255)

    def test_inactive_is_idle(self):
        assert map_online("BT", False).gesture == Gesture.IDLE

    def test_exhaustive_canonical_table(self):
        for direction, (gesture, rgb) in CANONICAL_MAP.items():
            cmd = map_online(direction, True)
            assert (cmd.gesture, cmd.eye_rgb) == (gesture, rgb)

    def test_never_outside_canonical_table(self):
        pairs = {(g, rgb) for g, rgb in CANONICAL_MAP.values()}
        for direction in CANONICAL_MAP:
            for active in (True, False):
                cmd = map_online(direction, active)
                if cmd.gesture != Gesture.IDLE:
                    assert (cmd.gesture, cmd.eye_rgb) in pairs


class TestCodec:
    def test_right_hand_layout(self):
        cmd = GestureCommand(Gesture.RIGHT_HAND, (0, 255, 0), 1)
        assert encode_command(cmd) == bytes.fromhex("A50101 00FF00 0001".replace(" ", ""))

    def test_head_shake_max_seq(self):
        cmd = GestureCommand(Gesture.HEAD_SHAKE, (255, 0, 0), 65535)
        assert encode_command(cmd) == bytes.fromhex("A50104 FF0000 FFFF".replace(" ", ""))

    def test_decode_idle(self):
        cmd = decode_command(bytes.fromhex("A501000000000000"))
        assert cmd == GestureCommand(Gesture.IDLE, (0, 0, 0), 0)

    def test_round_trip_100k_random_cases(self):
        rng = np.random.default_rng(99)
        gestures = list(Gesture)
        n = 100_000
        gid = rng.integers(0, 5, size=n)
        rgb = rng.integers(0, 256, size=(n, 3))
        seq = rng.integers(0, 65536, size=n)
        for i in range(n):
            cmd = GestureCommand(
                gestures[gid[i]], (int(rgb[i, 0]), int(rgb[i, 1]), int(rgb[i, 2])), int(seq[i])
            )
            assert decode_command(encode_command(cmd)) == cmd

    def test_wrong_length_framing_error(self):
        with pytest.raises(FramingError):
            decode_command(bytes(7))
        with pytest.raises(FramingError):
            decode_command(bytes(9))

    def test_wrong_version_protocol_error(self):
        with pytest.raises(ProtocolError):
            decode_command(bytes.fromhex("A502000000000000"))

    def test_wrong_magic_protocol_error(self):
        with pytest.raises(ProtocolError):
            decode_command(bytes.fromhex("A401000000000000"))

    def test_unknown_gesture_id(self):
        with pytest.raises(UnknownCommandError):
            decode_command(bytes.fromhex("A501050000000000"))

    @given(
        gesture=st.sampled_from(list(Gesture)),
        rgb=st.tuples(*[st.integers(0, 255)] * 3),
        seq=st.integers(0, 65535),
    )
    def test_round_trip_property(self, gesture, rgb, seq):
        cmd = GestureCommand(gesture, rgb, seq)
        assert decode_command(encode_command(cmd)) == cmd

    @given(
        gesture=st.sampled_from(list(Gesture)),
        rgb=st.tuples(*[st.integers(0, 255)] * 3),
        seq=st.integers(0, 65535),
        field=st.sampled_from(["magic", "version", "length"]),
        data=st.data(),
    )
    def test_corruptions_rejected(self, gesture, rgb, seq, field, data):
        raw = bytearray(encode_command(GestureCommand(gesture, rgb, seq)))
        if field == "magic":
            raw[0] = data.draw(st.integers(0, 255).filter(lambda b: b != 0xA5))
            expected = ProtocolError
        elif field == "version":
            raw[1] = data.draw(st.integers(0, 255).filter(lambda b: b != 0x01))
            expected = ProtocolError
        else:
            cut = data.draw(st.integers(0, 16).filter(lambda n: n != 8))
            raw = (bytes(raw) * 3)[:cut]
            expected = FramingError
        with pytest.raises(expected):
            decode_command(bytes(raw))


class TestApplyCommand:
    def test_activation_sets_motion_and_eyes(self):
        state = RobotState()
        cmd = GestureCommand(Gesture.RIGHT_HAND, (0, 255, 0), 1)
        out = apply_command(state, cmd, now=0.5)
        assert out.moving
        assert out.eye_rgb == (0, 255, 0)
        assert out.gesture == Gesture.RIGHT_HAND

    def test_stale_seq_ignored(self):
        state = RobotState()
        state = apply_command(state, GestureCommand(Gesture.RIGHT_HAND, (0, 255, 0), 1), 0.1)
        out = apply_command(state, GestureCommand(Gesture.LEFT_HAND, (0, 0, 255), 0), 0.2)
        assert out is state

    def test_duplicate_seq_ignored(self):
        state = apply_command(
            RobotState(), GestureCommand(Gesture.RIGHT_HAND, (0, 255, 0), 5), 0.1
        )
        again = apply_command(state, GestureCommand(Gesture.LEFT_HAND, (0, 0, 255), 5), 0.2)
        assert again is state

    def test_seq_wrap_accepts_forward_jump(self):
        state = apply_command(
            RobotState(), GestureCommand(Gesture.RIGHT_HAND, (0, 255, 0), 65535), 0.1
        )
        out = apply_command(state, GestureCommand(Gesture.LEFT_HAND, (0, 0, 255), 0), 0.2)
        assert out.gesture == Gesture.LEFT_HAND

    def test_idle_holds_eye_color(self):
        state = apply_command(
            RobotState(), GestureCommand(Gesture.RIGHT_HAND, (0, 255, 0), 1), 0.1
        )
        out = apply_command(state, GestureCommand(Gesture.IDLE, (0, 0, 0), 2), 0.2)
        assert out.gesture == Gesture.IDLE
        assert not out.moving
        assert out.eye_rgb == (0, 255, 0)

    def test_alternating_stream_toggles_motion(self):
        state = RobotState()
        seq = 0
        motion = []
        for active in [True, False, True, False, True]:
            cmd = map_online("RT", active, seq=seq)
            state = apply_command(state, cmd, now=seq / 16)
            motion.append(state.moving)
            seq += 1
        assert motion == [True, False, True, False, True]

    def test_pure_fold_same_stream_same_trajectory(self):
        rng = np.random.default_rng(5)
        stream = [
            GestureCommand(Gesture(int(rng.integers(0, 5))),
                           tuple(int(c) for c in rng.integers(0, 256, 3)), seq)
            for seq in range(64)
        ]
        def run():
            st_, traj = RobotState(), []
            for i, cmd in enumerate(stream):
                st_ = apply_command(st_, cmd, now=i / 16)
                traj.append((st_.gesture, st_.eye_rgb, st_.moving))
            return traj
        assert run() == run()


class TestVirtualActuator:
    def test_feed_updates_state_and_log(self, tmp_path):
        log = tmp_path / "robot.jsonl"
        act = VirtualActuator(log)
        act.feed(encode_command(GestureCommand(Gesture.BOTH_HANDS, (0, 255, 255), 0)), 0.0)
        act.feed(encode_command(GestureCommand(Gesture.IDLE, (0, 0, 0), 1)), 0.0625)
        act.close()
        lines = log.read_text().splitlines()
        assert len(lines) == 2
        assert act.state.gesture == Gesture.IDLE
        assert act.state.eye_rgb == (0, 255, 255)

    def test_bad_datagrams_counted_not_fatal(self):
        act = VirtualActuator()
        act.feed(b"\x00" * 8, 0.0)
        act.feed(b"\x00" * 3, 0.1)
        act.feed(bytes.fromhex("A501070000000000"), 0.2)
        assert act.error_counts == {"framing": 1, "protocol": 1, "unknown_command": 1}
        assert act.state.gesture == Gesture.IDLE

    def test_udp_server_round_trip(self):
        server = UdpActuatorServer("127.0.0.1", 0)
        server.start()
        try:
            transport = UdpTransport(*server.addr)
            sender = CommandSender(transport)
            sender.send(Gesture.RIGHT_HAND, (0, 255, 0))
            import time

            deadline = time.monotonic() + 2.0
            while time.monotonic() < deadline:
                if server.actuator.state.gesture == Gesture.RIGHT_HAND:
                    break
                time.sleep(0.01)
            assert server.actuator.state.gesture == Gesture.RIGHT_HAND
            transport.close()
        finally:
            server.stop()


class TestServoReference:
    def test_table_covers_every_gesture_with_twelve_channels(self):
        from cortexloop.robot import GESTURE_SERVO_ANGLES

        assert set(GESTURE_SERVO_ANGLES) == set(Gesture)
        for angles in GESTURE_SERVO_ANGLES.values():
            assert len(angles) == 12
            assert all(0 <= a <= 180 for a in angles)


class TestCommandSender:
    def test_seq_increments_and_wraps(self):
        sent = []
        sender = CommandSender(sent.append)
        sender._seq = 65534
        for _ in range(4):
            sender.send(Gesture.IDLE, (0, 0, 0))
        seqs = [decode_command(d).seq for d in sent]
        assert seqs == [65534, 65535, 0, 1]
