import pytest

from cortexloop.session import SessionConfig, run_session
from cortexloop.signals import SignalConfig
from cortexloop.subject import IntentPolicy, Scenario, SubjectParams
from cortexloop.task import ProtocolParams


def mini_scenario(
    noise_sigma=0.05,
    seed=7,
    training_trial_s=4.0,
    test_trials=2,
    timeout_s=3.0,
    intertrial_s=0.5,
    **subject_kw,
):
    """Small, fast protocol exercising every phase."""
    return Scenario(
        signal_config=SignalConfig(),
        subject=SubjectParams(mixing_seed=1, noise_sigma=noise_sigma, **subject_kw),
        policy=IntentPolicy(mode="idle", effort=0.4),
        protocol=ProtocolParams(
            training_trials_per_axis=1,
            training_trial_s=training_trial_s,
            test_trials=test_trials,
            timeout_s=timeout_s,
            intertrial_s=intertrial_s,
        ),
        seeds={"root": seed},
    )


def ideal_scenario(test_trials, seed=2026, mode_noise=0.05, **protocol_kw):
    """The calibrated reference subject used by the acceptance experiments."""
    protocol = dict(
        training_trials_per_axis=5,
        training_trial_s=60.0,
        test_trials=test_trials,
        run_size=6,
    )
    protocol.update(protocol_kw)
    return Scenario(
        signal_config=SignalConfig(),
        subject=SubjectParams(
            mixing_seed=11,
            noise_sigma=mode_noise,
            intent_noise_sigma=0.3,
            intent_noise_pole_hz=0.2,
            asymmetry=1.5,
        ),
        policy=IntentPolicy(mode="idle", effort=0.4),
        protocol=ProtocolParams(**protocol),
        seeds={"root": seed},
    )


@pytest.fixture(scope="session")
def mini_recording(tmp_path_factory):
    """One completed mini session on disk, shared by read-side tests."""
    out = tmp_path_factory.mktemp("rec") / "mini"
    config = SessionConfig(
        scenario=mini_scenario(), test_modes=("horizontal1D",), out_dir=out
    )
    result = run_session(config)
    return out, result
