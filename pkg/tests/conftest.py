import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_pose(rng, planar=False, max_angle=np.pi * 0.9, scale=0.3):
    from riseg.se3 import Pose, exp_se3, Twist

    if planar:
        return Pose.planar(rng.uniform(-max_angle, max_angle), *rng.uniform(-scale, scale, 2))
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return exp_se3(Twist(axis * rng.uniform(0, max_angle), rng.uniform(-scale, scale, 3)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def noiseless_model():
    """Grouping model trained on exact flow, shared across tests."""
    from riseg.config import RunConfig
    from riseg.training import train_command

    return train_command(20, seed=11, cfg=RunConfig.from_dict(noise_sigma=0.0))


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(tag, text): an acceptance criterion, reported at the end of the run")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        tag, text = mark.args
        detail = dict(rep.user_properties).get("detail")
        _CRITERIA[tag] = (rep.passed, text if detail is None else f"{text} [{detail}]")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_CRITERIA):
        ok, text = _CRITERIA[tag]
        terminalreporter.write_line(f"{tag} {'PASS' if ok else 'FAIL'}: {text}")
