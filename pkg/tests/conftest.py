import pytest

from netr.pipeline import BuildParams, build_from_files
from netr.synth import SynthConfig, generate


@pytest.fixture(scope="session")
def small_data(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    return generate(out, SynthConfig(objects=300, users=60, checkins_per_user=40, queries=40, seed=11))


@pytest.fixture(scope="session")
def small_index(small_data):
    """Deep tree (fanout 4) over a small dataset, so every code path sees several levels."""
    params = BuildParams(fanout=4, dim=8, min_pts=5, epochs=50, seed=11)
    return build_from_files(small_data["objects"], small_data["checkins"], small_data["friends"], params)


@pytest.fixture(scope="session")
def full_data(tmp_path_factory):
    out = tmp_path_factory.mktemp("full")
    return generate(out, SynthConfig(objects=1000, users=200, checkins_per_user=100, queries=100, seed=2024))


@pytest.fixture(scope="session")
def full_index(full_data):
    return build_from_files(full_data["objects"], full_data["checkins"], full_data["friends"], BuildParams(seed=2024))


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[num])
