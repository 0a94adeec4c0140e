"""Shared fixtures: the default simulated recording is expensive enough
to synthesize (and despike) once per session."""
import pytest

from preictal import SimulationSpec, despike_recording, synthesize_recording


@pytest.fixture(scope="session")
def default_spec():
    return SimulationSpec()


@pytest.fixture(scope="session")
def sim(default_spec):
    return synthesize_recording(default_spec)


@pytest.fixture(scope="session")
def recording(sim):
    return sim[0]


@pytest.fixture(scope="session")
def truth(sim):
    return sim[1]


@pytest.fixture(scope="session")
def despiked(recording):
    return despike_recording(recording)
