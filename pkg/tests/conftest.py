import functools

import numpy as np
import pytest

from thzunmix.preprocess import standardize
from thzunmix.synth import NoiseSpec, build_dataset, builtin_scenario


@functools.lru_cache(maxsize=None)
def dataset(name: str, sd: float = 0.0, seed: int = 0):
    sc = builtin_scenario(name)
    return build_dataset(sc, NoiseSpec(sd, sc.noise.traces_averaged), seed)


@functools.lru_cache(maxsize=None)
def standardized(name: str, sd: float = 0.0, seed: int = 0):
    return standardize(dataset(name, sd, seed).spectra)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
