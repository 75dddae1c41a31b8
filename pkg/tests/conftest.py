import numpy as np
import pytest
from dataclasses import replace

from irtarget.config import PipelineConfig
from irtarget.pipeline import train_from_manifest
from irtarget.synth import generate_synthetic, load_spec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Two scenes per environment and split, rendered from the bundled spec."""
    spec = replace(load_spec(), training_per_environment=3, test_per_environment=2, seed=7)
    out = tmp_path_factory.mktemp("corpus")
    manifest = generate_synthetic(spec, str(out))
    return out, manifest


@pytest.fixture(scope="session")
def small_model(small_corpus):
    _, manifest = small_corpus
    return train_from_manifest(manifest, PipelineConfig())


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
