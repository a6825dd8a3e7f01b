import numpy as np
import pytest

from lstmsent.model import ModelConfig, init_params
from lstmsent.numerics import Rng64

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def tiny_config():
    return ModelConfig(vocab_size=50, embed_dim=8, hidden=12, seq_len=6)


def random_batch(config, n, seed, k=2):
    rng = Rng64(seed)
    ids = np.array([[rng.randbelow(config.vocab_size) for _ in range(config.seq_len)] for _ in range(n)])
    y = np.array([rng.randbelow(k) for _ in range(n)])
    return ids, y


@pytest.fixture
def tiny_model(tiny_config):
    return init_params(tiny_config, 3)
