import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("amem", deadline=None, max_examples=40)
settings.load_profile("amem")

DATA = __import__("pathlib").Path(__file__).parent / "data"
MNIST_IMAGES = DATA / "mnist-images.idx3-ubyte"
MNIST_LABELS = DATA / "mnist-labels.idx1-ubyte"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def mnist_paths():
    return str(MNIST_IMAGES), str(MNIST_LABELS)


# PASS/FAIL lines from tests/test_acceptance.py, repeated after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
