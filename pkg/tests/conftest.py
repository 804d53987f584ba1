import numpy as np
import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def acceptance_report():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def record(name, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def face_set():
    from verifyface.corpus import face_corpus
    return face_corpus(subjects=6, seed=3)


@pytest.fixture(scope="session")
def trained(face_set):
    """(model, curve) for the small session corpus with default settings."""
    from verifyface.recognizer import train_pipeline
    return train_pipeline(face_set.train, validation_samples=face_set.validation)
