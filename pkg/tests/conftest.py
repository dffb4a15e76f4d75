import contextlib

import pytest

from hamlab import ModelParams

_ACCEPTANCE_LINES: list[str] = []


def ref_params(**changes) -> ModelParams:
    base = ModelParams(
        mu=0.05, sigma_f=(0.2, 0.0), sigma_n=(0.0, 0.3), big_z=0.5,
        alpha_f=1.0, alpha_c=1.0, p_f=0.5, p_c=0.5, beta=1.0, k=0.5,
    )
    return base.replace(**changes)


@pytest.fixture
def params_ref() -> ModelParams:
    return ref_params()


@pytest.fixture
def criterion():
    """Context manager that logs one PASS/FAIL line per acceptance criterion."""

    @contextlib.contextmanager
    def _run(label: str):
        try:
            yield
        except BaseException as exc:
            _ACCEPTANCE_LINES.append(f"FAIL  {label}  ({type(exc).__name__}: {exc})".splitlines()[0])
            raise
        _ACCEPTANCE_LINES.append(f"PASS  {label}")

    return _run


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
