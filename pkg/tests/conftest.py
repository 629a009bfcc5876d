import numpy as np
import pytest

from bubble_anfis.dataset import GridSpec, generate_surrogate
from bubble_anfis.fis import InputSpec, build_model
from bubble_anfis.membership import MfFamily, project_params

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def surrogate():
    return generate_surrogate()


@pytest.fixture(scope="session")
def small_surrogate():
    return generate_surrogate(GridSpec(n_r=4, n_theta=6, n_z=4, velocities=(0.004, 0.006, 0.008)))


def random_model(rng, n_inputs=2, mf_count=2, family=MfFamily.GAUSS, jitter=0.05):
    """Unnormalized model on [0, 1]^n with jittered premises and random consequents."""
    specs = [InputSpec(f"u{k}", 0.0, 1.0) for k in range(n_inputs)]
    model = build_model(specs, mf_count, family, "out", normalize=False)
    premise = []
    for bank in model.banks:
        p = bank.params
        p = p + jitter * rng.normal(size=p.shape) * np.maximum(np.abs(p), 0.1)
        premise.append(project_params(bank.family, p, bank.lo, bank.hi))
    consequents = rng.normal(size=model.consequents.shape)
    return model.replace(premise=premise, consequents=consequents)
