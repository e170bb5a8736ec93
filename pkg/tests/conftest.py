from __future__ import annotations

import pytest

from crcscreen.bn import load_bundled_network
from crcscreen.population import generate_population
from crcscreen.preferences import default_params
from crcscreen.screening import default_catalog


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def params():
    return default_params()


@pytest.fixture(scope="session")
def net():
    return load_bundled_network()


@pytest.fixture(scope="session")
def benchmark_profile():
    return {
        "sex": "male", "age": "44_54", "sleep": "normal",
        "physical_activity": "active", "bmi": "normal", "smoking": "non_smoker",
        "alcohol": "low", "diabetes": "no", "hypertension": "no",
        "hypercholesterolemia": "no",
    }


@pytest.fixture(scope="session")
def population_small(net):
    return generate_population(net, 5_000, seed=123)


@pytest.fixture(scope="session")
def population_full(net):
    """The 350k synthetic population used by the acceptance suite."""
    return generate_population(net, 350_000, seed=20240704)
