import numpy as np
import pytest

from magnetic_gaps.fields import PeriodicScalarField, save_field


@pytest.fixture(scope="session")
def test_field():
    """B = 2pi(1 - cos(2pi x) cos(2pi y)): two zeros of order 2, flux 2pi."""
    return PeriodicScalarField.from_modes(
        {(0, 0): 2 * np.pi, (1, 1): -np.pi / 2, (1, -1): -np.pi / 2}
    )


@pytest.fixture()
def test_field_file(test_field, tmp_path):
    path = tmp_path / "test_field.txt"
    save_field(test_field, path)
    return path


@pytest.fixture(scope="session")
def radial_k2_form():
    """Leading Taylor form of the test field at its zeros: 4 pi^3 |X|^2."""
    c = 4 * np.pi**3
    return {(2, 0): c, (1, 1): 0.0, (0, 2): c}
