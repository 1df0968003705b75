import numpy as np
import pytest

from faukit import GenConfig, builtin_vocabulary, default_rules, generate_dataset, split_dataset


@pytest.fixture(scope="session")
def rules():
    return default_rules()


@pytest.fixture(scope="session")
def disfa8():
    return builtin_vocabulary("disfa8")


@pytest.fixture(scope="session")
def heatmap10():
    return builtin_vocabulary("heatmap10")


@pytest.fixture(scope="session")
def clean_probvec(rules, disfa8):
    """Small clean probvec dataset shared by read-only tests."""
    return generate_dataset(GenConfig(n_samples=120, seed=9), rules, disfa8, "probvec")


@pytest.fixture(scope="session")
def clean_probvec_splits(clean_probvec):
    return split_dataset(clean_probvec, (0.7, 0.15, 0.15), 9)


def assert_params_equal(a, b):
    assert len(a) == len(b)
    for (wa, ba), (wb, bb) in zip(a, b):
        np.testing.assert_array_equal(wa, wb)
        np.testing.assert_array_equal(ba, bb)
