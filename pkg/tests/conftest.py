"""Shared fixtures: small configs, tiny synthetic corpora and the slow marker."""

import numpy as np
import pytest

from src.classifier import Classifier
from src.cvrnn import CvrnnModel
from src.ink import compute_stats, encode_corpus
from src.models import Alphabet, ClassifierConfig, CvrnnConfig
from src.synth import generate_corpus


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long training tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def abc():
    return Alphabet("abc")


@pytest.fixture
def small_cvrnn(abc):
    """H=8, K=3, D=4."""
    config = CvrnnConfig(alphabet_size=3, hidden_size=8, latent_size=4, gmm_size=4, ff_size=8, precision="float64")
    return CvrnnModel(config, abc, seed=3)


@pytest.fixture
def small_classifier(abc):
    config = ClassifierConfig(alphabet_size=3, hidden_size=6, projection_size=5, num_layers=2, precision="float64")
    return Classifier(config, abc, seed=3)


@pytest.fixture
def tiny_corpus():
    return generate_corpus("abc", authors=2, samples_per_author=3, points_per_glyph=4, seed=11, max_words=2,
                           max_word_length=3)


@pytest.fixture
def tiny_sequences(tiny_corpus):
    return encode_corpus(tiny_corpus, compute_stats(tiny_corpus))
