import numpy as np
import pytest
from hypothesis import settings

from charstyle.corpus_io import Corpus, Utterance

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def make_corpus(character, token_lists, start=0):
    utts = tuple(Utterance(f"{character}{start + i}", tuple(toks), character)
                 for i, toks in enumerate(token_lists))
    return Corpus(character, utts)


@pytest.fixture
def corpus_factory():
    return make_corpus


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy_workspace(tmp_path_factory):
    from charstyle.toy import write_toy_workspace
    return write_toy_workspace(tmp_path_factory.mktemp("toy"), seed=0)
