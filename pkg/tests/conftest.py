import pytest

from helpers import TOY_CONFIG, TOY_PARSES, TOY_RAW, TOY_RELATIONS
from shallowd import pipeline
from shallowd.config import load_config
from shallowd.corpus import load_corpus, load_relations


@pytest.fixture(scope="session")
def toy_docs():
    return load_corpus(TOY_PARSES, TOY_RAW)


@pytest.fixture(scope="session")
def toy_gold():
    return load_relations(TOY_RELATIONS)


@pytest.fixture(scope="session")
def toy_config():
    return load_config(TOY_CONFIG)


@pytest.fixture(scope="session")
def toy_bundle(toy_docs, toy_gold, toy_config):
    return pipeline.train_all(toy_docs, toy_gold, toy_config)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, verdict, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{verdict} {criterion}: {detail}")
