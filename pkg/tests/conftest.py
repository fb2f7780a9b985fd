import os

import pytest

from Cosim.scenario import load_config

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCENARIOS = os.path.join(ROOT, 'Programs', 'Scenarios')
TRACES = os.path.join(ROOT, 'Programs', 'Traces')


def scenario(name):
    return os.path.join(SCENARIOS, name)


@pytest.fixture(scope='session')
def reference():
    return load_config(scenario('reference.json'))


@pytest.fixture
def write(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return str(path)
    return write
