import pytest

from utastart.datasets import load_emerging_countries
from utastart.disagg import DisaggConfig, fit
from utastart.timeseries import extract_measures
from verdicts import VERDICTS


@pytest.fixture(scope="session")
def ref_data():
    return load_emerging_countries()


@pytest.fixture(scope="session")
def ref_measures(ref_data):
    tensor, _ = ref_data
    return extract_measures(tensor, ["mean", "slope"])


@pytest.fixture(scope="session")
def ref_ranking(ref_data):
    return ref_data[1]


@pytest.fixture(scope="session")
def ref_model(ref_measures, ref_ranking):
    return fit(ref_measures, ref_ranking, DisaggConfig())


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[n])
