"""Bundled example: three development indicators for ten emerging countries.

Six samples per series (1990-2015 in five-year steps); c1 life expectancy,
c2 education, c3 gross national income per capita.  All criteria maximise.
"""

from __future__ import annotations

from importlib import resources

from .disagg import RankingChain
from .timeseries import TimeSeriesTensor, load_tensor

CRITERIA_NAMES = {
    "c1": "Life expectancy at birth",
    "c2": "Education",
    "c3": "Gross national income per capita",
}


def emerging_countries_path():
    return resources.files("utastart") / "data" / "emerging_countries.csv"


def emerging_countries_ranking_path():
    return resources.files("utastart") / "data" / "emerging_countries_ranking.txt"


def load_emerging_countries() -> tuple[TimeSeriesTensor, RankingChain]:
    with resources.as_file(emerging_countries_path()) as p:
        tensor = load_tensor(p)
    ranking = RankingChain.parse(emerging_countries_ranking_path().read_text())
    return tensor, ranking
