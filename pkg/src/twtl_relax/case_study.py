"""Bundled exploration scenario: a 20-region map, a three-phase mission and three substitutions."""

from __future__ import annotations

from importlib import resources

from .env import TransitionSystem, parse_env

ZONE_A = ("s_a1", "s_a2", "s_a3", "m_a")
DEFAULT_TIMES = {"t1": 7, "t2": 3, "t3": 4, "t4": 3}


def _read(name: str) -> str:
    return resources.files(__package__).joinpath("data", name).read_text()


def environment(without_zone_a: bool = False) -> TransitionSystem:
    ts = parse_env(_read("case_study_env.json"))
    return ts.without_nodes(ZONE_A) if without_zone_a else ts


def mission(**times: int) -> str:
    values = {**DEFAULT_TIMES, **times}
    return " ".join(_read("case_study_mission.twtl").format(**values).split())


def rules_text() -> str:
    return _read("case_study_rules.txt")
