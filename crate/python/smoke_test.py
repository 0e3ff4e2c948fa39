"""Smoke test for the Python bindings.

Build and install first:
    pip install --no-build-isolation ./crates/py
"""
import pathlib
import sys

import coalition

FIXTURE = pathlib.Path(__file__).resolve().parents[1] / "crates/core/tests/fixtures/worked_example.scn"


def main() -> int:
    s = coalition.Scenario.load(str(FIXTURE))
    s.validate()
    assert s.agents == ["C1", "C2"], s.agents
    assert len(s.tasks) == 8

    run = coalition.run_negotiation(s, initiator="C1")
    assert run["outcome"] == "solution", run["outcome"]
    assert run["solution"] == "E3", run["solution"]
    assert run["transcript"][-1].startswith("3\tSOLUTION"), run["transcript"][-1]
    assert run["metrics"]["structures_evaluated"] == 7

    assert coalition.brute_force_pareto(s) == ["E1", "E3", "E6"]

    g = coalition.Scenario.generate(4, 6, 0.6, seed=3)
    again = coalition.Scenario.parse(g.to_text())
    assert again.to_text() == g.to_text()
    cmp = coalition.compare_dependency_modes(g, seed=3)
    assert cmp["on"]["structures_evaluated"] <= cmp["off"]["structures_evaluated"]

    try:
        coalition.Scenario.parse("[tasks]\nT1\n[agents]\nA1\n[capabilities]\nA1 T1\n")
    except ValueError as e:
        assert "line" in str(e), e
    else:
        raise AssertionError("parse error not raised")

    print("python smoke test ok:", run["solution"], cmp["evaluated_ratio"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
