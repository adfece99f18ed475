"""The ten acceptance criteria at full sample sizes and stated tolerances.

Each test prints one ``[PASS]``/``[FAIL]`` line; the lines are also repeated
in a summary section at the end of the pytest run. Running this file directly
(``python3 tests/test_acceptance.py``) prints the same lines without pytest.
"""
import pytest

from ehcrn.acceptance import CHECKS

RESULT_LINES: dict[int, str] = {}


def _run(number: int):
    res = CHECKS[number](quick=False)
    RESULT_LINES[number] = res.line()
    print(res.line())
    return res


@pytest.mark.slow
@pytest.mark.parametrize(
    "number",
    sorted(CHECKS),
    ids=[
        "c01_oracle_equivalence",
        "c02_full_frame_equal_rates",
        "c03_constraint_validity",
        "c04_dominance",
        "c05_interference_saturation",
        "c06_scenario_ordering",
        "c07_diminishing_hop_gains",
        "c08_joint_concavity",
        "c09_numerics",
        "c10_energy_utilization",
    ],
)
def test_criterion(number):
    res = _run(number)
    assert res.passed, res.line()


if __name__ == "__main__":
    failed = sum(not _run(n).passed for n in sorted(CHECKS))
    raise SystemExit(1 if failed else 0)
