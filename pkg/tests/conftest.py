import numpy as np
import pytest

from vccoffload.bandit import ArmState


def seeded_policy(policy, stats, t_now):
    """Put ``policy`` in a mid-episode state.

    ``stats`` maps arm id -> (mean, pulls, occurrence_time); every arm is
    marked as seen in the previous period so the next ``select`` at
    ``t_now`` goes straight to the index comparison.
    """
    for arm, (mean, k, tn) in stats.items():
        policy.arms[arm] = ArmState(arm, mean, k, tn, last_seen=t_now - 1, needs_connect=False)
    policy._last_t = t_now - 1
    return policy


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES = []


def record(criterion: int, passed: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
