import numpy as np
import pytest

from catprobe.instances import CategoricalInstance, Dataset


@pytest.fixture
def small_instance():
    return CategoricalInstance(
        id="a",
        true_label=0,
        values=(0, 1, 2),
        candidates=((0, 2), (1, 3), (2, 4, 5)),
    )


def random_instance(rng: np.random.Generator, n_max=6, alt_max=3, num_classes=2):
    """Random well-formed instance; per-feature alternative counts vary."""
    n = int(rng.integers(1, n_max + 1))
    values = []
    candidates = []
    for _ in range(n):
        alts = int(rng.integers(0, alt_max + 1))
        cand = rng.choice(16, size=alts + 1, replace=False).tolist()
        values.append(int(cand[0]))
        candidates.append(tuple(sorted(int(c) for c in cand)))
    return CategoricalInstance(
        id=f"rand-{rng.integers(1 << 30)}",
        true_label=int(rng.integers(0, num_classes)),
        values=tuple(values),
        candidates=tuple(candidates),
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per release criterion in test_acceptance.py."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            verdict = "PASS" if outcome == "passed" else "FAIL"
            if lines.get(name) != "FAIL":
                lines[name] = verdict
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name in sorted(lines):
            terminalreporter.write_line(f"{lines[name]}: {name}")
