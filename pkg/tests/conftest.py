import numpy as np
import pytest
from hypothesis import strategies as st

from parsicache.oracles import Oracle, QueryRecord
from parsicache.trace import build_trace


class ScriptedOracle(Oracle):
    """Returns fixed predictions; actuals come from the table when given."""

    def __init__(self, trace, predictions, actuals=None):
        super().__init__(trace)
        self.predictions = predictions
        self.actuals = actuals or {}

    def query(self, page, t):
        actual = self.actuals.get(page, self.trace.next_request_after(page, t))
        tau = self.predictions[page]
        self.log.append(QueryRecord(page, t, tau, actual))
        return tau


class FunctionOracle(Oracle):
    """Prediction computed from (page, t, actual) by a plain function."""

    def __init__(self, trace, fn):
        super().__init__(trace)
        self.fn = fn

    def predict(self, page, t, actual):
        return self.fn(page, t, actual)


def random_trace(rng, max_len=12, max_universe=6):
    n = int(rng.integers(1, max_len + 1))
    u = int(rng.integers(1, max_universe + 1))
    return build_trace(rng.integers(0, u, size=n).tolist())


def fuzz_instances(count, seed=0, max_len=12, max_k=3, max_universe=6):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        out.append((random_trace(rng, max_len, max_universe), int(rng.integers(1, max_k + 1))))
    return out


def random_log(rng, n, spread=30, integer=True):
    recs = []
    for i in range(n):
        t = int(rng.integers(1, spread))
        a = t + int(rng.integers(1, spread))
        if integer:
            tau = int(rng.integers(0, 2 * spread))
        else:
            tau = float(rng.uniform(0, 2 * spread))
        recs.append(QueryRecord(int(rng.integers(0, 8)), t, tau, a))
    return recs


def domain_log(rng, max_n=40, integer=True):
    """Query set as produced by a simulation: distinct actual times below the
    sentinel, any number of never-again queries sharing the sentinel."""
    sentinel = int(rng.integers(3, 80))
    n = int(rng.integers(0, min(sentinel - 1, max_n) + 1))
    actuals = rng.choice(np.arange(1, sentinel), size=n, replace=False).tolist()
    actuals += [sentinel] * int(rng.integers(0, 6))
    recs = []
    for i, a in enumerate(actuals):
        if integer:
            tau = int(rng.integers(0, 2 * sentinel))
        else:
            tau = float(rng.uniform(0, 2 * sentinel))
        recs.append(QueryRecord(i, 0, tau, int(a)))
    return recs


traces = st.lists(st.integers(0, 7), min_size=1, max_size=40).map(build_trace)
small_traces = st.lists(st.integers(0, 5), min_size=1, max_size=12).map(build_trace)


# acceptance outcomes, filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {detail}")


@pytest.fixture
def zipf_small():
    from parsicache.instances import zipf_trace

    return zipf_trace(3000, 200, 0.8, seed=7)
