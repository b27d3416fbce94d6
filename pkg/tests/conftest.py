import os

from hypothesis import HealthCheck, settings

from drex.model import MB, TB, ClusterState, DataItem, StorageNode

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_nodes(afrs, capacity=TB, write_bw=None, read_bw=None, free=None):
    nodes = []
    for i, afr in enumerate(afrs):
        cap = capacity[i] if isinstance(capacity, (list, tuple)) else capacity
        wbw = write_bw[i] if write_bw is not None else (200 - 5 * i) * MB
        rbw = read_bw[i] if read_bw is not None else (300 - 5 * i) * MB
        f = free[i] if free is not None else -1
        nodes.append(StorageNode(i, cap, wbw, rbw, afr, free=f))
    return nodes


def make_state(afrs, **kw):
    return ClusterState.from_nodes(make_nodes(afrs, **kw))


def item(size=100 * MB, rt=0.9, retention=365.0, id=0):
    return DataItem(id, size, 0.0, retention, rt)


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
