import pytest

from regwalks.graphs import complete_graph, generate_regular, petersen_graph

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def k4():
    return complete_graph(4)


@pytest.fixture
def petersen():
    return petersen_graph()


@pytest.fixture
def small_random_graphs():
    shapes = [(10, 3), (12, 3), (16, 3), (20, 3), (9, 4), (12, 4), (14, 5), (30, 3), (24, 4), (20, 5)]
    return [generate_regular(V, d, seed=100 + k) for k, (V, d) in enumerate(shapes)]


@pytest.fixture
def acceptance_report():
    def record(number, name: str, ok: bool, detail: str):
        _ACCEPTANCE_LINES.append(
            f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} -- {detail}"
        )
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
