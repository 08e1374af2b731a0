import pytest

ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line per test: PASS if the test body finishes, FAIL otherwise."""
    lines = request.config.stash[ACCEPTANCE_KEY]
    state = {"detail": ""}

    def note(text: str):
        state["detail"] = text

    yield note
    rep = getattr(request.node, "rep_call", None)
    passed = rep is not None and rep.passed
    name = request.node.name
    lines[name] = f"{'PASS' if passed else 'FAIL'}  {request.node.function.__doc__.strip()}  {state['detail']}"


@pytest.hookimpl(wrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    if rep.when == "call":
        item.rep_call = rep
    return rep


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines, key=lambda k: int(k.split("_")[1])):
        terminalreporter.write_line(lines[key])
