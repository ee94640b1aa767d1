import pytest

from oar_link.codec import Codebook
from oar_link.vocab import builtin_vocabulary

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.fixture(scope="session")
def vocab():
    return builtin_vocabulary()


@pytest.fixture(scope="session")
def codebook(vocab):
    return Codebook.from_vocab(vocab, seed=0)


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    n, title = marker
    prev = _ACCEPTANCE.get(n, (title, "PASS"))
    if report.failed:
        _ACCEPTANCE[n] = (title, "FAIL")
    elif report.when == "call" and report.skipped:
        _ACCEPTANCE[n] = (title, "SKIP")
    else:
        _ACCEPTANCE.setdefault(n, prev)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep._criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {title}")
