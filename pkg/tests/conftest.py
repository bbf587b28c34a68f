import os
import shutil
import tempfile
from collections import defaultdict
from pathlib import Path

import hypothesis
import pytest

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("dev", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))

# criterion number -> (title, list of (nodeid, outcome))
_ACCEPTANCE = {}
_NODE_CRITERION = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            number, title = mark.args
            _ACCEPTANCE.setdefault(number, (title, []))
            _NODE_CRITERION[item.nodeid] = number


def pytest_runtest_logreport(report):
    # one outcome per test: a failing setup/teardown counts as a failure
    if report.when != "call" and not (report.failed or report.skipped):
        return
    number = _NODE_CRITERION.get(report.nodeid)
    if number is None:
        return
    _ACCEPTANCE[number][1].append((report.nodeid, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, outcomes = _ACCEPTANCE[number]
        by_outcome = defaultdict(int)
        for _, outcome in outcomes:
            by_outcome[outcome] += 1
        if not outcomes:
            verdict = "NOT RUN"
        elif by_outcome["failed"]:
            verdict = "FAIL"
        elif by_outcome["passed"]:
            verdict = "PASS"
        else:
            verdict = "SKIP"
        tr.write_line(f"[{verdict:>7}] criterion {number}: {title} "
                      f"({by_outcome['passed']} passed, {by_outcome['failed']} failed, "
                      f"{by_outcome['skipped']} skipped)")


@pytest.fixture
def scratch(tmp_path):
    """Scratch directory for build trees; in RAM when the host has /dev/shm.

    The explorer creates several small files per config, and on slow virtual
    disks file creation rather than the explorer dominates wall time.
    """
    shm = Path("/dev/shm")
    if shm.is_dir() and os.access(shm, os.W_OK):
        d = Path(tempfile.mkdtemp(prefix="passprefix-", dir=shm))
        yield d
        shutil.rmtree(d, ignore_errors=True)
    else:
        yield tmp_path / "scratch"
