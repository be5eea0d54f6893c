import numpy as np
import pytest
from scipy import stats

from xrdenoise import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    prev = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(prev)


def poisson_gof_pvalue(draws, lam):
    """Chi-square goodness of fit of integer draws against the exact Poisson pmf.

    Cells are single integers with expected count >= 5; both tails are
    lumped into end cells so every cell meets that bound.
    """
    draws = np.asarray(draws)
    n = draws.size
    lo = int(stats.poisson.ppf(1e-9, lam))
    hi = int(stats.poisson.isf(1e-9, lam))
    ks = np.arange(lo, hi + 1)
    expected = n * stats.poisson.pmf(ks, lam)
    keep = expected >= 5
    ks = ks[keep]
    edges_lo, edges_hi = ks[0], ks[-1]
    observed = np.array(
        [np.sum(draws <= edges_lo)]
        + [np.sum(draws == k) for k in ks[1:-1]]
        + [np.sum(draws >= edges_hi)]
    )
    exp = np.concatenate([
        [n * stats.poisson.cdf(edges_lo, lam)],
        n * stats.poisson.pmf(ks[1:-1], lam),
        [n * stats.poisson.sf(edges_hi - 1, lam)],
    ])
    chi2 = np.sum((observed - exp) ** 2 / exp)
    return stats.chi2.sf(chi2, len(exp) - 1)


# --- acceptance report ---------------------------------------------------

_criteria = {}  # nodeid -> (number, title)
_outcomes = {}  # number -> (passed, detail)
_notes = {}  # number -> measured values worth reporting


@pytest.fixture
def note(request):
    """Attach a measured value to the current criterion's summary line."""
    number = request.node.get_closest_marker("criterion").args[0]
    return lambda text: _notes.setdefault(number, []).append(text)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _criteria[item.nodeid] = m.args


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    number, _ = _criteria[report.nodeid]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = ""
        if report.failed:
            detail = str(report.longrepr.reprcrash.message) if hasattr(
                report.longrepr, "reprcrash") else str(report.longrepr).splitlines()[-1]
        elif report.skipped:
            detail = "skipped"
        _outcomes[number] = (report.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, title in sorted(set(_criteria.values())):
        passed, detail = _outcomes.get(number, (None, ""))
        verdict = {True: "PASS", False: "FAIL", None: "NOT RUN"}[passed]
        line = f"criterion {number:>2}: {verdict}  {title}"
        if number in _notes:
            line += "  (" + "; ".join(_notes[number]) + ")"
        if detail:
            line += f"  [{detail.splitlines()[0][:120]}]"
        tr.write_line(line)
