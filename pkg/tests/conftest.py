from fractions import Fraction

from hypothesis import strategies as st

from givental.weyl import LaurentEndo

small_ints = st.integers(-3, 3)


@st.composite
def symplectic_endos(draw, dim=None, powers=st.integers(-2, 2), max_terms=2):
    """Random infinitesimally symplectic A(z): antisymmetric coefficients at
    even powers, symmetric ones at odd powers."""
    n = draw(st.integers(1, 2)) if dim is None else dim
    ds = draw(st.lists(powers, min_size=1, max_size=max_terms, unique=True))
    coeffs = {}
    for d in ds:
        b = [[Fraction(draw(small_ints), draw(st.integers(1, 2))) for _ in range(n)] for _ in range(n)]
        sign = 1 if d % 2 else -1
        coeffs[d] = [[b[i][j] + sign * b[j][i] for j in range(n)] for i in range(n)]
    return LaurentEndo(coeffs, n)


# -- acceptance summary -------------------------------------------------------

_criteria: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            item.user_properties.append(("criterion", mark.args[0]))


def pytest_runtest_logreport(report):
    n = dict(report.user_properties).get("criterion")
    if n is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _criteria.setdefault(n, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        outcomes = _criteria[n]
        ok = all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {len(outcomes)} check(s)")
