"""Shared builders, cross-checking oracles, and the acceptance summary hook."""
from __future__ import annotations

from datetime import date, timedelta
from fractions import Fraction

import numpy as np

from eigenmarket import ReturnPanel

_ACCEPTANCE_FILE = "test_acceptance.py"


def dates_from(n: int, start: date = date(2001, 1, 2)) -> tuple[str, ...]:
    return tuple((start + timedelta(days=i)).isoformat() for i in range(n))


def make_panel(values, sectors=None, tickers=None) -> ReturnPanel:
    """ReturnPanel from a raw (n_stocks, n_days) array.

    sectors may be a per-ticker list or a ready mapping; default is one
    shared dummy sector so the panel is valid without further setup.
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    if tickers is None:
        tickers = tuple(f"S{i:03d}" for i in range(m))
    else:
        tickers = tuple(tickers)
    if sectors is None:
        sector = {t: "ALL" for t in tickers}
    elif isinstance(sectors, dict):
        sector = sectors
    else:
        sector = dict(zip(tickers, sectors))
    return ReturnPanel(
        tickers=tickers, dates=dates_from(values.shape[1]), returns=values, sector=sector
    )


def charpoly_eigenvalues(a: np.ndarray) -> np.ndarray:
    """Eigenvalues via characteristic-polynomial roots, descending.

    Faddeev-LeVerrier over exact rationals (float entries are exact
    binary fractions), so the coefficients carry no rounding at all.
    np.roots on the companion matrix only seeds Newton iterations that
    are evaluated in exact arithmetic: close eigenvalue pairs make the
    polynomial ill-conditioned in doubles, and without the polish the
    seeds alone are good to only about 1e-8.  Completely independent of
    any rotation-based solver.
    """
    a = np.asarray(a, dtype=float)
    m = a.shape[0]
    exact = [[Fraction(x) for x in row] for row in a]

    # p(x) = x^m + coeffs[1] x^(m-1) + ... + coeffs[m]
    coeffs = [Fraction(1)] + [Fraction(0)] * m
    aux = [[Fraction(0)] * m for _ in range(m)]
    for k in range(1, m + 1):
        prod = [
            [sum(exact[i][l] * aux[l][j] for l in range(m)) for j in range(m)]
            for i in range(m)
        ]
        for i in range(m):
            prod[i][i] += coeffs[k - 1]
        aux = prod
        trace = sum(
            sum(exact[i][l] * aux[l][i] for l in range(m)) for i in range(m)
        )
        coeffs[k] = -trace / k

    deriv = [coeffs[i] * (m - i) for i in range(m)]
    seeds = np.roots(np.array([float(c) for c in coeffs]))
    if np.max(np.abs(seeds.imag)) > 1e-6:
        raise AssertionError(f"complex root from a symmetric matrix: {seeds}")

    roots = []
    for seed in seeds.real:
        x = Fraction(float(seed))
        for _ in range(3):
            p = Fraction(0)
            for c in coeffs:
                p = p * x + c
            dp = Fraction(0)
            for c in deriv:
                dp = dp * x + c
            if dp == 0:
                break
            # rounding x back to a double keeps the rationals small
            x = Fraction(float(x - p / dp))
        roots.append(float(x))
    return np.sort(np.array(roots))[::-1]


def random_correlation(m: int, rng: np.random.Generator, n_obs: int | None = None) -> np.ndarray:
    """Sample correlation matrix of an iid normal panel, cleaned up so it
    satisfies the exact-diagonal and symmetry contracts."""
    if n_obs is None:
        n_obs = 5 * m + 12
    data = rng.standard_normal((m, n_obs))
    corr = np.corrcoef(data)
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


# One summary line per acceptance test so a run's verdict is scannable
# without grepping the full pytest output.

_outcomes: dict[str, str] = {}
_order: list[str] = []


def pytest_collection_modifyitems(items):
    for item in items:
        if _ACCEPTANCE_FILE in str(item.fspath) and item.name not in _order:
            _order.append(item.name)


def pytest_runtest_logreport(report):
    if _ACCEPTANCE_FILE not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if report.failed:
        _outcomes[name] = "FAIL"
    elif report.skipped:
        _outcomes[name] = "SKIP"
    elif report.when == "call" and report.passed:
        _outcomes.setdefault(name, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _order:
        return
    terminalreporter.section("acceptance criteria")
    for name in _order:
        terminalreporter.write_line(f"{_outcomes.get(name, 'NOT RUN'):<7} {name}")
