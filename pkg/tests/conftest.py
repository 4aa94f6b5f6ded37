"""Shared fixtures and the acceptance-suite summary.

The tests in test_acceptance.py are numbered a01 through a13, one per
shipped guarantee. After a run that touched any of them, the terminal
summary prints a PASS/FAIL line per number so the whole gate can be read
at a glance without scrolling through node ids.
"""

import re

import pytest

ACCEPTANCE_TITLES = {
    "a01": "rescaled descent matches the exact geometric rate on pure powers",
    "a02": "gradient descent obeys the polynomial slowness floor on pure powers",
    "a03": "per-step descent certificates hold across the loss zoo",
    "a04": "closed-form rate envelopes hold on certified traces",
    "a05": "fixed-schedule acceleration stays under its polynomial envelope",
    "a06": "line-search acceleration: envelope, window, contraction, eval budget",
    "a07": "Lyapunov energies are monotone on every accelerated run",
    "a08": "restarted acceleration contracts the gap e-fold per epoch",
    "a09": "smoothness and gradient-lower-bound certifiers accept the ladders",
    "a10": "coordinate certificates hold and accelerated RCD wins the race",
    "a11": "line-search tensor method meets its window and empirical rate",
    "a12": "benchmark figures reproduce the method ordering and slope gap",
    "a13": "analytic oracles agree with finite differences and bisection",
}

_ACCEPTANCE_NODE = re.compile(r"test_acceptance\.py::test_(a\d\d)_")


@pytest.fixture
def bisect_root():
    """Plain interval bisection, the reference for every scalar subproblem."""

    def solve(fn, lo, hi, iters=200):
        f_lo = fn(lo)
        if f_lo == 0.0:
            return lo
        if f_lo * fn(hi) > 0.0:
            raise ValueError("bisection bracket does not straddle a root")
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            f_mid = fn(mid)
            if f_mid == 0.0:
                return mid
            if f_lo * f_mid < 0.0:
                hi = mid
            else:
                lo, f_lo = mid, f_mid
        return 0.5 * (lo + hi)

    return solve


def pytest_terminal_summary(terminalreporter):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            match = _ACCEPTANCE_NODE.search(report.nodeid)
            if match is None:
                continue
            key = match.group(1)
            verdict = "PASS" if status == "passed" else "FAIL"
            if outcomes.get(key) != "FAIL":
                outcomes[key] = verdict
    if not outcomes:
        return
    writer = terminalreporter
    writer.write_sep("=", "acceptance summary")
    for key in sorted(ACCEPTANCE_TITLES):
        verdict = outcomes.get(key, "not run")
        writer.write_line(f"{verdict:>7}  {key}  {ACCEPTANCE_TITLES[key]}")
