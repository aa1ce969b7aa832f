"""Shared fixtures and the acceptance-line recorder."""

from __future__ import annotations

import numpy as np
import pytest

from fracspde.domains import DomainSpec, build_eigensystem
from fracspde.spectrum import FracParams, build_truncation

# criterion -> list of (part, passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, list] = {}


def record(criterion: str, part: str, passed: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))


def acceptance_lines() -> list[str]:
    def key(c):
        return int(c.split()[0])

    lines = []
    for crit in sorted(ACCEPTANCE, key=key):
        parts = ACCEPTANCE[crit]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{p[0]}: {'ok' if p[1] else 'FAIL'} ({p[2]})" for p in parts)
        lines.append(f"[{'PASS' if ok else 'FAIL'}] {crit} | {detail}")
    return lines


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_lines():
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def unit_interval_system():
    return build_eigensystem(DomainSpec.interval(1.0), 1024)


@pytest.fixture(scope="session")
def trunc_factory(unit_interval_system):
    cache = {}

    def make(beta=0.4, alpha=3.0, gamma=0.0, K=16):
        key = (beta, alpha, gamma, K)
        if key not in cache:
            p = FracParams(beta, alpha, gamma)
            cache[key] = (build_truncation(unit_interval_system, p, K), p)
        return cache[key]

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
