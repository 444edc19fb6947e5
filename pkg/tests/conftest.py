from __future__ import annotations

import functools

import numpy as np
import pytest

from dirac1d.potentials import PotentialConfig
from dirac1d.spectral import HamiltonianFactory, diagonalize


@functools.lru_cache(maxsize=None)
def mode_sets(N: int = 256, eta: float = 0.5, compensate: bool = True):
    """(factory, A modes, independently diagonalised B modes), cached per session."""
    cfg = PotentialConfig(N=N, eta=eta, compensate=compensate)
    fac = HamiltonianFactory(cfg)
    return fac, diagonalize(fac.A()), diagonalize(fac.B())


@pytest.fixture(scope="session")
def reference():
    return mode_sets(256)


@pytest.fixture
def rng():
    return np.random.default_rng(20260419)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, name: str, ok: bool, detail: str) -> None:
        line = f"criterion {number} {name}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
