import json
import math
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from hbkit import SymbolFunction, log_power_outer_symbol, step_outer_symbol

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

DATA = Path(__file__).resolve().parent / "data"
ROOT = Path(__file__).resolve().parent.parent


def _load_frozen():
    raw = json.loads((DATA / "oracle_values.json").read_text())
    out = {}
    for k, v in raw.items():
        out[k] = complex(float(v[0]), float(v[1])) if isinstance(v, list) else float(v)
    return out


FROZEN = _load_frozen()


@pytest.fixture
def frozen():
    return FROZEN


def mixed_symbol():
    return SymbolFunction.factored(
        zeros=[(0.5 + 0.8j,)], exp_mass=0.5, atoms=[(4.0, 0.3)], pieces=[(-2.0, -1.0, -0.7)], name="mixed"
    )


def blaschke_symbol():
    return SymbolFunction.factored(zeros=[(1j,), (1.5 + 0.5j, 2)], name="blaschke")


CATALOG = {
    "zero": SymbolFunction.zero,
    "blaschke": blaschke_symbol,
    "paley_wiener": lambda: SymbolFunction.factored(exp_mass=1.0, name="paley_wiener"),
    "atom": lambda: SymbolFunction.factored(atoms=[(0.0, 1.0)], name="atom"),
    "step_outer": lambda: step_outer_symbol(0.5),
    "log_power": log_power_outer_symbol,
    "mixed": mixed_symbol,
}


@pytest.fixture(params=sorted(CATALOG))
def any_symbol(request):
    return CATALOG[request.param]()


@pytest.fixture
def step():
    return step_outer_symbol(0.5)


@pytest.fixture
def blaschke():
    return blaschke_symbol()


@pytest.fixture
def mixed():
    return mixed_symbol()


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


PI = math.pi


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
