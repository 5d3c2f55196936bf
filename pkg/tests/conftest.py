import pytest

from sharedctrl.driver import CognitiveDriver, DriverParams, explicit_machine
from sharedctrl.game import build_arena, extract_strategy, solve
from sharedctrl.mealy import MealyMachine, minimize
from sharedctrl.scenario import braking_scenario, default_scenario


def make_toggle():
    """Two states flipping on 'a'; output is the current state id as text."""
    delta = {
        0: {"a": (1, "0")},
        1: {"a": (0, "1")},
    }
    return MealyMachine(("a",), delta, initial=0)


def make_constant(output="0", inputs=("a",)):
    return MealyMachine(inputs, {0: {a: (0, output) for a in inputs}}, initial=0)


class MachineSUL:
    """SUL adapter over an explicit Mealy machine (for learner tests)."""

    def __init__(self, machine):
        self.machine = machine
        self.state = machine.initial

    def reset(self):
        self.state = self.machine.initial

    def query(self, symbol):
        self.state, out = self.machine.step(self.state, symbol)
        return out


@pytest.fixture
def toggle():
    return make_toggle()


@pytest.fixture
def constant():
    return make_constant()


@pytest.fixture(scope="session")
def driver_params():
    return DriverParams()


@pytest.fixture(scope="session")
def oracle_machine(driver_params):
    """Ground-truth minimal machine of the reference driver."""
    return minimize(explicit_machine(driver_params))


@pytest.fixture(scope="session")
def default_sc():
    return default_scenario()


@pytest.fixture(scope="session")
def braking_sc():
    return braking_scenario()


@pytest.fixture(scope="session")
def default_synthesis(oracle_machine, default_sc, driver_params):
    """Arena, winning region, and strategy for the default scenario."""
    arena = build_arena(oracle_machine, default_sc, params=driver_params)
    region = solve(arena)
    strategy = extract_strategy(arena, region)
    return arena, region, strategy


@pytest.fixture
def fresh_driver(driver_params):
    return CognitiveDriver(driver_params)
