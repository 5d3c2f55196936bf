import pytest

from sharedctrl.driver import CognitiveDriver
from sharedctrl.lstar import (
    EqOracleConfig,
    ExactOracle,
    LearningSession,
    NotDistinguishing,
    ObservationTable,
    RandomWalkOracle,
    TableNotReady,
    build_hypothesis,
    close,
    fill,
    is_closed,
    is_consistent,
    learn,
    make_consistent,
    process_counterexample,
    random_walk_eq,
)
from sharedctrl.mealy import MealyMachine, equivalent, minimize

from conftest import MachineSUL, make_toggle


def make_three_state():
    """Prefixes () and (a,) share single-symbol rows but diverge after 'aa'."""
    delta = {
        0: {"a": (1, "0"), "b": (0, "0")},
        1: {"a": (2, "0"), "b": (0, "0")},
        2: {"a": (2, "1"), "b": (0, "0")},
    }
    return MealyMachine(("a", "b"), delta)


def test_fill_populates_every_cell(fresh_driver):
    table = ObservationTable(fresh_driver.alphabet)
    fill(table, fresh_driver)
    for word in table.S + table.extensions():
        for e in table.E:
            assert (word, e) in table.T


def test_fill_row_of_empty_prefix(fresh_driver, oracle_machine):
    table = ObservationTable(fresh_driver.alphabet)
    fill(table, fresh_driver)
    # row(()) is the driver's first response per level: full chains
    for level in fresh_driver.alphabet:
        (response,) = table.T[((), (level,))]
        chain, acc = response
        assert chain == ("attend", "read", "encode", "retrieve", "decide")
        assert oracle_machine.run((level,)) == (response,)


def test_fill_is_idempotent(fresh_driver):
    table = ObservationTable(fresh_driver.alphabet)
    fill(table, fresh_driver)
    snapshot = dict(table.T)
    fill(table, fresh_driver)
    assert table.T == snapshot


def test_repeated_stimulus_cell_shows_short_chain(fresh_driver):
    table = ObservationTable(fresh_driver.alphabet)
    fill(table, fresh_driver)
    close(table, fresh_driver)
    (response,) = table.T[((1,), (1,))]
    assert response[0] == ("attend", "read", "encode", "n_ret")


def test_close_adds_toggle_successor():
    sul = MachineSUL(make_toggle())
    table = ObservationTable(("a",))
    fill(table, sul)
    assert not is_closed(table)
    close(table, sul)
    assert is_closed(table)
    assert ("a",) in table.S


def test_close_on_closed_table_is_noop():
    sul = MachineSUL(make_toggle())
    table = ObservationTable(("a",))
    fill(table, sul)
    close(table, sul)
    before = list(table.S)
    close(table, sul)
    assert table.S == before


def test_close_never_shrinks_s(fresh_driver):
    table = ObservationTable(fresh_driver.alphabet)
    fill(table, fresh_driver)
    sizes = [len(table.S)]
    close(table, fresh_driver)
    sizes.append(len(table.S))
    assert sizes[1] >= sizes[0]


def test_make_consistent_adds_suffix():
    sul = MachineSUL(make_three_state())
    table = ObservationTable(("a", "b"))
    # seed S with the colliding prefixes directly
    table.S = [(), ("a",)]
    fill(table, sul)
    assert table.row(()) == table.row(("a",))
    assert not is_consistent(table)
    before = len(table.E)
    make_consistent(table, sul)
    assert len(table.E) == before + 1
    assert is_consistent(table)


def test_make_consistent_noop_when_rows_injective(fresh_driver):
    table = ObservationTable(fresh_driver.alphabet)
    fill(table, fresh_driver)
    close(table, fresh_driver)
    before = list(table.E)
    make_consistent(table, fresh_driver)
    assert table.E == before


def test_build_hypothesis_requires_closed():
    sul = MachineSUL(make_toggle())
    table = ObservationTable(("a",))
    fill(table, sul)
    with pytest.raises(TableNotReady):
        build_hypothesis(table)


def test_build_hypothesis_toggle_exact():
    sul = MachineSUL(make_toggle())
    table = ObservationTable(("a",))
    fill(table, sul)
    close(table, sul)
    hyp = build_hypothesis(table)
    assert equivalent(hyp, make_toggle()) == (True, None)


def test_hypothesis_agrees_with_table(fresh_driver):
    table = ObservationTable(fresh_driver.alphabet)
    fill(table, fresh_driver)
    close(table, fresh_driver)
    make_consistent(table, fresh_driver)
    hyp = build_hypothesis(table)
    for s in table.S:
        for e in table.E:
            assert hyp.run(s + e)[len(s):] == table.T[(s, e)]


def test_constant_sul_gives_single_state():
    m = MealyMachine(("a", "b"), {0: {"a": (0, "x"), "b": (0, "x")}})
    machine, stats = learn(MachineSUL(m), ("a", "b"), oracle=ExactOracle(m))
    assert len(machine.states) == 1
    assert stats.converged


def test_process_counterexample_rejects_agreeing_word():
    sul = MachineSUL(make_toggle())
    table = ObservationTable(("a",))
    fill(table, sul)
    close(table, sul)
    hyp = build_hypothesis(table)
    with pytest.raises(NotDistinguishing):
        process_counterexample(table, ("a",), sul, hyp)


def test_process_counterexample_adds_prefixes():
    truth = make_three_state()
    sul = MachineSUL(truth)
    table = ObservationTable(("a", "b"))
    fill(table, sul)
    close(table, sul)
    hyp = build_hypothesis(table)
    same, ce = equivalent(hyp, truth)
    assert not same
    process_counterexample(table, ce, sul, hyp)
    for i in range(1, len(ce) + 1):
        assert ce[:i] in table.S


def test_random_walk_eq_passes_on_exact_machine(fresh_driver, oracle_machine):
    cfg = EqOracleConfig(num_walks=100, rng_seed=5)
    assert random_walk_eq(fresh_driver, oracle_machine, cfg) is None


def test_random_walk_eq_finds_toggle_divergence():
    stub = MealyMachine(("a",), {0: {"a": (0, "0")}})
    cfg = EqOracleConfig(num_walks=50, max_walk_len=5, rng_seed=1)
    ce = random_walk_eq(MachineSUL(make_toggle()), stub, cfg)
    assert ce is not None
    assert len(ce) == 2  # divergence appears at the second step


def test_random_walk_eq_deterministic(fresh_driver):
    stub = MealyMachine((1, 2, 3, 4), {0: {l: (0, "x") for l in (1, 2, 3, 4)}})
    cfg = EqOracleConfig(rng_seed=99)
    first = random_walk_eq(fresh_driver, stub, cfg)
    fresh_driver.reset()
    second = random_walk_eq(fresh_driver, stub, cfg)
    assert first == second


def test_learn_toggle():
    machine, stats = learn(MachineSUL(make_toggle()), ("a",),
                           EqOracleConfig(rng_seed=3))
    assert len(machine.states) == 2
    assert stats.rounds <= 2
    assert equivalent(machine, make_toggle()) == (True, None)


def test_learn_driver_with_exact_oracle(driver_params, oracle_machine):
    sul = CognitiveDriver(driver_params)
    machine, stats = learn(sul, sul.alphabet, oracle=ExactOracle(oracle_machine))
    assert stats.converged
    assert equivalent(machine, oracle_machine) == (True, None)


def test_learn_driver_with_random_walks(driver_params, oracle_machine):
    sul = CognitiveDriver(driver_params)
    machine, stats = learn(sul, sul.alphabet, EqOracleConfig(rng_seed=11))
    assert equivalent(machine, oracle_machine) == (True, None)
    assert stats.transitions == len(machine.states) * 4


def test_learned_machine_input_complete(driver_params):
    sul = CognitiveDriver(driver_params)
    machine, _ = learn(sul, sul.alphabet, EqOracleConfig(rng_seed=2))
    for state in machine.states:
        assert set(machine.delta[state]) == set(sul.alphabet)


def test_prefix_closure_invariant(driver_params):
    sul = CognitiveDriver(driver_params)
    oracle = RandomWalkOracle(sul, EqOracleConfig(rng_seed=4))
    session = LearningSession(sul, sul.alphabet, oracle)
    session.run()
    words = set(session.table.S)
    for s in session.table.S:
        for i in range(len(s)):
            assert s[:i] in words
    assert session.table.E


def test_capped_session_builds_coarse_machine(driver_params, oracle_machine):
    sul = CognitiveDriver(driver_params)
    oracle = RandomWalkOracle(sul, EqOracleConfig(rng_seed=6))
    session = LearningSession(sul, sul.alphabet, oracle, state_cap=2)
    machine, _ = session.run()
    assert len(machine.states) <= 2
    same, ce = equivalent(machine, oracle_machine)
    assert not same
    # injecting the counterexample lifts the cap and learning converges
    session.inject_counterexample(ce)
    refined, stats = session.run()
    assert len(refined.states) > len(machine.states)
    assert equivalent(refined, oracle_machine) == (True, None)


def test_stats_report_text(driver_params):
    sul = CognitiveDriver(driver_params)
    _, stats = learn(sul, sul.alphabet, EqOracleConfig(rng_seed=0))
    text = stats.report_text()
    assert "membership_queries=" in text
    assert "converged=true" in text
