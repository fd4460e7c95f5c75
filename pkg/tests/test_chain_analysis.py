import json

import numpy as np
import pytest
from scipy.sparse.csgraph import connected_components

from markov_consensus import ConfigError, build_grid, transition_matrix
from markov_consensus.chain_analysis import (
    ConvergenceError,
    composite_chain,
    composite_flat_index,
    composite_nodes,
    detailed_balance_stationary,
    has_rooted_spanning_tree,
    is_irreducible,
    stationary_distribution,
    verify_report,
)
from markov_consensus.grid import TransitionMatrix
from markov_consensus.mobility import mean_return_time


def tm_of(c):
    return transition_matrix(build_grid(c))


def test_stationary_2x2_uniform():
    assert np.max(np.abs(stationary_distribution(tm_of(2)) - 0.25)) < 1e-12


def test_stationary_3x3_degree_weights():
    pi = stationary_distribution(tm_of(3))
    expected = np.array([3, 4, 3, 4, 5, 4, 3, 4, 3]) / 33
    assert np.max(np.abs(pi - expected)) < 1e-10


def test_stationary_single_node():
    assert stationary_distribution(tm_of(1)).tolist() == [1.0]


@pytest.mark.parametrize("c", [2, 3, 5, 8])
def test_detailed_balance(c):
    tm = tm_of(c)
    pi = stationary_distribution(tm)
    flow = pi[:, None] * tm.probs
    assert np.max(np.abs(flow - flow.T)) < 1e-10
    assert np.all(pi > 0)
    assert np.max(np.abs(pi @ tm.probs - pi)) < 1e-12


def test_periodic_chain_reports_nonconvergence():
    # bipartite walk without self-loops: uniform start oscillates forever
    two_cycle = TransitionMatrix(np.array([[0.0, 1.0, 0.0], [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]]))
    assert is_irreducible(two_cycle)
    with pytest.raises(ConvergenceError):
        stationary_distribution(two_cycle, max_iter=1000)


@pytest.mark.parametrize("c", range(1, 11))
def test_grid_chains_irreducible(c):
    tm = tm_of(c)
    assert is_irreducible(tm)
    n, _ = connected_components(tm.probs > 0, directed=True, connection="strong")
    assert n == 1


def test_block_diagonal_reducible():
    assert not is_irreducible(TransitionMatrix(np.eye(2)))


def test_two_state_irreducible():
    assert is_irreducible(TransitionMatrix(np.array([[0.5, 0.5], [1.0, 0.0]])))


def test_one_way_chain_reducible():
    assert not is_irreducible(TransitionMatrix(np.array([[0.5, 0.5], [0.0, 1.0]])))


def test_flat_index_roundtrip():
    S, N = 7, 3
    seen = set()
    for flat in range(1, S**N + 1):
        nodes = composite_nodes(flat, S, N)
        assert composite_flat_index(nodes, S) == flat
        seen.add(nodes)
    assert len(seen) == S**N
    assert composite_flat_index((2, 1, 1), S) == 2  # agent 1 varies fastest


def path_with_loops():
    """Three nodes i-j-l in a line, each with a self-edge, uniform over allowed moves."""
    P = np.array([[1 / 2, 1 / 2, 0], [1 / 3, 1 / 3, 1 / 3], [0, 1 / 2, 1 / 2]])
    return TransitionMatrix(P)


def test_composite_path_example():
    Q = composite_chain(path_with_loops(), 2).probs
    i, j, l = 1, 2, 3
    src = composite_flat_index((i, j), 3) - 1
    assert Q[src, composite_flat_index((i, l), 3) - 1] == pytest.approx(1 / 6, abs=1e-16)
    assert Q[src, composite_flat_index((l, l), 3) - 1] == 0.0
    assert Q.shape == (9, 9)


def test_composite_single_agent_is_identity_map():
    tm = tm_of(3)
    assert composite_chain(tm, 1) is tm


@pytest.mark.parametrize("c", [2, 3])
def test_composite_equals_kronecker(c):
    tm = tm_of(c)
    Q = composite_chain(tm, 2).probs
    assert np.max(np.abs(Q - np.kron(tm.probs, tm.probs))) <= 1e-15


def test_composite_three_agents_vs_nested_kronecker():
    tm = path_with_loops()
    Q = composite_chain(tm, 3).probs
    P = tm.probs
    # agent 1 fastest => agent 3's factor is the outermost Kronecker factor
    assert np.max(np.abs(Q - np.kron(P, np.kron(P, P)))) <= 1e-15


def test_composite_cap():
    with pytest.raises(ConfigError):
        composite_chain(tm_of(4), 4)  # 16^4 = 65536 > 10^4
    with pytest.raises(ConfigError):
        composite_chain(tm_of(8), 3)


def test_composite_stationary_is_outer_product():
    tm = tm_of(3)
    pi = stationary_distribution(tm)
    piQ = stationary_distribution(composite_chain(tm, 2))
    # flat index (i1-1) + (i2-1)*S  ->  reshape to [i2, i1]
    assert np.max(np.abs(piQ.reshape(9, 9) - np.outer(pi, pi))) < 1e-10


def test_return_time_matches_inverse_stationary():
    tm = tm_of(4)
    pi = stationary_distribution(tm)
    rng = np.random.default_rng(11)
    for node in (1, 6):
        m = mean_return_time(tm, node, 1_000_000, rng)
        assert abs(m * pi[node - 1] - 1) < 0.10


def test_spanning_tree_rooted_at_feature():
    union = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    assert not has_rooted_spanning_tree(union, [1, 0, 0])
    assert has_rooted_spanning_tree(union, [0, 1, 1])
    assert not has_rooted_spanning_tree(np.zeros((2, 2)), [0, 0])


def test_verify_3x3_two_agents():
    rep = verify_report(3, 2)
    assert rep.passed
    for key in ("P row-stochastic", "P irreducible", "Q row-stochastic", "Q irreducible", "comm-graph union complete"):
        assert rep.checks[key] is True
    assert json.loads(rep.to_json())["passed"] is True
    assert "overall: PASS" in rep.to_text()


def test_verify_degenerate_single_node():
    rep = verify_report(1, 2)
    assert rep.passed
    assert rep.checks["Q irreducible"] is True


def test_verify_cap_skips_composite():
    rep = verify_report(8, 3)
    assert "Q irreducible" not in rep.checks
    assert any("cap exceeded" in n for n in rep.notes)
    assert rep.passed
