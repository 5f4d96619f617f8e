import numpy as np
import pytest
from scipy import stats

from gossip_blocks import _kernels
from gossip_blocks.analysis import enumerated_expected_update
from gossip_blocks.model import GossipNetwork, random_block_model, to_general
from gossip_blocks.simulator import (RunningAverage, TrajectoryRecorder, TrajectoryState,
                                     batch_means, draw_pairs, empirical_expectation,
                                     initial_state, make_rng, map_replications,
                                     replicate_final_states, run, run_time_average, sample_pair,
                                     sample_path, step)

X0 = np.array([0.3, 1.0, -0.4, 2.0, 0.0])


def test_pair_frequencies_chi_square(small_net):
    table = small_net.pairs
    first, second = draw_pairs(small_net, make_rng(11), 10 ** 6)
    idx = {(int(a), int(b)): k for k, (a, b) in enumerate(zip(table.first, table.second))}
    counts = np.zeros(len(table.prob))
    np.add.at(counts, [idx[p] for p in zip(first.tolist(), second.tolist())], 1)
    expected = table.prob * 10 ** 6
    assert stats.chisquare(counts, expected).pvalue > 1e-3


def test_pair_probabilities_two_agents():
    W = np.array([[0.1, 0.3], [0.3, 0.3]])
    table = GossipNetwork(W).pairs
    probs = {(int(a), int(b)): p for a, b, p in zip(table.first, table.second, table.prob)}
    assert probs == pytest.approx({(0, 0): 0.1, (0, 1): 0.6, (1, 1): 0.3})


def test_sample_pair_matches_batched_draws(small_net):
    rng = make_rng(3)
    one_by_one = [sample_pair(small_net, rng) for _ in range(500)]
    first, second = draw_pairs(small_net, make_rng(3), 500)
    assert one_by_one == list(zip(first.tolist(), second.tolist()))


def test_step_examples(small_net):
    x = X0.copy()
    _kernels.apply_pair(x, small_net.is_regular, 0, 1)
    assert np.array_equal(x, [0.65, 1.0, -0.4, 2.0, 0.0])
    _kernels.apply_pair(x, small_net.is_regular, 2, 3)
    assert np.array_equal(x, [0.65, 1.0, 0.8, 0.8, 0.0])
    _kernels.apply_pair(x, small_net.is_regular, 3, 3)
    assert np.array_equal(x, [0.65, 1.0, 0.8, 0.8, 0.0])


def test_step_by_step_equals_run(small_net):
    state = TrajectoryState(0, X0.copy(), make_rng(5))
    for _ in range(1000):
        step(small_net, state)
    assert state.t == 1000
    assert np.array_equal(state.x, run(small_net, X0, 1000, 5).x)


def test_chunk_boundaries_do_not_matter(small_net):
    # Python observers force the per-step path; it must agree with the batched kernel
    T = 70000
    rec = TrajectoryRecorder(every=T)
    slow = run(small_net, X0, T, 9, observers=[rec])
    fast = run(small_net, X0, T, 9)
    assert np.array_equal(slow.x, fast.x)
    assert np.array_equal(rec.as_array()[-1], fast.x)


def test_convex_hull_and_stubborn_invariance(rng):
    for seed in range(10):
        m = random_block_model(rng)
        net = to_general(m)
        x0 = initial_state(net, None, make_rng(seed))
        lo, hi = x0.min(), x0.max()
        times, states = sample_path(net, x0, 5000, seed, every=10)
        assert np.all(states >= lo) and np.all(states <= hi)
        assert np.all(states[:, net.stubborn_index] == np.asarray(net.x_s))


def test_one_step_expectation_exact(rng):
    for _ in range(20):
        net = to_general(random_block_model(rng))
        x0 = initial_state(net, None, rng)
        table = net.pairs
        mean = np.zeros(net.n)
        for i, j, p in zip(table.first, table.second, table.prob):
            x = x0.copy()
            _kernels.apply_pair(x, net.is_regular, int(i), int(j))
            mean += p * x
        assert np.max(np.abs(mean - enumerated_expected_update(net) @ x0)) < 1e-12


def test_one_step_expectation_monte_carlo(small_net):
    R_bar = enumerated_expected_update(small_net)
    finals = replicate_final_states(small_net, X0, 1, 20000, 17, workers=1)
    se = finals.std(axis=0, ddof=1) / np.sqrt(len(finals))
    diff = np.abs(finals.mean(axis=0) - R_bar @ X0)
    assert np.all(diff <= 4 * np.maximum(se, 1e-15))


def test_time_average_three_ways(small_net):
    T = 20000
    avg = RunningAverage(small_net.regular)
    rec = TrajectoryRecorder()
    state = run(small_net, X0, T, 21, observers=[avg, rec])
    fused_state, s = run_time_average(small_net, X0, T, 21)
    assert avg.count == T + 1
    assert np.array_equal(fused_state.x, state.x)
    assert np.array_equal(avg.s, s)
    direct = rec.as_array()[:, small_net.regular].mean(axis=0)
    assert np.max(np.abs(direct - s)) < 1e-9


def test_batch_means_match_recorded_path(small_net):
    rec = TrajectoryRecorder()
    run(small_net, X0, 1000, 4, observers=[rec])
    path = rec.as_array()[1:, small_net.regular].reshape(10, 100, -1).mean(axis=1)
    assert np.max(np.abs(batch_means(small_net, X0, 1000, 4, batches=10) - path)) < 1e-12


def test_sample_path_equals_recorder(small_net):
    rec = TrajectoryRecorder(every=7)
    run(small_net, X0, 1000, 8, observers=[rec])
    times, states = sample_path(small_net, X0, 1000, 8, every=7)
    assert np.array_equal(times, rec.t)
    assert np.array_equal(states, rec.as_array())


def test_determinism(small_net):
    a = sample_path(small_net, X0, 3000, 42, every=3)
    b = sample_path(small_net, X0, 3000, 42, every=3)
    assert np.array_equal(a[1], b[1])
    c = sample_path(small_net, X0, 3000, 43, every=3)
    assert not np.array_equal(a[1], c[1])


def test_zero_steps_returns_initial_state(small_net):
    state = run(small_net, X0, 0, 1)
    assert state.t == 0 and np.array_equal(state.x, X0)
    assert state.x is not X0


def test_single_replication_equals_single_run(small_net):
    child = np.random.SeedSequence(6).spawn(1)[0]
    finals = replicate_final_states(small_net, X0, 500, 1, 6)
    assert np.array_equal(finals[0], run(small_net, X0, 500, child).x)
    assert np.array_equal(empirical_expectation(small_net, X0, 500, 1, 6), finals[0])


def test_replications_independent_of_worker_count(small_net):
    one = replicate_final_states(small_net, X0, 300, 8, 2, workers=1)
    many = replicate_final_states(small_net, X0, 300, 8, 2, workers=4)
    assert np.array_equal(one, many)
    assert map_replications(lambda k, c: k, 5, 0, workers=3) == [0, 1, 2, 3, 4]


def test_consensus_is_fixed_point():
    net = GossipNetwork(np.full((4, 4), 1 / 16))
    x = np.full(4, 0.25)
    assert np.array_equal(run(net, x, 10000, 0).x, x)


def test_initial_state_checks(small_net):
    with pytest.raises(ValueError):
        run(small_net, np.zeros(4), 10, 0)
    bad = X0.copy()
    bad[1] = 0.5
    with pytest.raises(ValueError, match="stubborn"):
        run(small_net, bad, 10, 0)
    x = initial_state(small_net, None, make_rng(0))
    assert x[1] == 1.0 and x[4] == 0.0


def test_observer_sees_initial_state_and_changes(small_net):
    seen = []
    run(small_net, X0, 50, 3, observers=[lambda t, ch, x: seen.append((t, ch, x.flags.writeable))])
    assert seen[0] == (0, (), False)
    assert [s[0] for s in seen] == list(range(51))
    assert all(set(ch) <= set(small_net.regular.tolist()) for _, ch, _ in seen)
