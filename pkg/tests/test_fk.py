import math

import numpy as np
import pytest

from recsketch.countsketch import CountSketch, frequency_error
from recsketch.fk import FkConfig, RecursiveFkState, fk_depth, format_report, iterated_log
from recsketch.hashing import make_chain
from recsketch.oracle import FrequencyVector, exact_fk, exact_major, fact51_check, power_vector
from recsketch.streams import generate

N, M = 1000, 5000


def zipf_stream(seed, n=N, m=M, s=1.2):
    return generate(f"zipf:{s}", n, m, seed)


def build(stream=None, n=N, m_hint=M, **kw):
    kw.setdefault("k", 3)
    kw.setdefault("epsilon", 0.2)
    state = RecursiveFkState(FkConfig(**kw), n, m_hint=m_hint)
    if stream is not None:
        state.update_many(stream)
    return state


def test_config_validation():
    for kw in ({"k": 2}, {"k": 3, "epsilon": 1.0}, {"k": 3, "t": -1},
               {"k": 3, "base_capacity": 0}, {"k": 3, "c_w": 0}):
        kw.setdefault("epsilon", 0.2)
        with pytest.raises(ValueError):
            FkConfig(**kw)


def test_depth_schedule():
    assert fk_depth(2**16, 1) == 4
    assert fk_depth(2**10, 0) == 10
    assert fk_depth(4, 1) == 2  # floor of 2
    assert fk_depth(2**16, 2) == 2
    assert iterated_log(2**16, 2) == 4


def test_same_seed_same_hashes():
    a, b = build(seed=5), build(seed=5)
    assert a.same_config(b)
    assert not a.same_config(build(seed=6))


def test_single_update_reaches_base_iff_all_bits():
    state = build(n=64, m_hint=10)
    for i in range(1, 65):
        before = dict(state.base_counter)
        state.update(i)
        survives = all(h.bit(i) for h in state.chain.levels)
        assert (state.base_counter != before) == survives


def test_repeated_single_item():
    state = build(n=500, m_hint=100)
    state.update_many(np.full(37, 123))
    assert state.level_sketches[0].query(123) == 37
    if state.chain.deepest_level(123) == state.depth:
        assert state.base_counter == {123: 37}
    assert state.estimate() == pytest.approx(37**3)


def test_small_exact_examples():
    assert build([1, 1, 1], n=4, m_hint=3).estimate() == pytest.approx(27)
    assert build(n=4).estimate() == 0


def test_scalar_path_matches_batch():
    stream = zipf_stream(1, n=300, m=800)
    a, b = build(n=300, m_hint=800), build(stream, n=300, m_hint=800)
    for i in stream:
        a.update(int(i))
    assert a.counters_equal(b)
    assert a.estimate() == b.estimate()


def test_update_rejects_out_of_range():
    state = build(n=10)
    with pytest.raises(IndexError):
        state.update(11)
    with pytest.raises(IndexError):
        state.update_many([0])


# -- linearity ------------------------------------------------------------------


def test_replay_equals_merged_halves():
    stream = zipf_stream(2)
    whole = build(stream, seed=9)
    a, b = build(stream[:2100], seed=9), build(stream[2100:], seed=9)
    assert a.merge(b).counters_equal(whole)
    assert b.merge(a).counters_equal(whole)
    assert a.merge(b).estimate() == pytest.approx(whole.estimate())


def test_merge_with_fresh_and_mismatch():
    s = build(zipf_stream(3), seed=1)
    assert s.merge(build(seed=1)).counters_equal(s)
    with pytest.raises(ValueError):
        s.merge(build(seed=2))


def test_merge_nested_states():
    stream = zipf_stream(4)
    whole = build(stream, t=2, seed=4)
    a, b = build(stream[:999], t=2, seed=4), build(stream[999:], t=2, seed=4)
    assert a.merge(b).counters_equal(whole)


# -- base and levels --------------------------------------------------------------


def test_level_substreams_match_membership():
    stream = zipf_stream(5)
    state = build(stream, seed=5)
    depth = state.chain.deepest_levels(stream)
    for j, sketch in enumerate(state.level_sketches):
        fresh = CountSketch(sketch.capacity, frequency_error(0.2, 3), sketch.delta, sketch.seed,
                            m_hint=M, width=state.width, universe=N)
        fresh.update_many(stream[depth >= j])
        assert fresh.counters_equal(sketch)
        assert sketch.total_updates == int((depth >= j).sum())


def test_base_is_exact_moment_of_deepest_substream():
    for seed in range(5):
        stream = zipf_stream(seed, s=0.8)
        state = build(stream, seed=seed)
        deep = stream[state.chain.deepest_levels(stream) == state.depth]
        assert state.base_value() == exact_fk(FrequencyVector.from_stream(deep, N), 3)


def test_overflow_is_sticky_and_zeroes_estimate():
    stream = np.arange(1, 65)
    state = build(stream, n=64, m_hint=64, base_capacity=1)
    assert state.overflowed
    assert state.estimate() == 0.0
    fresh = build(n=64, m_hint=64, base_capacity=1)
    assert fresh.merge(state).overflowed and state.merge(fresh).overflowed


def test_estimate_close_on_zipf():
    for seed in range(5):
        stream = zipf_stream(seed)
        exact = exact_fk(FrequencyVector.from_stream(stream, N), 3)
        assert abs(build(stream, seed=seed).estimate() - exact) <= 0.2 * exact


def test_real_order():
    stream = zipf_stream(6)
    exact = exact_fk(FrequencyVector.from_stream(stream, N), 2.5)
    assert abs(build(stream, k=2.5, seed=6).estimate() - exact) <= 0.2 * exact


def test_nested_t2():
    stream = zipf_stream(7)
    state = build(stream, t=2, seed=7)
    assert state.nested is not None and state.nested.config.t == 1
    assert state.nested.nested is None
    assert state.base_counter == {}
    exact = exact_fk(FrequencyVector.from_stream(stream, N), 3)
    assert abs(state.estimate() - exact) <= 0.2 * exact


def test_fact51_holds_for_power_majors():
    for seed in range(10):
        stream = zipf_stream(seed)
        state = build(stream, seed=seed)
        fv = FrequencyVector.from_stream(stream, N)
        alpha = state.plan.alpha
        for i in exact_major(power_vector(fv, 3), alpha):
            assert fact51_check(fv, i, alpha, 3)


# -- space ------------------------------------------------------------------------


def test_space_report_fixed_at_construction():
    fresh = build(seed=1).space_report()
    used = build(zipf_stream(1), seed=1).space_report()
    assert fresh == used
    assert fresh["total_words"] == sum(
        fresh[key] for key in ("table_words", "tracker_words", "hash_words", "base_words"))


def test_table_words_grow_like_sqrt_n_at_fixed_depth():
    # 2^17 and 2^18 share depth 5 for t=1, so only n moves
    a = build(n=2**17, m_hint=10**6, k=4).space_report()
    b = build(n=2**18, m_hint=10**6, k=4).space_report()
    assert a["depth"] == b["depth"] == 5
    ratio = b["table_words"] / a["table_words"]
    assert abs(ratio / math.sqrt(2) - 1) <= 0.15


def test_t1_smaller_than_t0():
    t1 = build(n=2**20, m_hint=10**6, k=4, t=1).space_report()
    t0 = build(n=2**20, m_hint=10**6, k=4, t=0).space_report()
    assert t1["depth"] < t0["depth"]
    assert t1["table_words"] < t0["table_words"]


def test_survivor_thinning():
    n = 2**20
    c = 10
    depth = fk_depth(n, 1, c)
    limit = n / math.log2(n) ** 10
    idx = np.arange(1, n + 1)
    violations = 0
    for seed in range(100):
        chain = make_chain(seed, n, depth)
        survivors = int((chain.deepest_levels(idx) == depth).sum())
        violations += survivors > limit
    assert violations <= 20


def test_format_report():
    text = format_report({"a": 1, "b": 0.5, "c": True})
    assert text == "a=1\nb=0.5\nc=true\n"
