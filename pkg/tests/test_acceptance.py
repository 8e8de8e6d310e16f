"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal summary
lists all ten lines together.
"""

import itertools
import math
import random
from collections import Counter

import numpy as np

from recsketch.core import LevelPlan, estimate_l1, x_statistic
from recsketch.countsketch import CountSketch
from recsketch.fk import FkConfig, RecursiveFkState
from recsketch.hashing import make_chain
from recsketch.oracle import (
    ExactBase,
    FrequencyVector,
    exact_fk,
    exact_major,
    exact_oracle_factory,
    fact51_check,
)
from recsketch.streams import generate


def random_instances(count, seed):
    """Random small vectors with their exact alpha-major core."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        n = rng.randint(4, 12)
        v = [rng.choice([0, 0, 1, 2, 3, 5, 8, 20, 50]) for _ in range(n)]
        if not any(v):
            continue
        alpha = rng.uniform(0.05, 0.5)
        core = sorted(i - 1 for i in exact_major({i + 1: x for i, x in enumerate(v)}, alpha))
        out.append((v, alpha, core))
    return out


def enumerate_x(v, core):
    """X over every assignment of the bits outside the core."""
    free = [i for i in range(len(v)) if i not in core]
    xs = []
    for bits in itertools.product((0, 1), repeat=len(free)):
        h = np.zeros(len(v), dtype=int)
        h[free] = bits
        xs.append(x_statistic(v, core, h))
    return np.array(xs)


def test_c01_unbiasedness(criterion):
    worst = 0.0
    for v, _, core in random_instances(20, seed=1):
        worst = max(worst, abs(enumerate_x(v, core).mean() - sum(v)))
    criterion(1, worst <= 1e-9, f"max |mean(X) - |V|| = {worst:.3g} over 20 vectors (tol 1e-9)")


def test_c02_variance(criterion):
    worst, bound_ok = 0.0, True
    for v, alpha, core in random_instances(20, seed=1):
        var = enumerate_x(v, core).var()
        outside = sum(x * x for i, x in enumerate(v) if i not in core)
        worst = max(worst, abs(var - outside))
        bound_ok &= var <= alpha * sum(v) ** 2
    criterion(2, worst <= 1e-9 and bound_ok,
              f"max |Var(X) - sum_out v^2| = {worst:.3g}; Var <= alpha|V|^2 in all: {bound_ok}")


def test_c03_level_mass(criterion):
    n, phi, chains = 2**10, 6, 10_000
    fv = FrequencyVector.from_stream(generate("zipf:1.1", n, 10_000, seed=3), n)
    idx = np.array(sorted(fv.counts))
    vals = np.array([fv[i] for i in idx], dtype=np.float64)
    total = vals.sum()
    masses = np.empty(chains)
    for s in range(chains):
        depth = make_chain(s, n, phi).deepest_levels(idx)
        # sum_j 2^j |V_j| = sum_i v_i * (2^(d_i + 1) - 1)
        masses[s] = np.dot(vals, 2.0 ** (depth + 1) - 1)
    se = masses.std(ddof=1) / math.sqrt(chains)
    z = (masses.mean() - (phi + 1) * total) / se
    criterion(3, abs(z) <= 3,
              f"mean {masses.mean():.1f} vs (phi+1)|V| = {(phi + 1) * total:.1f}, z = {z:+.2f}")


def test_c04_recursive_failure_rate(criterion):
    gamma, n, trials = 0.2, 2**10, 300
    fails = 0
    for trial in range(trials):
        stream = generate("zipf:1.2", n, 10_000, seed=trial)
        plan = LevelPlan.build(gamma, n, seed=trial)
        assert plan.alpha == 0.01 * gamma**2 / (plan.depth + 1) ** 3
        res = estimate_l1(stream, exact_oracle_factory(), ExactBase, plan, seed=trial)
        fails += res.overflowed or abs(res.value - stream.size) >= gamma * stream.size
    frac = fails / trials
    criterion(4, frac <= 0.25, f"failure fraction {frac:.3f} over {trials} trials (bound 0.25)")


def planted_stream(rng, n, t, light_m):
    """t heavy items with counts well above every light item."""
    heavy_ids = rng.choice(np.arange(1, n + 1), size=t, replace=False)
    heavy_counts = rng.integers(150, 301, size=t)
    light_pool = np.setdiff1d(np.arange(1, n + 1), heavy_ids)
    light = rng.choice(light_pool, size=light_m)
    items = np.concatenate([np.repeat(heavy_ids, heavy_counts), light])
    rng.shuffle(items)
    return items


def test_c05_countsketch_guarantee(criterion):
    n, t, eps, delta, trials = 10**3, 10, 0.25, 0.05, 200
    bad = 0
    for trial in range(trials):
        rng = np.random.default_rng(trial)
        items = planted_stream(rng, n, t, light_m=5000)
        f = Counter(items.tolist())
        a_t = sorted(f.values(), reverse=True)[t - 1]
        must = {i for i, c in f.items() if c >= (1 - eps) * a_t}
        cs = CountSketch(t, eps, delta, seed=trial, m_hint=items.size, universe=n)
        cs.update_many(items)
        top = cs.top()
        complete = must <= top.index_set()
        accurate = all((1 - eps) * f[i] <= w <= (1 + eps) * f[i] for i, w in top)
        bad += not (complete and accurate)
    frac = bad / trials
    criterion(5, frac <= 0.10, f"violations in {bad}/{trials} trials ({frac:.3f}, bound 0.10)")


def test_c06_end_to_end_fk(criterion):
    n, m, k, eps, trials = 10**4, 10**5, 3, 0.2, 100
    good = 0
    for trial in range(trials):
        stream = generate("zipf:1.2", n, m, seed=trial)
        exact = exact_fk(FrequencyVector.from_stream(stream, n), k)
        state = RecursiveFkState(FkConfig(k=k, epsilon=eps, t=1, seed=trial), n, m_hint=m)
        state.update_many(stream)
        good += abs(state.estimate() - exact) <= eps * exact
    criterion(6, good >= 70, f"{good}/{trials} trials within (1 +/- {eps}) of exact F_{k} (need 70)")


def test_c07_mergeability(criterion):
    rng = np.random.default_rng(7)
    mismatches = 0
    for split in range(50):
        n = int(rng.integers(50, 3000))
        m = int(rng.integers(1, 8000))
        stream = generate("zipf:1.1", n, m, seed=split)
        cut = int(rng.integers(0, m + 1))
        config = FkConfig(k=3 + split % 3, epsilon=0.2, t=1 + split % 2, seed=split)
        whole, a, b = (RecursiveFkState(config, n, m_hint=m) for _ in range(3))
        whole.update_many(stream)
        a.update_many(stream[:cut])
        b.update_many(stream[cut:])
        mismatches += not a.merge(b).counters_equal(whole)
    criterion(7, mismatches == 0, f"{50 - mismatches}/50 splits bit-exact after merge")


def test_c08_fact51_sweep(criterion):
    rng = random.Random(8)
    failures = 0
    for _ in range(10_000):
        n = rng.randint(1, 60)
        v = {i: rng.choice([0, rng.randint(1, 5), rng.randint(1, 1000)]) for i in range(1, n + 1)}
        nonzero = [i for i, x in v.items() if x]
        if not nonzero:
            v[1] = 1
            nonzero = [1]
        i = rng.choice(nonzero)
        k = rng.uniform(2.0, 10.0)
        ratio = v[i] ** k / exact_fk(v, k)
        alpha = rng.uniform(1e-6, 1.0 - 1e-9) * ratio
        failures += not fact51_check(v, i, alpha, k)
    criterion(8, failures == 0, f"inequality held in {10_000 - failures}/10000 instances")


def test_c09_exact_cover_exactness(criterion):
    rng = np.random.default_rng(9)
    worst = 0.0
    for inst in range(100):
        n = int(rng.integers(2, 2000))
        stream = generate("zipf:1.0", n, int(rng.integers(1, 5000)), seed=inst)
        k = [1, 3, 2.5][inst % 3]
        power = (lambda f, k=k: f**k)
        total = exact_fk(FrequencyVector.from_stream(stream, n), k)
        plan = LevelPlan.build(0.2, n, seed=inst)
        # every nonzero entry of every V_j is 1/|V|-major, so covers hold the full support
        plan = LevelPlan(plan.depth, plan.chain, 1.0 / total, plan.epsilon_inner,
                         plan.delta_inner, plan.gamma)
        res = estimate_l1(stream, exact_oracle_factory(power),
                          lambda: ExactBase(transform=power), plan, seed=inst)
        worst = max(worst, abs(res.value - total) / total)
    criterion(9, worst <= 1e-9, f"max relative |Y_0 - |V|| = {worst:.3g} over 100 instances")


def test_c10_space_shape(criterion):
    ns = [2**16, 2**18, 2**20]
    words = {}
    depths = {}
    for n in ns:
        report = RecursiveFkState(FkConfig(k=4, epsilon=0.2, t=1), n, m_hint=10**6).space_report()
        words[n] = report["total_words"]
        depths[n] = report["depth"]
    c = words[ns[0]] / math.sqrt(ns[0])
    ratios = {n: words[n] / (c * math.sqrt(n)) for n in ns}
    ok = all(abs(r - 1) <= 0.15 for r in ratios.values())
    detail = ", ".join(f"n=2^{int(math.log2(n))}: phi={depths[n]} ratio={ratios[n]:.3f}" for n in ns)
    criterion(10, ok, f"words/(c*sqrt n) with c fit at 2^16 -> {detail} (tol 0.15)")
