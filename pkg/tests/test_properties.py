import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedsched.allocator import finish_times, optimal_allocation
from fedsched.bound import B_pi, BoundParams
from fedsched.datagen import PartitionSpec, partition_indices
from fedsched.numeric import INV_E, Branch, lambert_w
from fedsched.wireless import RoundState, channel_gain_sq

from _instances import profiles, radio

finite = dict(allow_nan=False, allow_infinity=False)


@given(st.floats(min_value=-INV_E, max_value=1e300, **finite))
def test_principal_inverts(x):
    w = lambert_w(Branch.PRINCIPAL, x)
    assert w >= -1.0
    assert abs(w * np.exp(w) - x) <= 1e-12 * max(abs(x), 1e-300) + 1e-300 or abs(x + INV_E) < 1e-15


@given(st.floats(min_value=-INV_E, max_value=-1e-300, **finite))
def test_secondary_inverts(x):
    w = lambert_w(Branch.SECONDARY, x)
    assert w <= -1.0
    assert abs(w * np.exp(w) - x) <= 1e-12 * abs(x)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 2.0), st.floats(1.0, 600.0), st.floats(0.0, 23.0)),
                min_size=1, max_size=10),
       st.sampled_from([1e-3, 1e-4, 1e-6]))
def test_allocation_equalises_finish_times(devs, eps):
    tcp, dist, pdbm = map(np.array, zip(*devs))
    rs = RoundState(0, dist, channel_gain_sq(dist, 3.76), tcp)
    profs = profiles(len(devs), power_dbm=pdbm)
    res = optimal_allocation(range(len(devs)), rs, profs, radio(), eps=eps)
    assert 1 - eps <= res.gamma.sum() <= 1.0
    ft = finish_times(res.scheduled, res.gamma, rs, profs, radio())
    np.testing.assert_allclose(ft, res.t_star_s, rtol=1e-9)


@given(st.integers(2, 20), st.floats(0.01, 5.0), st.floats(0.1, 50.0))
def test_b_pi_nonincreasing_and_zero_at_full(m, delta, beta):
    p = BoundParams(1.0, beta, np.full(m, delta), 0.01, 5, 0.05, np.full(m, 10))
    vals = [B_pi(n, p) for n in range(1, m + 1)]
    assert vals[-1] == 0.0
    assert all(a >= b for a, b in zip(vals, vals[1:]))


@pytest.mark.filterwarnings("ignore:dropping")
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(2, 6), st.integers(2, 12))
def test_shard_partition_invariants(seed, l, classes, m):
    rng = np.random.default_rng(seed)
    if m * l > classes * 2 * l or l > classes:
        return
    labels = rng.permutation(np.arange(classes * 2 * l * 5) % classes)
    parts = partition_indices(labels, m, PartitionSpec("shards", l), rng)
    flat = np.concatenate(parts)
    assert len(np.unique(flat)) == len(flat)
    assert len({len(p) for p in parts}) == 1
    assert all(len(np.unique(labels[p])) <= l for p in parts)
