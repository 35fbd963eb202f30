import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hhgso.engine import EngineConfig
from hhgso.errors import ParseError, ResourceLimitError
from hhgso.covering import (
    CoveringArray,
    CoveringSpec,
    InteractionTuple,
    TupleSet,
    coverage_fitness,
    coverage_objective,
    decode_test,
    derive_seed,
    generate_array,
    parse_spec,
    read_array_json,
    read_array_text,
    verify_array,
)


def test_parse_simple():
    assert parse_spec("CA(2, 3^4)") == CoveringSpec(2, (3, 3, 3, 3))


def test_parse_mixed_and_size_prefix():
    assert parse_spec("CA(N; 3, 2^2 4^1)") == CoveringSpec(3, (2, 2, 4))
    assert parse_spec("ca(2,2 3 4)") == CoveringSpec(2, (2, 3, 4))


@pytest.mark.parametrize("text, pos", [
    ("CA(1, 3^4)", 3),
    ("CA(5, 3^4)", 3),
    ("CA(2, 1^4)", 6),
    ("CA(2, 3^4", 9),
    ("CA(2, 3^4) x", 11),
    ("XY(2, 3^4)", 0),
    ("CA(2, 3$4)", 7),
])
def test_parse_errors_have_positions(text, pos):
    with pytest.raises(ParseError) as err:
        parse_spec(text)
    assert err.value.position == pos


def test_label_roundtrip():
    spec = CoveringSpec(2, (3, 3, 2, 2, 2))
    assert spec.label == "CA(2, 3^2 2^3)"
    assert parse_spec(spec.label) == spec


def test_tuple_count_examples():
    assert CoveringSpec(2, (3,) * 4).tuple_count() == 54
    assert CoveringSpec(2, (2,) * 7).tuple_count() == 84
    assert CoveringSpec(3, (2, 2, 4)).tuple_count() == 16


specs = st.builds(
    lambda t, doms: CoveringSpec(t, tuple(doms)),
    st.integers(2, 3),
    st.lists(st.integers(2, 4), min_size=3, max_size=5),
)


@settings(max_examples=40, deadline=None)
@given(specs)
def test_tuple_set_matches_enumeration(spec):
    ts = TupleSet(spec)
    ref = oracles.all_tuples(spec.strength, spec.domains)
    assert len(ts) == len(ref) == spec.tuple_count()
    assert sorted((t.columns, t.values) for t in ts) == sorted(ref)


@settings(max_examples=40, deadline=None)
@given(specs, st.integers(0, 10_000))
def test_coverage_matches_oracle(spec, seed):
    g = np.random.default_rng(seed)
    ts = TupleSet(spec)
    remaining = oracles.all_tuples(spec.strength, spec.domains)
    for _ in range(4):
        test = [int(g.integers(0, v)) for v in spec.domains]
        hit = oracles.covered_by(test, remaining)
        assert coverage_fitness(test, ts) == len(hit)
        assert ts.commit(test) == len(hit)
        remaining = [t for t in remaining if t not in hit]
        assert len(ts) == len(remaining)
        # usage counts agree with a direct count over what is left
        for col in range(spec.parameters):
            for val in range(spec.domains[col]):
                n = sum(1 for c, v in remaining if col in c and v[c.index(col)] == val)
                assert ts.usage[col, val] == n


def test_discard_and_contains():
    ts = TupleSet(CoveringSpec(2, (2, 2, 2)))
    tup = InteractionTuple((0, 2), (1, 0))
    assert tup in ts
    assert ts.discard(tup) and tup not in ts
    assert not ts.discard(tup)
    assert len(ts) == 11
    assert InteractionTuple((0, 1, 2), (0, 0, 0)) not in ts


def test_tuple_cap():
    with pytest.raises(ResourceLimitError):
        TupleSet(CoveringSpec(2, (3,) * 4), cap=10)


def test_decode_test_floors_and_clips():
    spec = CoveringSpec(2, (3, 2, 4))
    np.testing.assert_array_equal(decode_test([2.99, 0.4, 5.0], spec), [2, 0, 3])
    np.testing.assert_array_equal(decode_test([-1.0, 1.999, 0.0], spec), [0, 1, 0])


def test_coverage_objective_orders_by_coverage():
    spec = CoveringSpec(2, (3,) * 4)
    ts = TupleSet(spec)
    ts.commit([0, 0, 0, 0])
    obj = coverage_objective(spec, ts)
    fresh = obj.evaluate(np.array([1.5, 1.5, 1.5, 1.5]))
    stale = obj.evaluate(np.array([0.5, 0.5, 0.5, 0.5]))
    partial = obj.evaluate(np.array([0.5, 0.5, 1.5, 1.5]))
    assert int(fresh) == 6 and int(stale) == 0 and int(partial) == 5
    assert fresh > partial > stale
    assert obj.to_cost(fresh) >= 0


def test_tie_break_off_is_pure_coverage():
    spec = CoveringSpec(2, (2,) * 4)
    ts = TupleSet(spec)
    obj = coverage_objective(spec, ts, tie_break=False)
    assert obj.evaluate(np.zeros(4)) == 6.0


def test_derive_seed_distinct():
    seeds = {derive_seed(b, r) for b in range(1, 40) for r in range(30)}
    assert len(seeds) == 39 * 30


def test_verify_accepts_orthogonal_array():
    # L9 orthogonal array: a CA(2, 3^4) with 9 rows
    l9 = [(i, j, (i + j) % 3, (i + 2 * j) % 3) for i in range(3) for j in range(3)]
    assert verify_array(l9, CoveringSpec(2, (3,) * 4)) == (True, None)


def test_verify_finds_missing():
    rows = [(0, 0), (1, 1)]
    ok, missing = verify_array(rows, CoveringSpec(2, (2, 2)))
    assert not ok and missing == InteractionTuple((0, 1), (0, 1))


def test_verify_rejects_out_of_domain():
    with pytest.raises(ValueError):
        verify_array([(0, 3)], CoveringSpec(2, (2, 2)))


def test_generate_small_array():
    spec = CoveringSpec(2, (2,) * 4)
    rows = []
    arr = generate_array(spec, EngineConfig.for_covering(seed=3),
                         on_row=lambda i, test, n, res: rows.append(n))
    assert verify_array(arr, spec)[0]
    assert arr.size >= spec.lower_bound()
    assert sum(rows) == spec.tuple_count()
    assert arr.remaining[-1] == 0
    assert all(a > b for a, b in zip(arr.remaining, arr.remaining[1:]))


def test_generate_deterministic():
    spec = CoveringSpec(2, (3, 2, 2))
    a = generate_array(spec, EngineConfig.for_covering(seed=9))
    b = generate_array(spec, EngineConfig.for_covering(seed=9))
    assert a.rows == b.rows


def test_zero_coverage_fallback(monkeypatch):
    # every search result decodes to the all-zero test, which covers nothing after row 1
    import hhgso.covering as cov
    monkeypatch.setattr(cov, "decode_test", lambda pos, spec: np.zeros(spec.parameters, int))
    spec = CoveringSpec(2, (2, 2, 2))
    cfg = EngineConfig(population_size=1, cluster_count=1, max_iterations=1,
                       max_fitness_evaluations=0, seed=0)
    arr = generate_array(spec, cfg)
    assert verify_array(arr, spec)[0]
    assert arr.rows[0] == (0, 0, 0)
    assert all(a > b for a, b in zip(arr.remaining, arr.remaining[1:]))


def test_array_text_roundtrip():
    spec = CoveringSpec(2, (2, 2, 3))
    arr = CoveringArray(spec, [(0, 1, 2), (1, 0, 0)], seed=4)
    back = read_array_text(arr.to_text())
    assert back.rows == arr.rows and back.spec == spec and back.seed == 4


def test_array_json_roundtrip():
    spec = CoveringSpec(2, (2, 2, 3))
    arr = CoveringArray(spec, [(0, 1, 2)], seed=None)
    d = json.loads(arr.to_json())
    assert d["rows"] == 1 and d["domains"] == [2, 2, 3]
    assert read_array_json(arr.to_json()).rows == arr.rows


def test_array_text_bad_header():
    with pytest.raises(ParseError):
        read_array_text("0 1 2\n")
    with pytest.raises(ParseError):
        read_array_text("# CA(2, 2^3) rows=3 seed=1\n0 0 0\n")
