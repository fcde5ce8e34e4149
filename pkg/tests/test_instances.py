import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parsicache.instances import (
    EmptyInputError,
    IngestionSpec,
    LowerBoundSpec,
    MissingColumnError,
    MissingFileError,
    export_csv,
    export_trace,
    ingest_csv,
    lower_bound_instance,
    lower_bound_phase,
    read_trace,
    zipf_trace,
)
from parsicache.policies import PolicyConfig, simulate
from parsicache.trace import build_trace, decompose_phases


def test_lower_bound_small_example():
    # P1 = {a, b}; permutation p1 = a, p2 = b; fresh page c
    tr = lower_bound_instance(LowerBoundSpec(2, 2), permutations=[[0, 1]])
    assert list(tr.requests) == [0, 1, 2, 2, 2, 1]


def test_lower_bound_phase_shape():
    f, perm = 9, [1, 2, 3]
    ph = lower_bound_phase(f, perm, 3)
    # f, <f>^3 p3, <f p3>^3 p2
    assert ph == [9] + [9] * 3 + [3] + [9, 3] * 3 + [2]
    assert 1 not in ph


def _by_hand_length(k, H):
    phase = 1 + sum(m * k + 1 for m in range(1, k))
    return k + (H - 1) * phase


@pytest.mark.parametrize("k, H", [(2, 1), (2, 2), (3, 4), (5, 3), (8, 6), (16, 2)])
def test_lower_bound_length(k, H):
    spec = LowerBoundSpec(k, H, seed=1)
    tr = lower_bound_instance(spec)
    assert len(tr) == spec.length == _by_hand_length(k, H)
    assert spec.length == k + (H - 1) * (k * k * (k - 1) // 2 + k)


def test_lower_bound_fif_and_phases():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = int(rng.integers(2, 17))
        H = int(rng.integers(1, 21)) if k <= 8 else int(rng.integers(1, 6))
        tr = lower_bound_instance(LowerBoundSpec(k, H, seed=int(rng.integers(1 << 30))))
        ph = decompose_phases(tr, k)
        assert len(ph) == H
        assert ph.ell == (k,) + (1,) * (H - 1)
        assert all(len(d) == k for d in ph.distinct)
        assert simulate(PolicyConfig("FiF"), tr, k, opt_cost=1).misses == k + H - 1


def test_lower_bound_deterministic_and_validated():
    a = lower_bound_instance(LowerBoundSpec(4, 5, seed=3))
    b = lower_bound_instance(LowerBoundSpec(4, 5, seed=3))
    assert a.requests == b.requests
    assert a.requests != lower_bound_instance(LowerBoundSpec(4, 5, seed=4)).requests
    with pytest.raises(ValueError):
        LowerBoundSpec(1, 3)
    with pytest.raises(ValueError):
        LowerBoundSpec(3, 0)
    with pytest.raises(ValueError):
        lower_bound_instance(LowerBoundSpec(2, 2), permutations=[[0, 5]])


def test_zipf_uniform_at_zero_exponent():
    n, u = 100_000, 10
    tr = zipf_trace(n, u, 0.0, seed=1)
    counts = np.bincount(tr.requests, minlength=u) / n
    sd = math.sqrt((1 / u) * (1 - 1 / u) / n)
    assert np.all(np.abs(counts - 1 / u) <= 3 * sd)


def test_zipf_examples():
    assert set(zipf_trace(50, 1, 1.0).requests) == {0}
    assert zipf_trace(500, 40, 0.9, seed=5).requests == zipf_trace(500, 40, 0.9, seed=5).requests
    tr = zipf_trace(20000, 50, 1.0, seed=2)
    counts = np.bincount(tr.requests, minlength=50)
    assert counts[0] == counts.max()
    with pytest.raises(ValueError):
        zipf_trace(0, 5, 1.0)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_ingest_examples(tmp_path):
    p = _write(tmp_path / "t.csv", "station,other\ns1,x\ns2,y\ns1,z\n")
    res = ingest_csv(IngestionSpec(p, "station"))
    assert list(res.trace.requests) == [0, 1, 0]
    assert res.intern == {"s1": 0, "s2": 1}
    assert res.distinct == 2
    res = ingest_csv(IngestionSpec(p, "station", limit=2))
    assert list(res.trace.requests) == [0, 1]


def test_ingest_quoted_fields(tmp_path):
    p = _write(tmp_path / "q.csv", 'id,name\n1,"Broadway, W 60 St"\n2,"E ""Q"" St"\n3,"Broadway, W 60 St"\n')
    res = ingest_csv(IngestionSpec(p, "name"))
    assert list(res.trace.requests) == [0, 1, 0]
    assert res.intern == {"Broadway, W 60 St": 0, 'E "Q" St': 1}


def test_ingest_trivial_flag(tmp_path):
    p = tmp_path / "many.csv"
    _write(p, "k\n" + "".join(f"s{i % 499}\n" for i in range(3000)))
    res = ingest_csv(IngestionSpec(p, "k"), k=500)
    assert res.distinct == 499 and res.trivial
    assert not ingest_csv(IngestionSpec(p, "k"), k=499).trivial
    assert ingest_csv(IngestionSpec(p, "k", min_distinct=600), k=10).trivial


def test_ingest_errors(tmp_path):
    with pytest.raises(MissingFileError) as e:
        ingest_csv(IngestionSpec(tmp_path / "nope.csv", "k"))
    assert e.value.code == "missing_file"
    p = _write(tmp_path / "a.csv", "x,y\n1,2\n")
    with pytest.raises(MissingColumnError) as e:
        ingest_csv(IngestionSpec(p, "k"))
    assert e.value.code == "missing_column"
    with pytest.raises(EmptyInputError) as e:
        ingest_csv(IngestionSpec(_write(tmp_path / "b.csv", "k\n"), "k"))
    assert e.value.code == "no_rows"
    with pytest.raises(EmptyInputError):
        ingest_csv(IngestionSpec(_write(tmp_path / "c.csv", ""), "k"))
    assert len({MissingFileError.code, MissingColumnError.code, EmptyInputError.code}) == 3
    with pytest.raises(ValueError):
        IngestionSpec(p, "k", limit=0)


def test_ingest_skips_malformed_rows(tmp_path, caplog):
    p = _write(tmp_path / "m.csv", "k,v\na,1\n,2\nb,3,extra\nc,4\na,5\n")
    res = ingest_csv(IngestionSpec(p, "k"))
    assert list(res.trace.requests) == [0, 1, 0]
    assert res.skipped == 2
    assert "skipped 2 malformed rows" in caplog.text


@given(st.lists(st.integers(0, 30), min_size=1, max_size=60))
def test_export_ingest_roundtrip(reqs):
    import tempfile
    from pathlib import Path

    tr = build_trace(reqs)
    with tempfile.TemporaryDirectory() as d:
        csv_path = Path(d) / "t.csv"
        export_csv(tr, csv_path)
        res = ingest_csv(IngestionSpec(csv_path, "page", limit=10**6))
        back = [int(key) for key in sorted(res.intern, key=res.intern.get)]
        assert [back[i] for i in res.trace.requests] == reqs
        tpath = Path(d) / "t.trace"
        export_trace(res.trace, tpath, res.intern)
        assert read_trace(tpath).requests == res.trace.requests
        assert json.loads(Path(f"{tpath}.intern.json").read_text()) == res.intern


def test_export_with_intern_keeps_original_keys(tmp_path):
    p = _write(tmp_path / "s.csv", "station\nW 52 St\nE 2 Ave\nW 52 St\n")
    res = ingest_csv(IngestionSpec(p, "station"))
    out = tmp_path / "again.csv"
    export_csv(res.trace, out, column="station", intern=res.intern)
    again = ingest_csv(IngestionSpec(out, "station"))
    assert again.trace.requests == res.trace.requests
    assert again.intern == res.intern
