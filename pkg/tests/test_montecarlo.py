import numpy as np
import pytest

from sarmanov_ruin import montecarlo as mc
from sarmanov_ruin.errors import ParameterError
from sarmanov_ruin.ruin_sim import ruin_curve


def _uniform_count(rng, m, cut):
    return np.array([int(np.sum(rng.random(m) > cut))])


def test_chunk_rng_depends_on_key_only():
    a = mc.chunk_rng(5, 2).random(4)
    b = mc.chunk_rng(5, 2).random(4)
    c = mc.chunk_rng(5, 3).random(4)
    d = mc.chunk_rng(5, 2, mc.STREAM_HILL).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


def test_chunk_rng_seed_range():
    with pytest.raises(ParameterError):
        mc.chunk_rng(-1, 0)


def test_chunk_sizes():
    assert mc.chunk_sizes(10, 4) == [4, 4, 2]
    assert mc.chunk_sizes(8, 4) == [4, 4]
    with pytest.raises(ParameterError):
        mc.chunk_sizes(0)


def test_workers_do_not_change_counts():
    serial = mc.merge_counts(mc.run_chunks(_uniform_count, 50_000, 3, args=(0.9,), chunk_size=7_000))
    parallel = mc.merge_counts(mc.run_chunks(_uniform_count, 50_000, 3, args=(0.9,),
                                             chunk_size=7_000, workers=3))
    assert np.array_equal(serial, parallel)


def test_ruin_counts_worker_independent(fgm_half):
    one = ruin_curve(fgm_half, [5.0], [3], 40_000, 2, chunk_size=10_000, workers=1)
    two = ruin_curve(fgm_half, [5.0], [3], 40_000, 2, chunk_size=10_000, workers=2)
    assert one[0].hits == two[0].hits


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv(mc.WORKERS_ENV, raising=False)
    assert mc.resolve_workers(None) == (1, "default")
    assert mc.resolve_workers(4) == (4, "flag")
    monkeypatch.setenv(mc.WORKERS_ENV, "2")
    assert mc.resolve_workers(4) == (2, "env")
    monkeypatch.setenv(mc.WORKERS_ENV, "many")
    with pytest.raises(ParameterError):
        mc.resolve_workers(None)


def test_merge_exact():
    big = np.array([2 ** 40], dtype=np.int64)
    assert mc.merge_counts([big, big, np.array([1])])[0] == 2 ** 41 + 1
