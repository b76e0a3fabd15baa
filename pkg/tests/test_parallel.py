import numpy as np
import pytest

from muskat import parallel


@pytest.fixture(autouse=True)
def reset():
    yield
    parallel.set_workers(None)


def test_environment(monkeypatch):
    monkeypatch.delenv(parallel.ENV_VAR, raising=False)
    assert parallel.worker_count() == 1
    monkeypatch.setenv(parallel.ENV_VAR, "6")
    assert parallel.worker_count() == 6
    parallel.set_workers(2)
    assert parallel.worker_count() == 2


@pytest.mark.parametrize("raw", ["0", "-3", "two"])
def test_bad_environment(monkeypatch, raw):
    monkeypatch.setenv(parallel.ENV_VAR, raw)
    with pytest.raises(ValueError, match=parallel.ENV_VAR):
        parallel.worker_count()


def test_chunks_cover_range():
    sl = parallel.chunk_slices(70, 32)
    assert [(s.start, s.stop) for s in sl] == [(0, 32), (32, 64), (64, 70)]


def test_sum_is_independent_of_workers():
    rng = np.random.default_rng(0)
    data = rng.standard_normal((500, 17)) * 10.0 ** rng.integers(-8, 8, (500, 1))
    fn = lambda s: data[s].sum(axis=0)
    ref = parallel.ordered_sum(fn, 500, workers=1)
    for w in (2, 3, 8):
        assert np.array_equal(parallel.ordered_sum(fn, 500, workers=w), ref)


def test_empty():
    with pytest.raises(ValueError):
        parallel.ordered_sum(lambda s: 0.0, 0)
