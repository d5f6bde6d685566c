import json
import multiprocessing as mp
import warnings

import numpy as np
import pytest

from critsys import cache as cache_mod
from critsys.cache import (
    BubbleCache,
    CorruptFile,
    cache_key,
    cache_roundtrip,
    dumps,
    load_solution,
    loads,
    save_solution,
    write_atomic,
)
from critsys.errors import DomainError
from critsys.hyperbola import classify


def test_roundtrip_bit_exact(sym4, tmp_path):
    back = cache_roundtrip(sym4, tmp_path)
    assert back.beta_star == sym4.beta_star
    for k in ("r", "U", "V", "dU", "dV"):
        assert np.array_equal(getattr(back.profile, k), getattr(sym4.profile, k))
    assert back.tail.as_dict() == sym4.tail.as_dict()
    r = np.geomspace(1e-3, 1e5, 200)
    assert np.array_equal(back.U(r), sym4.U(r)) and np.array_equal(back.dV(r), sym4.dV(r))


def test_dumps_deterministic(sym4):
    text = dumps(sym4)
    assert text == dumps(sym4) == dumps(loads(text))


def test_tampered_checksum(sym4, tmp_path):
    path = tmp_path / "b.json"
    save_solution(sym4, path)
    doc = json.loads(path.read_text())
    doc["payload"]["beta_star"] = doc["payload"]["beta_star"] * (1 + 1e-15) + 1e-15
    path.write_text(json.dumps(doc))
    with pytest.raises(CorruptFile):
        load_solution(path)
    path.write_text("{not json")
    with pytest.raises(CorruptFile):
        load_solution(path)
    with pytest.raises(DomainError):
        load_solution(tmp_path / "missing.json")


def test_corrupt_entry_is_recomputed(tmp_path):
    pair = classify(6, 2, 2)
    store = BubbleCache(tmp_path)
    sol, status, path = store.get_or_solve(pair, 1e-12, 1e3, 2000)
    assert status == "miss"
    assert store.get_or_solve(pair, 1e-12, 1e3, 2000)[1] == "hit"
    path.write_text(path.read_text().replace('"checksum":"', '"checksum":"0', 1))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        again, status, _ = store.get_or_solve(pair, 1e-12, 1e3, 2000)
    assert status == "miss"
    assert any("ignoring cache entry" in str(w.message) for w in caught)
    assert again.beta_star == sol.beta_star
    assert store.get_or_solve(pair, 1e-12, 1e3, 2000)[1] == "hit"


def test_stale_format_rejected(sym4, monkeypatch):
    doc = json.loads(dumps(sym4))
    doc["payload"]["format"] = 0
    payload = cache_mod.canonical_json(doc["payload"])
    text = '{"checksum":"%s","payload":%s}' % (cache_mod._checksum(payload), payload)
    with pytest.raises(DomainError, match="format"):
        loads(text)
    key = cache_key(4, 3, 3, 1e-13, 1e3, 4000)
    monkeypatch.setattr(cache_mod, "__version__", "0.0.0-stale")
    assert cache_key(4, 3, 3, 1e-13, 1e3, 4000) != key


def test_cache_key_depends_on_inputs():
    base = cache_key(4, 3, 3, 1e-13, 1e3, 4000)
    assert base == cache_key(4, 3.0, 3.0, 1e-13, 1000.0, 4000)
    assert base != cache_key(4, 3, 3, 1e-12, 1e3, 4000)
    assert base != cache_key(4, 3, 3, 1e-13, 2e3, 4000)
    assert base != cache_key(4, 3, 3, 1e-13, 1e3, 4001)


def test_env_directory(monkeypatch, tmp_path):
    monkeypatch.setenv("CRITSYS_CACHE_DIR", str(tmp_path / "c"))
    assert BubbleCache().directory == tmp_path / "c"


def _writer(path, text, repeats):
    for _ in range(repeats):
        write_atomic(path, text)


def test_concurrent_writers_atomic(tmp_path):
    path = tmp_path / "shared.json"
    texts = [f"writer {i} " * 20000 for i in range(4)]
    ctx = mp.get_context("fork")
    procs = [ctx.Process(target=_writer, args=(path, t, 25)) for t in texts]
    for p in procs:
        p.start()
    for p in procs:
        p.join()
    assert all(p.exitcode == 0 for p in procs)
    assert path.read_text() in texts
    assert sorted(x.name for x in tmp_path.iterdir()) == ["shared.json"]
